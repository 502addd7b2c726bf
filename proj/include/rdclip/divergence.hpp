// Copyright 2026 The rdclip Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0

#ifndef RDCLIP_DIVERGENCE_HPP
#define RDCLIP_DIVERGENCE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "rdclip/numerics.hpp"
#include "rdclip/posterior.hpp"

namespace rdclip {

/// Arguments of ln Gamma inside (0, kLogGammaMargin] are treated as
/// infeasible: the singularity at zero poisons max statistics long before the
/// argument underflows.
inline constexpr double kLogGammaMargin = 1e-12;

/// The three summands of the closed-form Renyi divergence upper bound between
/// two Dirichlet-Process posteriors: the global pseudo-count line, the
/// per-component pseudo-count line, and the Gaussian mean/std line.
struct RenyiTerms {
  double global_alpha = 0.0;
  double local_alpha = 0.0;
  double gaussian = 0.0;
  double total = 0.0;
};

/// Infeasibility is a value, not an exception: an audit over many pairs must
/// record bad pairs without aborting.
struct Infeasibility {
  enum class Kind { SigmaRadicand, LogGammaArgument };
  Kind kind = Kind::SigmaRadicand;
  std::string term;         // "global_alpha", "local_alpha", "gaussian"
  std::size_t component = 0;
  std::size_t dimension = 0;  // meaningful for sigma radicands only
  double value = 0.0;         // the offending radicand or ln-gamma argument

  std::string describe() const {
    std::string what = kind == Kind::SigmaRadicand
                           ? "sigma-prime radicand"
                           : "log-gamma argument";
    return what + " " + std::to_string(value) + " in term " + term +
           " at component " + std::to_string(component) + ", dimension " +
           std::to_string(dimension);
  }
};

using SigmaPrimeResult = std::variant<RealVec, Infeasibility>;
using RenyiOutcome = std::variant<RenyiTerms, Infeasibility>;

/// Elementwise sqrt((1-lambda) * sigma_qp^2 + lambda * sigma_q^2), or the
/// first offending dimension when a radicand is non-positive.
inline SigmaPrimeResult sigma_prime(const RealVec& sigma_q,
                                    const RealVec& sigma_qp, double lambda) {
  if (sigma_q.size() != sigma_qp.size()) {
    throw std::invalid_argument("sigma_prime: length mismatch");
  }
  std::vector<double> out(sigma_q.size());
  for (std::size_t j = 0; j < sigma_q.size(); ++j) {
    const double radicand = (1.0 - lambda) * sigma_qp[j] * sigma_qp[j] +
                            lambda * sigma_q[j] * sigma_q[j];
    if (!(radicand > 0.0)) {
      return Infeasibility{Infeasibility::Kind::SigmaRadicand, "gaussian", 0,
                           j, radicand};
    }
    out[j] = std::sqrt(radicand);
  }
  return RealVec(std::move(out));
}

namespace detail {

// One ln-gamma triple of the bound:
//   (1/(l-1)) lnG(l*a - (l-1)*ap) + lnG(ap) - (l/(l-1)) lnG(a)
// Returns false and fills `inf` if any argument is not safely positive.
inline bool log_gamma_triple(double a, double ap, double lambda,
                             const char* term, std::size_t component,
                             double& out, Infeasibility& inf) {
  const double mixed = lambda * a - (lambda - 1.0) * ap;
  for (double arg : {mixed, ap, a}) {
    if (!(arg > kLogGammaMargin)) {
      inf = Infeasibility{Infeasibility::Kind::LogGammaArgument, term,
                          component, 0, arg};
      return false;
    }
  }
  out = log_gamma(mixed) / (lambda - 1.0) + log_gamma(ap) -
        lambda / (lambda - 1.0) * log_gamma(a);
  return true;
}

}  // namespace detail

/// Closed-form upper bound on the order-lambda Renyi divergence between two
/// Dirichlet-Process posteriors q and qp.
inline RenyiOutcome renyi_bound(const DpPosterior& q, const DpPosterior& qp,
                                double lambda) {
  if (!(lambda > 1.0)) {
    throw std::invalid_argument("renyi_bound: lambda must exceed 1");
  }
  const std::size_t k = q.n_components();
  if (k == 0 || qp.n_components() != k || q.dim() != qp.dim()) {
    throw std::invalid_argument("renyi_bound: incompatible posteriors");
  }

  RenyiTerms terms;
  Infeasibility inf;

  double global = 0.0;
  if (!detail::log_gamma_triple(q.alpha_total(), qp.alpha_total(), lambda,
                                "global_alpha", 0, global, inf)) {
    return inf;
  }
  terms.global_alpha = -global;

  double local_sum = 0.0;
  double gaussian_sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double kappa = q.kappas[i];
    double local = 0.0;
    if (!detail::log_gamma_triple(q.alphas[i] / kappa, qp.alphas[i] / kappa,
                                  lambda, "local_alpha", i, local, inf)) {
      return inf;
    }
    local_sum += kappa * local;

    auto sp = sigma_prime(q.stds[i], qp.stds[i], lambda);
    if (auto* bad = std::get_if<Infeasibility>(&sp)) {
      bad->component = i;
      return *bad;
    }
    const RealVec& sprime = std::get<RealVec>(sp);
    double mean_part = 0.0;
    double log_part = 0.0;
    for (std::size_t j = 0; j < q.dim(); ++j) {
      const double diff = (q.means[i][j] - qp.means[i][j]) / sprime[j];
      mean_part += diff * diff;
      log_part += std::log(sprime[j]) -
                  (1.0 - lambda) * std::log(qp.stds[i][j]) -
                  lambda * std::log(q.stds[i][j]);
    }
    gaussian_sum +=
        kappa * (lambda / 2.0 * mean_part + log_part / (1.0 - lambda));
  }
  terms.local_alpha = local_sum;
  terms.gaussian = gaussian_sum;
  terms.total = terms.global_alpha + terms.local_alpha + terms.gaussian;
  if (!std::isfinite(terms.total)) {
    return Infeasibility{Infeasibility::Kind::LogGammaArgument, "total", 0, 0,
                         terms.total};
  }
  return terms;
}

struct PairResult {
  std::string id_q;
  std::string id_qp;
  double divergence = 0.0;  // +inf when infeasible
  bool feasible = true;
};

/// Pairwise divergence statistics. `max` is forced to +inf when any pair is
/// infeasible; `avg` covers feasible pairs only.
struct RenyiReport {
  std::vector<PairResult> pairs;
  double max = 0.0;
  double avg = 0.0;
  std::size_t n_infeasible = 0;

  bool has_infeasible() const { return n_infeasible > 0; }
};

enum class PairMode { VsAllPairs, VsPrior };

inline constexpr const char* kPriorId = "__prior__";

/// Evaluates the bound over all ordered distinct pairs (VsAllPairs) or each
/// example against the prior-as-posterior (VsPrior). Pairs are emitted in
/// lexicographic id order.
inline RenyiReport pairwise_report(const PosteriorDataset& ds, PairMode mode) {
  if (mode == PairMode::VsAllPairs && ds.examples.size() < 2) {
    throw std::invalid_argument(
        "pairwise_report: need at least 2 examples for vs_all_pairs");
  }
  if (ds.examples.empty()) {
    throw std::invalid_argument("pairwise_report: empty dataset");
  }

  std::vector<std::size_t> order(ds.examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&ds](std::size_t a, std::size_t b) {
    return ds.examples[a].first < ds.examples[b].first;
  });

  RenyiReport report;
  report.max = -std::numeric_limits<double>::infinity();
  double sum = 0.0, comp = 0.0;  // Kahan
  std::size_t n_feasible = 0;

  auto record = [&](const std::string& id_q, const std::string& id_qp,
                    const RenyiOutcome& outcome) {
    PairResult r{id_q, id_qp, 0.0, true};
    if (const auto* terms = std::get_if<RenyiTerms>(&outcome)) {
      r.divergence = terms->total;
      report.max = std::max(report.max, terms->total);
      const double y = terms->total - comp;
      const double t = sum + y;
      comp = (t - sum) - y;
      sum = t;
      ++n_feasible;
    } else {
      r.divergence = std::numeric_limits<double>::infinity();
      r.feasible = false;
      ++report.n_infeasible;
    }
    report.pairs.push_back(std::move(r));
  };

  if (mode == PairMode::VsAllPairs) {
    for (std::size_t a : order) {
      for (std::size_t b : order) {
        if (a == b) continue;
        record(ds.examples[a].first, ds.examples[b].first,
               renyi_bound(ds.examples[a].second, ds.examples[b].second,
                           ds.lambda));
      }
    }
  } else {
    const std::size_t k = ds.examples.front().second.n_components();
    const DpPosterior prior_post = prior_as_posterior(ds.prior, k);
    for (std::size_t a : order) {
      record(ds.examples[a].first, kPriorId,
             renyi_bound(ds.examples[a].second, prior_post, ds.lambda));
    }
  }

  report.avg = n_feasible > 0 ? sum / static_cast<double>(n_feasible)
                              : std::numeric_limits<double>::quiet_NaN();
  if (report.n_infeasible > 0) {
    report.max = std::numeric_limits<double>::infinity();
  } else if (n_feasible == 0) {
    report.max = std::numeric_limits<double>::quiet_NaN();
  }
  return report;
}

namespace detail {

inline std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace detail

/// Delimiter-separated export: one row per ordered pair, then summary rows.
inline void write_report(const RenyiReport& report, std::ostream& out) {
  out << "id_q,id_qp,divergence,feasible\n";
  for (const auto& p : report.pairs) {
    out << p.id_q << ',' << p.id_qp << ',' << detail::format_real(p.divergence)
        << ',' << (p.feasible ? "true" : "false") << '\n';
  }
  out << "max," << detail::format_real(report.max) << '\n';
  out << "avg," << detail::format_real(report.avg) << '\n';
  out << "n_infeasible," << report.n_infeasible << '\n';
}

}  // namespace rdclip

#endif  // RDCLIP_DIVERGENCE_HPP

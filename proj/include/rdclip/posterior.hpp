// Copyright 2026 The rdclip Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0

#ifndef RDCLIP_POSTERIOR_HPP
#define RDCLIP_POSTERIOR_HPP

#include <cstddef>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "rdclip/numerics.hpp"

namespace rdclip {

/// Data-independent prior: one Gaussian component shape plus a total prior
/// pseudo-count that is split uniformly when the prior is materialized as a
/// posterior.
struct PriorSpec {
  RealVec mean;
  RealVec std;
  double alpha0_prior = 1.0;

  std::size_t dim() const { return mean.size(); }
};

/// Variational parameters of one example: n+1 Gaussian components with
/// per-component pseudo-counts. kappa is the per-component sample count and
/// is 1 unless explicitly overridden.
struct DpPosterior {
  std::vector<RealVec> means;
  std::vector<RealVec> stds;
  std::vector<double> alphas;
  std::vector<double> kappas;

  std::size_t n_components() const { return means.size(); }
  std::size_t dim() const { return means.empty() ? 0 : means[0].size(); }

  /// Total pseudo-count alpha_0. Always recomputed, never stored.
  double alpha_total() const {
    double s = 0.0;
    for (double a : alphas) s += a;
    return s;
  }
};

struct PosteriorDataset {
  double lambda = 1.1;  // Renyi order, > 1
  PriorSpec prior;
  std::vector<std::pair<std::string, DpPosterior>> examples;
};

struct Violation {
  std::string example_id;  // empty for prior / dataset-level violations
  int component = -1;      // -1 when not component-specific
  std::string field;
  std::string rule;
};

inline std::vector<Violation> validate(const PosteriorDataset& ds) {
  std::vector<Violation> out;
  auto add = [&out](std::string id, int comp, std::string field,
                    std::string rule) {
    out.push_back({std::move(id), comp, std::move(field), std::move(rule)});
  };

  if (ds.lambda <= 1.0) {
    add("", -1, "lambda", "Renyi order must exceed 1");
  }
  const std::size_t d = ds.prior.dim();
  if (d == 0) {
    add("", -1, "prior.mean", "dimension must be at least 1");
  }
  if (ds.prior.std.size() != d) {
    add("", -1, "prior.std", "length must match prior mean dimension");
  }
  for (std::size_t j = 0; j < ds.prior.std.size(); ++j) {
    if (ds.prior.std[j] <= 0.0) {
      add("", static_cast<int>(j), "prior.std", "must be strictly positive");
    }
  }
  if (ds.prior.alpha0_prior <= 0.0) {
    add("", -1, "prior.alpha0_prior", "must be strictly positive");
  }

  std::set<std::string> seen_ids;
  std::size_t shared_k = 0;
  bool shared_k_set = false;
  for (const auto& [id, p] : ds.examples) {
    if (!seen_ids.insert(id).second) {
      add(id, -1, "id", "example ids must be unique");
    }
    const std::size_t k = p.n_components();
    if (k == 0) {
      add(id, -1, "means", "at least one component required");
      continue;
    }
    if (!shared_k_set) {
      shared_k = k;
      shared_k_set = true;
    } else if (k != shared_k) {
      add(id, -1, "means", "all posteriors must share component count");
    }
    if (p.stds.size() != k || p.alphas.size() != k || p.kappas.size() != k) {
      add(id, -1, "stds/alphas/kappas", "list lengths must match means");
      continue;
    }
    for (std::size_t i = 0; i < k; ++i) {
      const int ci = static_cast<int>(i);
      if (p.means[i].size() != d) {
        add(id, ci, "means", "dimension must match prior");
      }
      if (p.stds[i].size() != d) {
        add(id, ci, "stds", "dimension must match prior");
      }
      for (std::size_t j = 0; j < p.stds[i].size(); ++j) {
        if (p.stds[i][j] <= 0.0) {
          add(id, ci, "stds", "must be strictly positive");
          break;
        }
      }
      if (p.alphas[i] <= 0.0) {
        add(id, ci, "alphas", "must be strictly positive");
      }
      if (p.kappas[i] <= 0.0) {
        add(id, ci, "kappas", "must be strictly positive");
      }
    }
  }
  return out;
}

/// Materializes the worst-case counterpart q': every component carries the
/// prior mean and std, and the prior pseudo-count is split uniformly.
inline DpPosterior prior_as_posterior(const PriorSpec& p,
                                      std::size_t n_plus_1) {
  if (n_plus_1 < 1) {
    throw std::invalid_argument("prior_as_posterior: need n+1 >= 1");
  }
  DpPosterior out;
  const double alpha = p.alpha0_prior / static_cast<double>(n_plus_1);
  out.means.assign(n_plus_1, p.mean);
  out.stds.assign(n_plus_1, p.std);
  out.alphas.assign(n_plus_1, alpha);
  out.kappas.assign(n_plus_1, 1.0);
  return out;
}

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline RealVec vec_from_json(const nlohmann::json& j, const char* where) {
  if (!j.is_array()) {
    throw ParseError(std::string(where) + ": expected an array of reals");
  }
  std::vector<double> v;
  v.reserve(j.size());
  for (const auto& x : j) {
    if (!x.is_number()) {
      throw ParseError(std::string(where) + ": expected a real number");
    }
    v.push_back(x.get<double>());
  }
  return RealVec(std::move(v));
}

}  // namespace detail

inline PosteriorDataset load_dataset(std::istream& in) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.what());  // nlohmann reports byte position
  }
  try {
    PosteriorDataset ds;
    ds.lambda = j.at("lambda").get<double>();
    if (!(ds.lambda > 1.0)) {
      throw ParseError("lambda: Renyi order must exceed 1");
    }
    const auto& jp = j.at("prior");
    ds.prior.mean = detail::vec_from_json(jp.at("mean"), "prior.mean");
    ds.prior.std = detail::vec_from_json(jp.at("std"), "prior.std");
    ds.prior.alpha0_prior = jp.at("alpha0_prior").get<double>();
    for (const auto& je : j.at("examples")) {
      DpPosterior p;
      const std::string id = je.at("id").get<std::string>();
      for (const auto& row : je.at("means")) {
        p.means.push_back(detail::vec_from_json(row, "means"));
      }
      for (const auto& row : je.at("stds")) {
        p.stds.push_back(detail::vec_from_json(row, "stds"));
      }
      for (const auto& a : je.at("alphas")) {
        p.alphas.push_back(a.get<double>());
      }
      if (je.contains("kappas")) {
        for (const auto& k : je.at("kappas")) {
          p.kappas.push_back(k.get<double>());
        }
      } else {
        p.kappas.assign(p.means.size(), 1.0);
      }
      ds.examples.emplace_back(id, std::move(p));
    }
    return ds;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(e.what());
  }
}

inline PosteriorDataset load_dataset(const std::string& text) {
  std::istringstream in(text);
  return load_dataset(in);
}

inline void save_dataset(const PosteriorDataset& ds, std::ostream& out) {
  nlohmann::json j;
  j["lambda"] = ds.lambda;
  j["prior"] = {{"mean", ds.prior.mean.data()},
                {"std", ds.prior.std.data()},
                {"alpha0_prior", ds.prior.alpha0_prior}};
  j["examples"] = nlohmann::json::array();
  for (const auto& [id, p] : ds.examples) {
    nlohmann::json je;
    je["id"] = id;
    je["means"] = nlohmann::json::array();
    for (const auto& m : p.means) je["means"].push_back(m.data());
    je["stds"] = nlohmann::json::array();
    for (const auto& s : p.stds) je["stds"].push_back(s.data());
    je["alphas"] = p.alphas;
    je["kappas"] = p.kappas;
    j["examples"].push_back(std::move(je));
  }
  out << j.dump(2) << '\n';
}

inline std::string save_dataset(const PosteriorDataset& ds) {
  std::ostringstream out;
  save_dataset(ds, out);
  return out.str();
}

}  // namespace rdclip

#endif  // RDCLIP_POSTERIOR_HPP

// Copyright 2026 The rdclip Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0

#ifndef RDCLIP_CLIPPING_HPP
#define RDCLIP_CLIPPING_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "rdclip/divergence.hpp"
#include "rdclip/numerics.hpp"
#include "rdclip/posterior.hpp"

namespace rdclip {

/// Pseudo-counts may never reach the ln-gamma singularity at zero, so the
/// runtime floor is never below this even when the configured minimum is 0.
inline constexpr double kAlphaFloorEps = 1e-3;

/// Constraint budget: L2 ball radius on means, clamp range on pseudo-counts,
/// and the Renyi order that fixes the std lower bound.
struct ClipConfig {
  double c_mu = 2.0;
  double c_alpha_min = 0.0;
  double c_alpha_max = 0.5;
  double lambda = 1.1;

  double effective_alpha_floor() const {
    return std::max(c_alpha_min, kAlphaFloorEps);
  }
};

inline ClipConfig load_clip_config(std::istream& in) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.what());
  }
  try {
    ClipConfig cfg;
    cfg.c_mu = j.at("c_mu").get<double>();
    cfg.c_alpha_min = j.at("c_alpha_min").get<double>();
    cfg.c_alpha_max = j.at("c_alpha_max").get<double>();
    cfg.lambda = j.at("lambda").get<double>();
    if (!(cfg.lambda > 1.0)) {
      throw ParseError("clip config: lambda must exceed 1");
    }
    if (!(cfg.c_mu > 0.0) || !(cfg.c_alpha_max > 0.0) ||
        cfg.c_alpha_min < 0.0 || cfg.c_alpha_min >= cfg.c_alpha_max) {
      throw ParseError("clip config: invalid constraint budget");
    }
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(e.what());
  }
}

/// Projects mu onto the L2 ball of radius c_mu centered at the prior mean.
/// Points inside (or within rounding of) the ball pass through unchanged,
/// which makes the projection idempotent bit-for-bit.
inline RealVec clip_mean(const RealVec& mu, const RealVec& prior_mean,
                         double c_mu) {
  if (mu.empty()) {
    throw std::invalid_argument("clip_mean: empty vector");
  }
  if (mu.size() != prior_mean.size()) {
    throw std::invalid_argument("clip_mean: length mismatch");
  }
  std::vector<double> diff(mu.size());
  for (std::size_t j = 0; j < mu.size(); ++j) {
    diff[j] = mu[j] - prior_mean[j];
  }
  const double dist = l2_norm(std::span<const double>(diff));
  if (dist <= c_mu * (1.0 + 1e-13)) {
    return mu;
  }
  const double scale = c_mu / dist;
  std::vector<double> out(mu.size());
  for (std::size_t j = 0; j < mu.size(); ++j) {
    out[j] = prior_mean[j] + scale * diff[j];
  }
  return RealVec(std::move(out));
}

/// Lower-bound factor sqrt((lambda-1)/lambda) on the posterior std relative
/// to the worst-case (prior) std.
inline double sigma_floor_factor(double lambda) {
  return std::sqrt((lambda - 1.0) / lambda);
}

/// The exact floor sqrt((lambda-1)/lambda) * prior_std sits on the closure of
/// the feasible set: its sigma-prime radicand against the prior is zero, which
/// still makes the bound undefined. This returns the smallest double strictly
/// inside the feasible set, a few ulps above the closed-form value.
inline double sigma_floor_value(double lambda, double prior_std) {
  double v = sigma_floor_factor(lambda) * prior_std;
  while ((1.0 - lambda) * prior_std * prior_std + lambda * v * v <= 0.0) {
    v = std::nextafter(v, std::numeric_limits<double>::infinity());
  }
  return v;
}

/// Elementwise max(sigma, sigma_floor_value(lambda, prior_std)).
inline RealVec clip_sigma(const RealVec& sigma, const RealVec& prior_std,
                          double lambda) {
  if (sigma.size() != prior_std.size()) {
    throw std::invalid_argument("clip_sigma: length mismatch");
  }
  std::vector<double> out(sigma.size());
  for (std::size_t j = 0; j < sigma.size(); ++j) {
    if (!(prior_std[j] > 0.0)) {
      throw std::invalid_argument("clip_sigma: nonpositive prior std");
    }
    out[j] = std::max(sigma[j], sigma_floor_value(lambda, prior_std[j]));
  }
  return RealVec(std::move(out));
}

/// clamp(alpha, max(c_alpha_min, 1e-3), c_alpha_max).
inline double clip_alpha(double alpha, const ClipConfig& cfg) {
  return std::clamp(alpha, cfg.effective_alpha_floor(), cfg.c_alpha_max);
}

/// Applies all three operators per component. Idempotent.
inline DpPosterior clip_posterior(const DpPosterior& p, const PriorSpec& prior,
                                  const ClipConfig& cfg) {
  DpPosterior out;
  out.kappas = p.kappas;
  out.means.reserve(p.n_components());
  out.stds.reserve(p.n_components());
  out.alphas.reserve(p.n_components());
  for (std::size_t i = 0; i < p.n_components(); ++i) {
    out.means.push_back(clip_mean(p.means[i], prior.mean, cfg.c_mu));
    out.stds.push_back(clip_sigma(p.stds[i], prior.std, cfg.lambda));
    out.alphas.push_back(clip_alpha(p.alphas[i], cfg));
  }
  return out;
}

inline PosteriorDataset clip_dataset(const PosteriorDataset& ds,
                                     const ClipConfig& cfg) {
  PosteriorDataset out;
  out.lambda = ds.lambda;
  out.prior = ds.prior;
  out.examples.reserve(ds.examples.size());
  for (const auto& [id, p] : ds.examples) {
    out.examples.emplace_back(id, clip_posterior(p, ds.prior, cfg));
  }
  return out;
}

/// Machine-checkable proof that a clipped dataset cannot produce an undefined
/// bound term. `feasible` is an exhaustive check over all ordered pairs plus
/// the prior; `structurally_guaranteed` is the a-priori arithmetic condition
/// lambda * floor - (lambda - 1) * cap > 0 that makes the exhaustive check
/// redundant.
struct FeasibilityCertificate {
  bool feasible = true;
  bool structurally_guaranteed = false;
  std::vector<std::string> violations;
};

inline FeasibilityCertificate feasibility_certificate(
    const PosteriorDataset& ds_clipped, const ClipConfig& cfg) {
  FeasibilityCertificate cert;
  const double floor = cfg.effective_alpha_floor();
  cert.structurally_guaranteed =
      cfg.lambda * floor - (cfg.lambda - 1.0) * cfg.c_alpha_max > 0.0;
  if (!cert.structurally_guaranteed) {
    cert.violations.push_back(
        "at-risk: lambda*floor - (lambda-1)*cap = " +
        std::to_string(cfg.lambda * floor -
                       (cfg.lambda - 1.0) * cfg.c_alpha_max) +
        " is not positive; ln-gamma feasibility not guaranteed a priori");
  }

  std::vector<std::pair<std::string, const DpPosterior*>> all;
  for (const auto& [id, p] : ds_clipped.examples) {
    all.emplace_back(id, &p);
  }
  DpPosterior prior_post;
  if (!ds_clipped.examples.empty()) {
    prior_post = prior_as_posterior(
        ds_clipped.prior, ds_clipped.examples.front().second.n_components());
    all.emplace_back(kPriorId, &prior_post);
  }
  for (const auto& [id_q, q] : all) {
    for (const auto& [id_qp, qp] : all) {
      if (q == qp) continue;
      auto outcome = renyi_bound(*q, *qp, cfg.lambda);
      if (const auto* inf = std::get_if<Infeasibility>(&outcome)) {
        cert.feasible = false;
        cert.violations.push_back("pair (" + id_q + ", " + id_qp + "): " +
                                  inf->describe());
      }
    }
  }
  return cert;
}

}  // namespace rdclip

#endif  // RDCLIP_CLIPPING_HPP

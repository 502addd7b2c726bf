// Copyright 2026 The rdclip Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0

// Acceptance gate: one pass/fail line per criterion, nonzero exit on any
// failure. Each criterion also enforces its runtime limit.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <variant>

#include "rdclip/accountant.hpp"
#include "rdclip/bottleneck.hpp"
#include "rdclip/clipping.hpp"
#include "rdclip/divergence.hpp"
#include "rdclip/experiment.hpp"
#include "rdclip/numerics.hpp"
#include "rdclip/posterior.hpp"
#include "test_helpers.hpp"

using namespace rdclip;
namespace rt = rdclip::testing;

namespace {

int g_failures = 0;

template <typename F>
void criterion(int number, const char* label, double limit_seconds, F body) {
  const auto start = std::chrono::steady_clock::now();
  bool ok = false;
  std::string detail;
  try {
    ok = body(detail);
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  if (elapsed > limit_seconds) {
    ok = false;
    detail += (detail.empty() ? "" : "; ") + std::string("over time limit");
  }
  std::printf("criterion %d [%s]: %s (%.2fs%s%s)\n", number,
              ok ? "PASS" : "FAIL", label, elapsed,
              detail.empty() ? "" : "; ", detail.c_str());
  if (!ok) ++g_failures;
}

DpPosterior single_component(double mu, double sigma, double alpha) {
  DpPosterior p;
  p.means = {RealVec{mu}};
  p.stds = {RealVec{sigma}};
  p.alphas = {alpha};
  p.kappas = {1.0};
  return p;
}

bool c1_identity(std::string& detail) {
  std::mt19937_64 rng(1001);
  for (double lambda : {1.1, 2.0, 5.0}) {
    for (int t = 0; t < 1000; ++t) {
      const auto q = rt::random_posterior(rng, 1 + t % 4, 1 + t % 3);
      const auto outcome = renyi_bound(q, q, lambda);
      const auto* terms = std::get_if<RenyiTerms>(&outcome);
      if (terms == nullptr || std::abs(terms->total) > 1e-10) {
        detail = "identity violated at lambda " + std::to_string(lambda);
        return false;
      }
    }
  }
  return true;
}

bool c2_quadrature(std::string& detail) {
  std::mt19937_64 rng(1002);
  std::uniform_real_distribution<double> um(-2.0, 2.0);
  std::uniform_real_distribution<double> us(0.8, 1.6);
  std::uniform_real_distribution<double> ua(0.3, 1.0);
  const double lambda = 1.1;
  for (int t = 0; t < 100; ++t) {
    const double mu_q = um(rng), mu_qp = um(rng);
    const double sd_q = us(rng), sd_qp = us(rng);
    const double alpha = ua(rng);
    const auto outcome = renyi_bound(single_component(mu_q, sd_q, alpha),
                                     single_component(mu_qp, sd_qp, alpha),
                                     lambda);
    const auto* terms = std::get_if<RenyiTerms>(&outcome);
    if (terms == nullptr) {
      detail = "unexpected infeasibility";
      return false;
    }
    const double oracle =
        rt::gaussian_renyi_quadrature(mu_q, sd_qp, mu_qp, sd_q, lambda);
    const double rel = std::abs(terms->gaussian - oracle) /
                       std::max(std::abs(oracle), 1e-12);
    if (rel > 1e-6) {
      detail = "relative error " + std::to_string(rel);
      return false;
    }
  }
  return true;
}

bool c3_golden(std::string& detail) {
  const auto outcome = renyi_bound(single_component(0.5, 1.0, 0.8),
                                   single_component(0.0, 1.0, 0.5), 1.1);
  const auto* terms = std::get_if<RenyiTerms>(&outcome);
  if (terms == nullptr) {
    detail = "unexpected infeasibility";
    return false;
  }
  const bool ok =
      std::abs(terms->global_alpha -
               (-0.14095601386465252948142573034103784283)) < 1e-10 &&
      std::abs(terms->local_alpha -
               0.14095601386465252948142573034103784283) < 1e-10 &&
      std::abs(terms->gaussian - 0.1375) < 1e-10 &&
      std::abs(terms->total - 0.1375) < 1e-10;
  if (!ok) detail = "total " + std::to_string(terms->total);
  return ok;
}

bool c4_sigma_guarantee(std::string& detail) {
  std::mt19937_64 rng(1004);
  const double lambda = 1.1;
  const RealVec prior_std{1.0};
  std::uniform_real_distribution<double> us(0.01, 3.0);
  for (int t = 0; t < 100000; ++t) {
    const RealVec clipped = clip_sigma(RealVec{us(rng)}, prior_std, lambda);
    if (!std::holds_alternative<RealVec>(
            sigma_prime(clipped, prior_std, lambda))) {
      detail = "clipped sigma still infeasible";
      return false;
    }
  }
  // Negative control: unclipped draws below the floor must be detected.
  const double floor = sigma_floor_factor(lambda);
  std::uniform_real_distribution<double> ub(0.01, floor * 0.99);
  int detected = 0;
  for (int t = 0; t < 1000; ++t) {
    if (std::holds_alternative<Infeasibility>(
            sigma_prime(RealVec{ub(rng)}, prior_std, lambda))) {
      ++detected;
    }
  }
  if (detected == 0) {
    detail = "no infeasibility detected below the floor";
    return false;
  }
  return true;
}

bool c5_accountant_floor(std::string& detail) {
  RenyiReport r;
  r.pairs.push_back({"a", "b", 0.0, true});
  r.max = 0.0;
  r.avg = 0.0;
  AccountantConfig cfg{1.1, 1e-5, BudgetMode::WorstCase};
  const double eps = to_budget(r, cfg).epsilon;
  if (std::abs(eps - 10.4663) > 1e-3) {
    detail = "epsilon " + std::to_string(eps);
    return false;
  }
  return true;
}

bool c6_gradients(std::string& detail) {
  for (int run = 0; run < 10; ++run) {
    const bool clipped = run % 2 == 1;
    TrainConfig cfg;
    cfg.task = SyntheticTask{2, 3, 24, 16, 100u + static_cast<unsigned>(run),
                             3.0};
    cfg.hidden_dim = 5;
    cfg.latent_dim = 2;
    cfg.n_components = 2;
    cfg.lambda_g = 0.05;
    cfg.lambda_d = 0.05;
    if (clipped) cfg.clip = ClipConfig{20.0, 0.0, 5.0, 1.1};

    ToyModel model = init_model(cfg, 200u + static_cast<unsigned>(run));
    auto data = make_blobs(cfg.task);
    Batch batch;
    batch.inputs = data.train.inputs.topRows(5);
    batch.labels.assign(data.train.labels.begin(),
                        data.train.labels.begin() + 5);
    std::mt19937_64 rng(300u + static_cast<unsigned>(run));
    NoiseSlabs noise = draw_noise(5, cfg.n_components, cfg.latent_dim, rng);

    ToyModel grads = zeros_like(model);
    forward(model, batch, cfg, &noise, &grads);

    std::vector<std::pair<double*, double*>> params;
    auto add = [&params](Eigen::MatrixXd& a, Eigen::MatrixXd& b) {
      for (Eigen::Index i = 0; i < a.size(); ++i)
        params.emplace_back(a.data() + i, b.data() + i);
    };
    auto addv = [&params](Eigen::VectorXd& a, Eigen::VectorXd& b) {
      for (Eigen::Index i = 0; i < a.size(); ++i)
        params.emplace_back(a.data() + i, b.data() + i);
    };
    add(model.w_enc, grads.w_enc);
    addv(model.b_enc, grads.b_enc);
    for (std::size_t i = 0; i < model.w_mu.size(); ++i) {
      add(model.w_mu[i], grads.w_mu[i]);
      addv(model.b_mu[i], grads.b_mu[i]);
      add(model.w_sigma[i], grads.w_sigma[i]);
      addv(model.b_sigma[i], grads.b_sigma[i]);
      addv(model.w_alpha[i], grads.w_alpha[i]);
      params.emplace_back(&model.b_alpha[i], &grads.b_alpha[i]);
    }
    add(model.w_cls, grads.w_cls);
    addv(model.b_cls, grads.b_cls);

    const double h = 1e-5;
    for (auto& [p, g] : params) {
      const double saved = *p;
      *p = saved + h;
      const double up = forward(model, batch, cfg, &noise).total_loss;
      *p = saved - h;
      const double down = forward(model, batch, cfg, &noise).total_loss;
      *p = saved;
      const double fd = (up - down) / (2.0 * h);
      const double rel = std::abs(*g - fd) /
                         std::max({std::abs(*g), std::abs(fd), 1e-6});
      if (rel > 1e-4) {
        detail = "run " + std::to_string(run) + " relative error " +
                 std::to_string(rel);
        return false;
      }
    }
  }
  return true;
}

bool c7_twin(std::string& detail) {
  TrainConfig base;  // shipped defaults
  const ClipConfig clip{2.0, 0.0, 0.5, 1.1};
  for (unsigned seed : {1u, 2u, 3u}) {
    const auto rows = run_twin_experiment(base, clip, seed, 1e-5);
    const auto& unclipped = rows[0];
    const auto& clipped = rows[1];
    if (!(clipped.rd_max <= unclipped.rd_max)) {
      detail = "seed " + std::to_string(seed) + ": clipped rd_max " +
               std::to_string(clipped.rd_max) + " > unclipped " +
               std::to_string(unclipped.rd_max);
      return false;
    }
    if (!(clipped.accuracy >= unclipped.accuracy - 0.05)) {
      detail = "seed " + std::to_string(seed) + ": clipped accuracy " +
               std::to_string(clipped.accuracy) + " vs unclipped " +
               std::to_string(unclipped.accuracy);
      return false;
    }
  }
  return true;
}

bool c8_idempotence(std::string& detail) {
  std::mt19937_64 rng(1008);
  const ClipConfig cfg{1.5, 0.0, 0.5, 1.1};
  for (int t = 0; t < 100; ++t) {
    auto ds = rt::random_dataset(rng, 3, 2, 2);
    for (auto& [id, p] : ds.examples) {
      for (auto& a : p.alphas) a *= 4.0;
    }
    const auto once = clip_dataset(ds, cfg);
    const auto twice = clip_dataset(once, cfg);
    if (save_dataset(once) != save_dataset(twice)) {
      detail = "clip not idempotent at iteration " + std::to_string(t);
      return false;
    }
    const auto back = load_dataset(save_dataset(ds));
    if (save_dataset(back) != save_dataset(ds)) {
      detail = "save/load not an identity at iteration " + std::to_string(t);
      return false;
    }
  }
  return true;
}

bool c9_boundaries(std::string& detail) {
  const auto projected =
      clip_mean(RealVec{3.0, 4.0}, RealVec{0.0, 0.0}, 2.5);
  if (projected[0] != 1.5 || projected[1] != 2.0) {
    detail = "mean projection inexact";
    return false;
  }
  const auto floored = clip_sigma(RealVec{0.1}, RealVec{1.0}, 1.1);
  const double floor = std::sqrt((1.1 - 1.0) / 1.1);
  // Full precision up to the few-ulp round-up that keeps the floor strictly
  // inside the feasible set.
  if (!(floored[0] >= floor && floored[0] - floor <= 8e-16)) {
    detail = "sigma floor inexact";
    return false;
  }
  const ClipConfig cfg{3.0, 0.0, 0.7, 1.1};
  if (clip_alpha(5.0, cfg) != 0.7) {
    detail = "alpha clamp inexact";
    return false;
  }
  return true;
}

}  // namespace

int main() {
  criterion(1, "identity divergence vanishes", 10.0, c1_identity);
  criterion(2, "gaussian group matches quadrature oracle", 60.0,
            c2_quadrature);
  criterion(3, "golden closed-form instance", 1.0, c3_golden);
  criterion(4, "sigma clip guarantees feasibility", 30.0, c4_sigma_guarantee);
  criterion(5, "accountant zero-divergence floor", 1.0, c5_accountant_floor);
  criterion(6, "gradients match finite differences", 60.0, c6_gradients);
  criterion(7, "clipping tightens divergence, keeps utility", 300.0, c7_twin);
  criterion(8, "clip idempotence and save/load identity", 10.0,
            c8_idempotence);
  criterion(9, "clip boundary exactness", 1.0, c9_boundaries);
  if (g_failures > 0) {
    std::printf("%d criterion failure(s)\n", g_failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}

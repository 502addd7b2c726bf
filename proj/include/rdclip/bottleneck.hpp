// Copyright 2026 The rdclip Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0

#ifndef RDCLIP_BOTTLENECK_HPP
#define RDCLIP_BOTTLENECK_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rdclip/clipping.hpp"
#include "rdclip/divergence.hpp"
#include "rdclip/numerics.hpp"
#include "rdclip/posterior.hpp"

namespace rdclip {

struct SyntheticTask {
  int classes = 2;
  int dim = 4;
  int train_samples = 160;
  int test_samples = 80;
  unsigned seed = 7;
  double separation = 3.0;
};

struct TrainConfig {
  double lambda_g = 1e-3;
  double lambda_d = 1e-3;  // set equal to lambda_g by default
  double learning_rate = 0.05;
  int epochs = 40;
  int batch_size = 32;
  std::optional<ClipConfig> clip;
  int n_components = 3;
  int hidden_dim = 16;
  int latent_dim = 4;
  double renyi_order = 1.1;  // used for privacy evaluation and the sigma floor
  double prior_alpha0 = 1.0;
  int privacy_eval_samples = 32;
  unsigned seed = 1;
  SyntheticTask task;

  double alpha_floor() const {
    return clip ? clip->effective_alpha_floor() : kAlphaFloorEps;
  }

  PriorSpec prior() const {
    return PriorSpec{RealVec(std::vector<double>(latent_dim, 0.0)),
                     RealVec(std::vector<double>(latent_dim, 1.0)),
                     prior_alpha0};
  }
};

/// Encoder -> variational layer (per-component mu/sigma/alpha heads) ->
/// weighted pooled Gaussian sample -> linear classifier. No skip path exists
/// around the variational layer.
struct ToyModel {
  Eigen::MatrixXd w_enc;  // hidden x in
  Eigen::VectorXd b_enc;
  std::vector<Eigen::MatrixXd> w_mu;     // K of (d x hidden)
  std::vector<Eigen::VectorXd> b_mu;
  std::vector<Eigen::MatrixXd> w_sigma;  // K of (d x hidden)
  std::vector<Eigen::VectorXd> b_sigma;
  std::vector<Eigen::VectorXd> w_alpha;  // K of (hidden)
  std::vector<double> b_alpha;
  Eigen::MatrixXd w_cls;  // classes x d
  Eigen::VectorXd b_cls;
  unsigned rng_seed = 0;
};

struct Batch {
  Eigen::MatrixXd inputs;       // B x in_dim
  std::vector<int> labels;      // B
};

struct Dataset2 {
  Batch train;
  Batch test;
};

struct ForwardResult {
  std::vector<DpPosterior> posteriors;  // post-clip parameters per example
  Eigen::MatrixXd logits;               // B x classes
  double task_loss = 0.0;
  double l_g = 0.0;
  double l_d = 0.0;
  double total_loss = 0.0;
};

struct EpochMetrics {
  int epoch = 0;
  double task_loss = 0.0;
  double l_g = 0.0;
  double l_d = 0.0;
  double accuracy = 0.0;
};

struct TrainResult {
  ToyModel model;
  std::vector<EpochMetrics> trace;
};

struct TrainingDiverged : std::runtime_error {
  int epoch;
  int step;
  TrainingDiverged(int e, int s)
      : std::runtime_error("training diverged (non-finite loss) at epoch " +
                           std::to_string(e) + ", step " + std::to_string(s)),
        epoch(e), step(s) {}
};

inline ToyModel init_model(const TrainConfig& cfg, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  auto mat = [&](int r, int c) {
    Eigen::MatrixXd m(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) m(i, j) = u(rng);
    return m;
  };
  auto vec = [&](int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = u(rng);
    return v;
  };
  const int K = cfg.n_components;
  ToyModel m;
  m.w_enc = mat(cfg.hidden_dim, cfg.task.dim);
  m.b_enc = Eigen::VectorXd::Zero(cfg.hidden_dim);
  for (int i = 0; i < K; ++i) {
    m.w_mu.push_back(mat(cfg.latent_dim, cfg.hidden_dim));
    m.b_mu.push_back(Eigen::VectorXd::Zero(cfg.latent_dim));
    m.w_sigma.push_back(mat(cfg.latent_dim, cfg.hidden_dim) * 0.1);
    m.b_sigma.push_back(Eigen::VectorXd::Constant(cfg.latent_dim, -1.0));
    m.w_alpha.push_back(vec(cfg.hidden_dim) * 0.1);
    m.b_alpha.push_back(0.0);
  }
  m.w_cls = mat(cfg.task.classes, cfg.latent_dim);
  m.b_cls = Eigen::VectorXd::Zero(cfg.task.classes);
  m.rng_seed = seed;
  return m;
}

inline ToyModel zeros_like(const ToyModel& m) {
  ToyModel g;
  g.w_enc = Eigen::MatrixXd::Zero(m.w_enc.rows(), m.w_enc.cols());
  g.b_enc = Eigen::VectorXd::Zero(m.b_enc.size());
  for (std::size_t i = 0; i < m.w_mu.size(); ++i) {
    g.w_mu.push_back(Eigen::MatrixXd::Zero(m.w_mu[i].rows(), m.w_mu[i].cols()));
    g.b_mu.push_back(Eigen::VectorXd::Zero(m.b_mu[i].size()));
    g.w_sigma.push_back(
        Eigen::MatrixXd::Zero(m.w_sigma[i].rows(), m.w_sigma[i].cols()));
    g.b_sigma.push_back(Eigen::VectorXd::Zero(m.b_sigma[i].size()));
    g.w_alpha.push_back(Eigen::VectorXd::Zero(m.w_alpha[i].size()));
    g.b_alpha.push_back(0.0);
  }
  g.w_cls = Eigen::MatrixXd::Zero(m.w_cls.rows(), m.w_cls.cols());
  g.b_cls = Eigen::VectorXd::Zero(m.b_cls.size());
  g.rng_seed = m.rng_seed;
  return g;
}

/// Per-component standard-normal noise, one (B x d) slab per component.
using NoiseSlabs = std::vector<Eigen::MatrixXd>;

inline NoiseSlabs draw_noise(int batch, int components, int latent_dim,
                             std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  NoiseSlabs slabs;
  for (int i = 0; i < components; ++i) {
    Eigen::MatrixXd s(batch, latent_dim);
    for (int r = 0; r < batch; ++r)
      for (int c = 0; c < latent_dim; ++c) s(r, c) = n(rng);
    slabs.push_back(std::move(s));
  }
  return slabs;
}

/// Forward pass; when `grads` is non-null also accumulates reverse-mode
/// gradients of the mean batch loss into it. `noise` null means evaluation
/// mode (the pooled representation uses the posterior means, no sampling).
inline ForwardResult forward(const ToyModel& model, const Batch& batch,
                             const TrainConfig& cfg,
                             const NoiseSlabs* noise = nullptr,
                             ToyModel* grads = nullptr) {
  const int B = static_cast<int>(batch.inputs.rows());
  if (B == 0) {
    throw std::invalid_argument("forward: empty batch");
  }
  const int K = cfg.n_components;
  const int d = cfg.latent_dim;
  const double afloor = cfg.alpha_floor();
  const PriorSpec prior = cfg.prior();
  const double b_comp = cfg.prior_alpha0 / static_cast<double>(K);

  ForwardResult res;
  res.logits.resize(B, model.w_cls.rows());
  res.posteriors.reserve(B);

  const double inv_b = 1.0 / static_cast<double>(B);

  for (int e = 0; e < B; ++e) {
    const Eigen::VectorXd x = batch.inputs.row(e).transpose();
    const Eigen::VectorXd a_enc = model.w_enc * x + model.b_enc;
    const Eigen::VectorXd h = a_enc.array().tanh();

    std::vector<Eigen::VectorXd> m_hat(K), s_hat(K), s_pre(K), z_comp(K);
    std::vector<Eigen::ArrayXd> s_mask(K);
    std::vector<double> a_pre(K), al_hat(K), klg(K);
    std::vector<bool> mean_clipped(K), alpha_clipped(K);

    double al0 = 0.0;
    for (int i = 0; i < K; ++i) {
      Eigen::VectorXd m = model.w_mu[i] * h + model.b_mu[i];
      s_pre[i] = model.w_sigma[i] * h + model.b_sigma[i];
      Eigen::VectorXd s(d);
      for (int j = 0; j < d; ++j) s(j) = softplus(s_pre[i](j)) + 1e-6;
      a_pre[i] = model.w_alpha[i].dot(h) + model.b_alpha[i];
      double al = softplus(a_pre[i]) + afloor;

      mean_clipped[i] = false;
      alpha_clipped[i] = false;
      s_mask[i] = Eigen::ArrayXd::Ones(d);
      if (cfg.clip) {
        const double dist = m.norm();  // prior mean is zero
        if (dist > cfg.clip->c_mu * (1.0 + 1e-13)) {
          m *= cfg.clip->c_mu / dist;
          mean_clipped[i] = true;
        }
        for (int j = 0; j < d; ++j) {
          const double floor_j =
              sigma_floor_value(cfg.clip->lambda, prior.std[j]);
          if (s(j) < floor_j) {
            s(j) = floor_j;
            s_mask[i](j) = 0.0;
          }
        }
        const double clamped = clip_alpha(al, *cfg.clip);
        alpha_clipped[i] = clamped != al;
        al = clamped;
      }
      m_hat[i] = m;
      s_hat[i] = s;
      al_hat[i] = al;
      al0 += al;

      if (noise != nullptr) {
        const Eigen::VectorXd eps = (*noise)[i].row(e).transpose();
        z_comp[i] = (m.array() + s.array() * eps.array()).matrix();
      } else {
        z_comp[i] = m;
      }

      double kl = 0.0;
      for (int j = 0; j < d; ++j) {
        const double sp = prior.std[j];
        const double dm = m(j) - prior.mean[j];
        kl += std::log(sp / s(j)) + (s(j) * s(j) + dm * dm) / (2.0 * sp * sp) -
              0.5;
      }
      klg[i] = kl;
    }

    std::vector<double> w(K);
    for (int i = 0; i < K; ++i) w[i] = al_hat[i] / al0;

    Eigen::VectorXd z = Eigen::VectorXd::Zero(d);
    for (int i = 0; i < K; ++i) z += w[i] * z_comp[i];

    const Eigen::VectorXd logits = model.w_cls * z + model.b_cls;
    res.logits.row(e) = logits.transpose();

    // Stable softmax cross-entropy.
    const double mx = logits.maxCoeff();
    const Eigen::ArrayXd ex = (logits.array() - mx).exp();
    const double zsum = ex.sum();
    const Eigen::VectorXd p = (ex / zsum).matrix();
    const int y = batch.labels[e];
    res.task_loss -= inv_b * (logits(y) - mx - std::log(zsum));

    double lg = 0.0;
    for (int i = 0; i < K; ++i) lg += w[i] * klg[i];
    res.l_g += inv_b * lg;

    double ld = log_gamma(al0) - log_gamma(cfg.prior_alpha0);
    const double psi_al0 = digamma(al0);
    for (int i = 0; i < K; ++i) {
      ld += log_gamma(b_comp) - log_gamma(al_hat[i]) +
            (al_hat[i] - b_comp) * (digamma(al_hat[i]) - psi_al0);
    }
    res.l_d += inv_b * ld;

    {
      std::vector<RealVec> means, stds;
      std::vector<double> alphas;
      for (int i = 0; i < K; ++i) {
        means.emplace_back(
            std::vector<double>(m_hat[i].data(), m_hat[i].data() + d));
        stds.emplace_back(
            std::vector<double>(s_hat[i].data(), s_hat[i].data() + d));
        alphas.push_back(al_hat[i]);
      }
      res.posteriors.push_back(DpPosterior{
          std::move(means), std::move(stds), std::move(alphas),
          std::vector<double>(K, 1.0)});
    }

    if (grads == nullptr) continue;

    // ---- reverse pass ----
    Eigen::VectorXd dlogits = p;
    dlogits(y) -= 1.0;
    dlogits *= inv_b;
    grads->w_cls += dlogits * z.transpose();
    grads->b_cls += dlogits;
    const Eigen::VectorXd dz = model.w_cls.transpose() * dlogits;

    std::vector<double> dw(K, 0.0);
    std::vector<Eigen::VectorXd> dm(K), ds(K);
    for (int i = 0; i < K; ++i) {
      const Eigen::VectorXd dz_i = w[i] * dz;
      dw[i] = dz.dot(z_comp[i]);
      dw[i] += inv_b * cfg.lambda_g * klg[i];

      dm[i] = dz_i;
      ds[i] = Eigen::VectorXd::Zero(d);
      if (noise != nullptr) {
        const Eigen::VectorXd eps = (*noise)[i].row(e).transpose();
        ds[i] = (dz_i.array() * eps.array()).matrix();
      }
      for (int j = 0; j < d; ++j) {
        const double sp = prior.std[j];
        dm[i](j) += inv_b * cfg.lambda_g * w[i] *
                    (m_hat[i](j) - prior.mean[j]) / (sp * sp);
        ds[i](j) += inv_b * cfg.lambda_g * w[i] *
                    (-1.0 / s_hat[i](j) + s_hat[i](j) / (sp * sp));
      }
    }

    // Mixture weights w_i = al_i / al0.
    double dw_dot_w = 0.0;
    for (int i = 0; i < K; ++i) dw_dot_w += dw[i] * w[i];
    std::vector<double> dal(K);
    const double tri_al0 = trigamma(al0);
    for (int i = 0; i < K; ++i) {
      dal[i] = (dw[i] - dw_dot_w) / al0;
      dal[i] += inv_b * cfg.lambda_d *
                ((al_hat[i] - b_comp) * trigamma(al_hat[i]) -
                 (al0 - cfg.prior_alpha0) * tri_al0);
    }

    Eigen::VectorXd dh = Eigen::VectorXd::Zero(h.size());
    for (int i = 0; i < K; ++i) {
      // Zero subgradient in clipped regions.
      const Eigen::VectorXd dm_i =
          mean_clipped[i] ? Eigen::VectorXd::Zero(d).eval() : dm[i];
      const Eigen::VectorXd ds_i = (ds[i].array() * s_mask[i]).matrix();
      const double dal_i = alpha_clipped[i] ? 0.0 : dal[i];

      Eigen::VectorXd dspre(d);
      for (int j = 0; j < d; ++j) dspre(j) = ds_i(j) * softplus_grad(s_pre[i](j));
      const double dapre = dal_i * softplus_grad(a_pre[i]);

      grads->w_mu[i] += dm_i * h.transpose();
      grads->b_mu[i] += dm_i;
      grads->w_sigma[i] += dspre * h.transpose();
      grads->b_sigma[i] += dspre;
      grads->w_alpha[i] += dapre * h;
      grads->b_alpha[i] += dapre;

      dh += model.w_mu[i].transpose() * dm_i +
            model.w_sigma[i].transpose() * dspre + dapre * model.w_alpha[i];
    }
    const Eigen::VectorXd da =
        (dh.array() * (1.0 - h.array().square())).matrix();
    grads->w_enc += da * x.transpose();
    grads->b_enc += da;
  }

  res.total_loss =
      res.task_loss + cfg.lambda_g * res.l_g + cfg.lambda_d * res.l_d;
  if (!std::isfinite(res.total_loss)) {
    throw std::invalid_argument("forward: non-finite loss");
  }
  return res;
}

inline Dataset2 make_blobs(const SyntheticTask& task) {
  std::mt19937_64 rng(task.seed);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<Eigen::VectorXd> centers;
  for (int c = 0; c < task.classes; ++c) {
    Eigen::VectorXd u(task.dim);
    for (int j = 0; j < task.dim; ++j) u(j) = n(rng);
    centers.push_back(task.separation * u.normalized());
  }
  auto fill = [&](int count) {
    Batch b;
    b.inputs.resize(count, task.dim);
    b.labels.resize(count);
    for (int r = 0; r < count; ++r) {
      const int c = r % task.classes;
      b.labels[r] = c;
      for (int j = 0; j < task.dim; ++j) {
        b.inputs(r, j) = centers[c](j) + n(rng);
      }
    }
    return b;
  };
  Dataset2 ds;
  ds.train = fill(task.train_samples);
  ds.test = fill(task.test_samples);
  return ds;
}

inline double accuracy(const Eigen::MatrixXd& logits,
                       const std::vector<int>& labels) {
  int correct = 0;
  for (int e = 0; e < logits.rows(); ++e) {
    int best = 0;
    for (int c = 1; c < logits.cols(); ++c) {
      if (logits(e, c) > logits(e, best)) best = c;
    }
    if (best == labels[e]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(logits.rows());
}

inline void sgd_step(ToyModel& m, const ToyModel& g, double lr) {
  m.w_enc -= lr * g.w_enc;
  m.b_enc -= lr * g.b_enc;
  for (std::size_t i = 0; i < m.w_mu.size(); ++i) {
    m.w_mu[i] -= lr * g.w_mu[i];
    m.b_mu[i] -= lr * g.b_mu[i];
    m.w_sigma[i] -= lr * g.w_sigma[i];
    m.b_sigma[i] -= lr * g.b_sigma[i];
    m.w_alpha[i] -= lr * g.w_alpha[i];
    m.b_alpha[i] -= lr * g.b_alpha[i];
  }
  m.w_cls -= lr * g.w_cls;
  m.b_cls -= lr * g.b_cls;
}

/// Seeded, deterministic SGD training on the configured synthetic task.
inline TrainResult train(const TrainConfig& cfg) {
  const Dataset2 data = make_blobs(cfg.task);
  ToyModel model = init_model(cfg, cfg.seed);
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);

  const int N = static_cast<int>(data.train.inputs.rows());
  std::vector<int> order(N);
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    EpochMetrics em;
    em.epoch = epoch;
    int correct_weight = 0;
    int n_batches = 0;
    for (int start = 0; start < N; start += cfg.batch_size) {
      const int b = std::min(cfg.batch_size, N - start);
      Batch batch;
      batch.inputs.resize(b, data.train.inputs.cols());
      batch.labels.resize(b);
      for (int r = 0; r < b; ++r) {
        batch.inputs.row(r) = data.train.inputs.row(order[start + r]);
        batch.labels[r] = data.train.labels[order[start + r]];
      }
      NoiseSlabs noise =
          draw_noise(b, cfg.n_components, cfg.latent_dim, rng);
      ToyModel grads = zeros_like(model);
      ForwardResult fr;
      try {
        fr = forward(model, batch, cfg, &noise, &grads);
      } catch (const std::invalid_argument&) {
        throw TrainingDiverged(epoch, start / cfg.batch_size);
      }
      sgd_step(model, grads, cfg.learning_rate);
      em.task_loss += fr.task_loss * b;
      em.l_g += fr.l_g * b;
      em.l_d += fr.l_d * b;
      correct_weight +=
          static_cast<int>(std::lround(accuracy(fr.logits, batch.labels) * b));
      ++n_batches;
    }
    em.task_loss /= N;
    em.l_g /= N;
    em.l_d /= N;
    em.accuracy = static_cast<double>(correct_weight) / N;
    result.trace.push_back(em);
  }
  result.model = std::move(model);
  return result;
}

/// Held-out accuracy in evaluation mode (no sampling).
inline double evaluate_accuracy(const ToyModel& model, const Batch& batch,
                                const TrainConfig& cfg) {
  const ForwardResult fr = forward(model, batch, cfg, nullptr, nullptr);
  return accuracy(fr.logits, batch.labels);
}

/// Extracts post-clip posterior parameters for each evaluation example and
/// delegates to the pairwise divergence engine.
inline RenyiReport evaluate_privacy(const ToyModel& model, const Batch& eval,
                                    const TrainConfig& cfg, PairMode mode) {
  const ForwardResult fr = forward(model, eval, cfg, nullptr, nullptr);
  PosteriorDataset ds;
  ds.lambda = cfg.renyi_order;
  ds.prior = cfg.prior();
  for (std::size_t e = 0; e < fr.posteriors.size(); ++e) {
    char id[16];
    std::snprintf(id, sizeof(id), "ex%04zu", e);
    ds.examples.emplace_back(id, fr.posteriors[e]);
  }
  return pairwise_report(ds, mode);
}

// ---- serialization ----

namespace detail {

inline nlohmann::json mat_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Eigen::MatrixXd mat_from_json(const nlohmann::json& j) {
  const int rows = static_cast<int>(j.size());
  const int cols = rows > 0 ? static_cast<int>(j[0].size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  return m;
}

inline nlohmann::json vec_json(const Eigen::VectorXd& v) {
  nlohmann::json out = nlohmann::json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline Eigen::VectorXd vec_from_json(const nlohmann::json& j) {
  Eigen::VectorXd v(static_cast<int>(j.size()));
  for (int i = 0; i < v.size(); ++i) v(i) = j[i].get<double>();
  return v;
}

}  // namespace detail

inline nlohmann::json model_to_json(const ToyModel& m) {
  nlohmann::json j;
  j["w_enc"] = detail::mat_json(m.w_enc);
  j["b_enc"] = detail::vec_json(m.b_enc);
  j["w_mu"] = nlohmann::json::array();
  j["b_mu"] = nlohmann::json::array();
  j["w_sigma"] = nlohmann::json::array();
  j["b_sigma"] = nlohmann::json::array();
  j["w_alpha"] = nlohmann::json::array();
  j["b_alpha"] = m.b_alpha;
  for (std::size_t i = 0; i < m.w_mu.size(); ++i) {
    j["w_mu"].push_back(detail::mat_json(m.w_mu[i]));
    j["b_mu"].push_back(detail::vec_json(m.b_mu[i]));
    j["w_sigma"].push_back(detail::mat_json(m.w_sigma[i]));
    j["b_sigma"].push_back(detail::vec_json(m.b_sigma[i]));
    j["w_alpha"].push_back(detail::vec_json(m.w_alpha[i]));
  }
  j["w_cls"] = detail::mat_json(m.w_cls);
  j["b_cls"] = detail::vec_json(m.b_cls);
  j["rng_seed"] = m.rng_seed;
  return j;
}

inline ToyModel model_from_json(const nlohmann::json& j) {
  ToyModel m;
  m.w_enc = detail::mat_from_json(j.at("w_enc"));
  m.b_enc = detail::vec_from_json(j.at("b_enc"));
  for (const auto& x : j.at("w_mu")) m.w_mu.push_back(detail::mat_from_json(x));
  for (const auto& x : j.at("b_mu")) m.b_mu.push_back(detail::vec_from_json(x));
  for (const auto& x : j.at("w_sigma"))
    m.w_sigma.push_back(detail::mat_from_json(x));
  for (const auto& x : j.at("b_sigma"))
    m.b_sigma.push_back(detail::vec_from_json(x));
  for (const auto& x : j.at("w_alpha"))
    m.w_alpha.push_back(detail::vec_from_json(x));
  m.b_alpha = j.at("b_alpha").get<std::vector<double>>();
  m.w_cls = detail::mat_from_json(j.at("w_cls"));
  m.b_cls = detail::vec_from_json(j.at("b_cls"));
  m.rng_seed = j.at("rng_seed").get<unsigned>();
  return m;
}

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig cfg;
  cfg.lambda_g = j.value("lambda_g", cfg.lambda_g);
  cfg.lambda_d = j.value("lambda_d", cfg.lambda_g);
  cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
  cfg.epochs = j.value("epochs", cfg.epochs);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.n_components = j.value("n_components", cfg.n_components);
  cfg.hidden_dim = j.value("hidden_dim", cfg.hidden_dim);
  cfg.latent_dim = j.value("latent_dim", cfg.latent_dim);
  cfg.renyi_order = j.value("renyi_order", cfg.renyi_order);
  if (!(cfg.renyi_order > 1.0)) {
    throw ParseError("train config: renyi_order must exceed 1");
  }
  cfg.prior_alpha0 = j.value("prior_alpha0", cfg.prior_alpha0);
  cfg.privacy_eval_samples =
      j.value("privacy_eval_samples", cfg.privacy_eval_samples);
  cfg.seed = j.value("seed", cfg.seed);
  if (j.contains("clip") && !j.at("clip").is_null()) {
    const auto& jc = j.at("clip");
    ClipConfig cc;
    cc.c_mu = jc.at("c_mu").get<double>();
    cc.c_alpha_min = jc.at("c_alpha_min").get<double>();
    cc.c_alpha_max = jc.at("c_alpha_max").get<double>();
    cc.lambda = jc.value("lambda", cfg.renyi_order);
    if (!(cc.lambda > 1.0)) {
      throw ParseError("train config: clip lambda must exceed 1");
    }
    cfg.clip = cc;
  }
  if (j.contains("task")) {
    const auto& jt = j.at("task");
    cfg.task.classes = jt.value("classes", cfg.task.classes);
    cfg.task.dim = jt.value("dim", cfg.task.dim);
    cfg.task.train_samples = jt.value("train_samples", cfg.task.train_samples);
    cfg.task.test_samples = jt.value("test_samples", cfg.task.test_samples);
    cfg.task.seed = jt.value("seed", cfg.task.seed);
    cfg.task.separation = jt.value("separation", cfg.task.separation);
  }
  return cfg;
}

inline void write_metrics(const std::vector<EpochMetrics>& trace,
                          std::ostream& out) {
  out << "epoch,task_loss,l_g,l_d,accuracy\n";
  for (const auto& em : trace) {
    out << em.epoch << ',' << detail::format_real(em.task_loss) << ','
        << detail::format_real(em.l_g) << ',' << detail::format_real(em.l_d)
        << ',' << detail::format_real(em.accuracy) << '\n';
  }
}

}  // namespace rdclip

#endif  // RDCLIP_BOTTLENECK_HPP

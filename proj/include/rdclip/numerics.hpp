// Copyright 2026 The rdclip Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0

#ifndef RDCLIP_NUMERICS_HPP
#define RDCLIP_NUMERICS_HPP

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace rdclip {

/// Finite-only vector of doubles. NaN/Inf are rejected at construction so
/// that downstream divergence code can treat any non-finite intermediate as
/// an infeasibility rather than a propagated accident.
class RealVec {
 public:
  RealVec() = default;

  explicit RealVec(std::vector<double> values) : values_(std::move(values)) {
    for (double v : values_) {
      if (!std::isfinite(v)) {
        throw std::invalid_argument("RealVec: non-finite element");
      }
    }
  }

  RealVec(std::initializer_list<double> values)
      : RealVec(std::vector<double>(values)) {}

  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  double operator[](std::size_t i) const { return values_[i]; }
  const std::vector<double>& data() const { return values_; }
  std::span<const double> span() const { return values_; }

  bool operator==(const RealVec& other) const = default;

 private:
  std::vector<double> values_;
};

namespace detail {

// Lanczos approximation, g = 7, 9 coefficients. Accurate to ~15 significant
// digits over the positive real axis.
inline constexpr double kLanczosG = 7.0;
inline constexpr double kLanczos[9] = {
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
};

inline double log_gamma_lanczos(double x) {
  // Valid for x >= 0.5.
  const double z = x - 1.0;
  double sum = kLanczos[0];
  for (int i = 1; i < 9; ++i) {
    sum += kLanczos[i] / (z + static_cast<double>(i));
  }
  const double t = z + kLanczosG + 0.5;
  constexpr double half_log_two_pi = 0.91893853320467274178;  // ln(2*pi)/2
  return half_log_two_pi + (z + 0.5) * std::log(t) - t + std::log(sum);
}

}  // namespace detail

/// ln Gamma(x) for x > 0. Lanczos for x >= 0.5, reflection below.
inline double log_gamma(double x) {
  if (std::isnan(x)) {
    throw std::domain_error("log_gamma: NaN argument");
  }
  if (x <= 0.0) {
    throw std::domain_error("log_gamma: argument must be positive");
  }
  if (x < 0.5) {
    // ln Gamma(x) = ln(pi / sin(pi x)) - ln Gamma(1 - x); sin(pi x) > 0 here.
    return std::log(std::numbers::pi / std::sin(std::numbers::pi * x)) -
           detail::log_gamma_lanczos(1.0 - x);
  }
  return detail::log_gamma_lanczos(x);
}

/// digamma(x) = d/dx ln Gamma(x), x > 0. Recurrence into the asymptotic
/// regime, then the Bernoulli series.
inline double digamma(double x) {
  if (std::isnan(x)) {
    throw std::domain_error("digamma: NaN argument");
  }
  if (x <= 0.0) {
    throw std::domain_error("digamma: argument must be positive");
  }
  double result = 0.0;
  while (x < 10.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // psi(x) ~ ln x - 1/(2x) - sum B_2n / (2n x^{2n})
  double series = inv2 * (1.0 / 12.0 -
                  inv2 * (1.0 / 120.0 -
                  inv2 * (1.0 / 252.0 -
                  inv2 * (1.0 / 240.0 -
                  inv2 * (1.0 / 132.0)))));
  return result + std::log(x) - 0.5 * inv - series;
}

/// trigamma(x) = d^2/dx^2 ln Gamma(x), x > 0.
inline double trigamma(double x) {
  if (std::isnan(x)) {
    throw std::domain_error("trigamma: NaN argument");
  }
  if (x <= 0.0) {
    throw std::domain_error("trigamma: argument must be positive");
  }
  double result = 0.0;
  while (x < 10.0) {
    result += 1.0 / (x * x);
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // psi'(x) ~ 1/x + 1/(2x^2) + sum B_2n / x^{2n+1}
  double series = inv * inv2 * (1.0 / 6.0 -
                  inv2 * (1.0 / 30.0 -
                  inv2 * (1.0 / 42.0 -
                  inv2 * (1.0 / 30.0))));
  return result + inv + 0.5 * inv2 + series;
}

/// Euclidean norm. Empty input is a usage error, not a zero.
inline double l2_norm(const RealVec& v) {
  if (v.empty()) {
    throw std::invalid_argument("l2_norm: empty vector");
  }
  double sum = 0.0;
  for (double x : v.data()) {
    sum += x * x;
  }
  return std::sqrt(sum);
}

inline double l2_norm(std::span<const double> v) {
  if (v.empty()) {
    throw std::invalid_argument("l2_norm: empty vector");
  }
  double sum = 0.0;
  for (double x : v) {
    sum += x * x;
  }
  return std::sqrt(sum);
}

/// Overflow-safe ln(1 + e^x).
inline double softplus(double x) {
  if (x > 30.0) {
    return x + std::log1p(std::exp(-x));
  }
  return std::log1p(std::exp(x));
}

/// d/dx softplus(x): the logistic function, in (0, 1).
inline double softplus_grad(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace rdclip

#endif  // RDCLIP_NUMERICS_HPP

// Copyright 2026 The rdclip Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0

#ifndef RDCLIP_ACCOUNTANT_HPP
#define RDCLIP_ACCOUNTANT_HPP

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "rdclip/divergence.hpp"

namespace rdclip {

enum class BudgetMode { WorstCase, BayesianMoment };

inline std::string to_string(BudgetMode mode) {
  return mode == BudgetMode::WorstCase ? "worst_case" : "bayesian_moment";
}

inline BudgetMode budget_mode_from_string(const std::string& s) {
  if (s == "worst_case") return BudgetMode::WorstCase;
  if (s == "bayesian_moment") return BudgetMode::BayesianMoment;
  throw std::invalid_argument("unknown budget mode: " + s);
}

struct AccountantConfig {
  double lambda = 1.1;
  double delta = 1e-5;
  BudgetMode mode = BudgetMode::WorstCase;
};

struct PrivacyBudget {
  double epsilon = 0.0;
  double delta = 0.0;
  BudgetMode mode = BudgetMode::WorstCase;
  double rd_statistic = 0.0;  // the divergence statistic consumed
};

/// Converts pairwise divergence statistics into an (epsilon, delta) budget.
/// worst_case consumes the maximum divergence; bayesian_moment consumes a
/// log-moment average of the pairwise divergences. Both add the
/// zero-divergence base term ln(1/delta)/lambda.
inline PrivacyBudget to_budget(const RenyiReport& report,
                               const AccountantConfig& cfg) {
  if (!(cfg.lambda > 1.0)) {
    throw std::invalid_argument("to_budget: lambda must exceed 1");
  }
  if (!(cfg.delta > 0.0 && cfg.delta <= 1.0)) {
    throw std::invalid_argument("to_budget: delta must be in (0, 1]");
  }
  if (report.has_infeasible()) {
    throw std::invalid_argument(
        "to_budget: budget undefined with infeasible pairs");
  }
  if (report.pairs.empty()) {
    throw std::invalid_argument("to_budget: empty report");
  }

  PrivacyBudget budget;
  budget.delta = cfg.delta;
  budget.mode = cfg.mode;
  if (cfg.mode == BudgetMode::WorstCase) {
    budget.rd_statistic = report.max;
  } else {
    // (1/lambda) * ln( mean_i e^{lambda * D_i} ), via log-sum-exp.
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& p : report.pairs) {
      m = std::max(m, cfg.lambda * p.divergence);
    }
    double acc = 0.0;
    for (const auto& p : report.pairs) {
      acc += std::exp(cfg.lambda * p.divergence - m);
    }
    budget.rd_statistic =
        (m + std::log(acc / static_cast<double>(report.pairs.size()))) /
        cfg.lambda;
  }
  budget.epsilon =
      budget.rd_statistic + std::log(1.0 / cfg.delta) / cfg.lambda;
  return budget;
}

/// Deterministic plain-text audit rendering.
inline std::string audit_summary(const RenyiReport& report,
                                 const PrivacyBudget& budget,
                                 double lambda) {
  std::ostringstream out;
  out << "privacy audit\n";
  out << "  rd_max        " << detail::format_real(report.max) << '\n';
  out << "  rd_avg        " << detail::format_real(report.avg) << '\n';
  out << "  epsilon       " << detail::format_real(budget.epsilon) << '\n';
  out << "  delta         " << detail::format_real(budget.delta) << '\n';
  out << "  lambda        " << detail::format_real(lambda) << '\n';
  out << "  mode          " << to_string(budget.mode) << '\n';
  out << "  n_infeasible  " << report.n_infeasible << '\n';
  return out.str();
}

inline nlohmann::json audit_json(const RenyiReport& report,
                                 const PrivacyBudget& budget, double lambda) {
  return nlohmann::json{{"rd_max", report.max},
                        {"rd_avg", report.avg},
                        {"epsilon", budget.epsilon},
                        {"delta", budget.delta},
                        {"lambda", lambda},
                        {"mode", to_string(budget.mode)},
                        {"n_infeasible", report.n_infeasible}};
}

}  // namespace rdclip

#endif  // RDCLIP_ACCOUNTANT_HPP

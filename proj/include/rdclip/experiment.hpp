// Copyright 2026 The rdclip Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0

#ifndef RDCLIP_EXPERIMENT_HPP
#define RDCLIP_EXPERIMENT_HPP

#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rdclip/accountant.hpp"
#include "rdclip/bottleneck.hpp"
#include "rdclip/clipping.hpp"

namespace rdclip {

struct TwinRow {
  std::string variant;  // "unclipped" or "clipped"
  unsigned seed = 0;
  double accuracy = 0.0;
  double rd_max = 0.0;
  double rd_avg = 0.0;
  std::size_t n_infeasible = 0;
  std::optional<double> epsilon;  // absent when any pair is infeasible
};

/// Trains the same model twice from the same seed, with and without the
/// clipping operators, and reports held-out accuracy next to the worst-case
/// divergence and privacy budget of each variant.
inline std::vector<TwinRow> run_twin_experiment(TrainConfig base,
                                                const ClipConfig& clip,
                                                unsigned seed, double delta) {
  base.seed = seed;
  std::vector<TwinRow> rows;
  for (const bool clipped : {false, true}) {
    TrainConfig cfg = base;
    cfg.clip = clipped ? std::optional<ClipConfig>(clip) : std::nullopt;
    const TrainResult tr = train(cfg);
    const Dataset2 data = make_blobs(cfg.task);

    Batch eval;
    const int n = std::min<int>(cfg.privacy_eval_samples,
                                static_cast<int>(data.test.inputs.rows()));
    eval.inputs = data.test.inputs.topRows(n);
    eval.labels.assign(data.test.labels.begin(), data.test.labels.begin() + n);

    TwinRow row;
    row.variant = clipped ? "clipped" : "unclipped";
    row.seed = seed;
    row.accuracy = evaluate_accuracy(tr.model, data.test, cfg);
    const RenyiReport report =
        evaluate_privacy(tr.model, eval, cfg, PairMode::VsAllPairs);
    row.rd_max = report.max;
    row.rd_avg = report.avg;
    row.n_infeasible = report.n_infeasible;
    if (!report.has_infeasible()) {
      AccountantConfig acc{cfg.renyi_order, delta, BudgetMode::WorstCase};
      row.epsilon = to_budget(report, acc).epsilon;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string format_twin_table(const std::vector<TwinRow>& rows) {
  std::ostringstream out;
  out << "variant    seed  accuracy  rd_max      rd_avg      epsilon\n";
  for (const auto& r : rows) {
    out << std::left << std::setw(11) << r.variant << std::setw(6) << r.seed
        << std::fixed << std::setprecision(4) << std::setw(10) << r.accuracy
        << std::setw(12) << r.rd_max << std::setw(12) << r.rd_avg;
    if (r.epsilon) {
      out << std::setprecision(4) << *r.epsilon;
    } else {
      out << "undefined (" << r.n_infeasible << " infeasible pairs)";
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace rdclip

#endif  // RDCLIP_EXPERIMENT_HPP

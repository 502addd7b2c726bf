// Copyright 2026 The rdclip Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "rdclip/accountant.hpp"
#include "rdclip/bottleneck.hpp"
#include "rdclip/clipping.hpp"
#include "rdclip/divergence.hpp"
#include "rdclip/experiment.hpp"
#include "rdclip/posterior.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInputError = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitTrainingAbort = 3;

rdclip::PosteriorDataset load_dataset_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw rdclip::ParseError("cannot open dataset file: " + path);
  }
  return rdclip::load_dataset(in);
}

void require_valid(const rdclip::PosteriorDataset& ds) {
  const auto violations = rdclip::validate(ds);
  if (!violations.empty()) {
    std::string msg = "dataset validation failed:";
    for (const auto& v : violations) {
      msg += "\n  [" + (v.example_id.empty() ? "dataset" : v.example_id) +
             (v.component >= 0 ? " #" + std::to_string(v.component) : "") +
             "] " + v.field + ": " + v.rule;
    }
    throw rdclip::ParseError(msg);
  }
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw rdclip::ParseError("cannot open output file: " + path);
  }
  out << content;
}

rdclip::PairMode parse_pairs(const std::string& s) {
  if (s == "vs_all_pairs") return rdclip::PairMode::VsAllPairs;
  if (s == "vs_prior") return rdclip::PairMode::VsPrior;
  throw rdclip::ParseError("unknown pair mode: " + s);
}

struct CommonFlags {
  std::optional<double> lambda;
  double delta = 1e-5;
  std::string mode = "worst_case";
  std::string pairs = "vs_all_pairs";
  std::string out;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Renyi divergence bounds, parameter clipping, and privacy budgets for "
      "Dirichlet-Process posteriors"};
  app.require_subcommand(1);

  std::string dataset_path, clip_config_path, config_path, report_path;
  CommonFlags flags;
  unsigned demo_seed = 1;
  int demo_runs = 1;

  auto add_common = [&flags](CLI::App* cmd) {
    cmd->add_option("--lambda", flags.lambda, "Renyi order (overrides file)");
    cmd->add_option("--delta", flags.delta, "BDP failure probability");
    cmd->add_option("--mode", flags.mode, "worst_case|bayesian_moment");
    cmd->add_option("--out", flags.out, "Output path prefix");
  };

  auto* analyze = app.add_subcommand(
      "analyze", "Pairwise divergence report plus privacy budget");
  analyze->add_option("dataset", dataset_path, "Dataset file")->required();
  analyze->add_option("--pairs", flags.pairs, "vs_all_pairs|vs_prior");
  add_common(analyze);

  auto* pairwise = app.add_subcommand(
      "pairwise", "Pairwise divergence report only");
  pairwise->add_option("dataset", dataset_path, "Dataset file")->required();
  pairwise->add_option("--pairs", flags.pairs, "vs_all_pairs|vs_prior");
  add_common(pairwise);

  auto* budget = app.add_subcommand(
      "budget", "Privacy budget from an existing pairwise report");
  budget->add_option("report", report_path, "Report file from pairwise")
      ->required();
  add_common(budget);

  auto* clip = app.add_subcommand("clip", "Clip a dataset to a budget");
  clip->add_option("dataset", dataset_path, "Dataset file")->required();
  clip->add_option("--clip-config", clip_config_path, "Clip config file")
      ->required();
  clip->add_option("--out", flags.out, "Output dataset path");

  auto* train_toy = app.add_subcommand(
      "train-toy", "Train the toy bottleneck model on synthetic data");
  train_toy->add_option("config", config_path, "Train config file")
      ->required();
  train_toy->add_option("--out", flags.out, "Output path prefix");
  train_toy->add_option("--seed", demo_seed, "Override config seed");

  auto* demo = app.add_subcommand(
      "demo", "Twin clipped-vs-unclipped experiment on the synthetic task");
  demo->add_option("--seed", demo_seed, "First seed");
  demo->add_option("--runs", demo_runs, "Number of consecutive seeds");
  demo->add_option("--config", config_path, "Optional train config file");
  demo->add_option("--clip-config", clip_config_path,
                   "Optional clip config file");
  add_common(demo);

  CLI11_PARSE(app, argc, argv);

  try {
    if (analyze->parsed() || pairwise->parsed()) {
      rdclip::PosteriorDataset ds = load_dataset_file(dataset_path);
      require_valid(ds);
      if (flags.lambda) {
        if (!(*flags.lambda > 1.0)) {
          throw rdclip::ParseError("--lambda: Renyi order must exceed 1");
        }
        ds.lambda = *flags.lambda;
      }
      const auto report = rdclip::pairwise_report(ds, parse_pairs(flags.pairs));
      std::ostringstream rep;
      rdclip::write_report(report, rep);
      const std::string prefix = flags.out.empty() ? "rdclip" : flags.out;
      write_file(prefix + "_report.csv", rep.str());

      if (report.has_infeasible()) {
        std::cerr << report.n_infeasible
                  << " infeasible pair(s); budget omitted. First pairs:\n";
        int shown = 0;
        for (const auto& p : report.pairs) {
          if (!p.feasible && shown++ < 5) {
            std::cerr << "  (" << p.id_q << ", " << p.id_qp << ")\n";
          }
        }
        return kExitInfeasible;
      }
      if (analyze->parsed()) {
        rdclip::AccountantConfig acc{
            ds.lambda, flags.delta,
            rdclip::budget_mode_from_string(flags.mode)};
        const auto b = rdclip::to_budget(report, acc);
        write_file(prefix + "_budget.json",
                   rdclip::audit_json(report, b, ds.lambda).dump(2) + "\n");
        std::cout << rdclip::audit_summary(report, b, ds.lambda);
      } else {
        std::cout << "rd_max " << rdclip::detail::format_real(report.max)
                  << "\nrd_avg " << rdclip::detail::format_real(report.avg)
                  << "\nn_infeasible " << report.n_infeasible << '\n';
      }
      return kExitOk;
    }

    if (budget->parsed()) {
      std::ifstream in(report_path);
      if (!in) {
        throw rdclip::ParseError("cannot open report file: " + report_path);
      }
      rdclip::RenyiReport report;
      std::string line;
      std::getline(in, line);  // header
      while (std::getline(in, line)) {
        std::istringstream row(line);
        std::string a, b, c, d;
        std::getline(row, a, ',');
        std::getline(row, b, ',');
        if (a == "max" || a == "avg" || a == "n_infeasible") {
          if (a == "max") report.max = std::stod(b);
          if (a == "avg") report.avg = std::stod(b);
          if (a == "n_infeasible") report.n_infeasible = std::stoul(b);
          continue;
        }
        std::getline(row, c, ',');
        std::getline(row, d, ',');
        report.pairs.push_back({a, b, std::stod(c), d == "true"});
      }
      const double lambda = flags.lambda.value_or(1.1);
      rdclip::AccountantConfig acc{lambda, flags.delta,
                                   rdclip::budget_mode_from_string(flags.mode)};
      const auto bud = rdclip::to_budget(report, acc);
      std::cout << rdclip::audit_summary(report, bud, lambda);
      if (!flags.out.empty()) {
        write_file(flags.out,
                   rdclip::audit_json(report, bud, lambda).dump(2) + "\n");
      }
      return kExitOk;
    }

    if (clip->parsed()) {
      rdclip::PosteriorDataset ds = load_dataset_file(dataset_path);
      require_valid(ds);
      std::ifstream cin_(clip_config_path);
      if (!cin_) {
        throw rdclip::ParseError("cannot open clip config: " +
                                 clip_config_path);
      }
      const rdclip::ClipConfig cfg = rdclip::load_clip_config(cin_);
      const auto clipped = rdclip::clip_dataset(ds, cfg);
      const std::string out_path =
          flags.out.empty() ? dataset_path + ".clipped" : flags.out;
      write_file(out_path, rdclip::save_dataset(clipped));
      const auto cert = rdclip::feasibility_certificate(clipped, cfg);
      std::cout << "clipped dataset written to " << out_path
                << "\nfeasible: " << (cert.feasible ? "true" : "false")
                << "\nstructurally_guaranteed: "
                << (cert.structurally_guaranteed ? "true" : "false") << '\n';
      for (const auto& v : cert.violations) std::cout << "  " << v << '\n';
      return kExitOk;
    }

    if (train_toy->parsed() || demo->parsed()) {
      rdclip::TrainConfig cfg;
      if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) {
          throw rdclip::ParseError("cannot open train config: " + config_path);
        }
        nlohmann::json j;
        try {
          j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
          throw rdclip::ParseError(e.what());
        }
        cfg = rdclip::train_config_from_json(j);
      }

      if (train_toy->parsed()) {
        if (train_toy->count("--seed")) cfg.seed = demo_seed;
        const std::string prefix = flags.out.empty() ? "toy" : flags.out;
        try {
          const auto tr = rdclip::train(cfg);
          std::ostringstream metrics;
          rdclip::write_metrics(tr.trace, metrics);
          write_file(prefix + "_metrics.csv", metrics.str());
          write_file(prefix + "_model.json",
                     rdclip::model_to_json(tr.model).dump(2) + "\n");
          const auto data = rdclip::make_blobs(cfg.task);
          rdclip::Batch eval;
          const int n =
              std::min<int>(cfg.privacy_eval_samples,
                            static_cast<int>(data.test.inputs.rows()));
          eval.inputs = data.test.inputs.topRows(n);
          eval.labels.assign(data.test.labels.begin(),
                             data.test.labels.begin() + n);
          const auto report = rdclip::evaluate_privacy(
              tr.model, eval, cfg, rdclip::PairMode::VsAllPairs);
          std::ostringstream rep;
          rdclip::write_report(report, rep);
          write_file(prefix + "_privacy.csv", rep.str());
          std::cout << "test accuracy "
                    << rdclip::evaluate_accuracy(tr.model, data.test, cfg)
                    << "\nrd_max " << rdclip::detail::format_real(report.max)
                    << "\nrd_avg " << rdclip::detail::format_real(report.avg)
                    << '\n';
        } catch (const rdclip::TrainingDiverged& e) {
          std::cerr << e.what() << '\n';
          return kExitTrainingAbort;
        }
        return kExitOk;
      }

      // demo
      rdclip::ClipConfig clip_cfg = cfg.clip.value_or(rdclip::ClipConfig{});
      if (!clip_config_path.empty()) {
        std::ifstream in(clip_config_path);
        if (!in) {
          throw rdclip::ParseError("cannot open clip config: " +
                                   clip_config_path);
        }
        clip_cfg = rdclip::load_clip_config(in);
      }
      std::vector<rdclip::TwinRow> rows;
      try {
        for (int r = 0; r < demo_runs; ++r) {
          auto seed_rows = rdclip::run_twin_experiment(
              cfg, clip_cfg, demo_seed + static_cast<unsigned>(r),
              flags.delta);
          rows.insert(rows.end(), seed_rows.begin(), seed_rows.end());
        }
      } catch (const rdclip::TrainingDiverged& e) {
        std::cerr << e.what() << '\n';
        return kExitTrainingAbort;
      }
      const std::string table = rdclip::format_twin_table(rows);
      std::cout << table;
      if (!flags.out.empty()) write_file(flags.out, table);
      return kExitOk;
    }
  } catch (const rdclip::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInputError;
  }
  return kExitOk;
}

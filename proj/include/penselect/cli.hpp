// Copyright (c) 2026 penselect contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef PENSELECT_CLI_HPP
#define PENSELECT_CLI_HPP

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "penselect/harness.hpp"

namespace penselect {

namespace detail {

struct CliOptions {
  std::string config_path;
  std::string out_path = "report.json";
  long long trials = 0;     // 0: keep config value
  long long seed = -1;      // <0: keep config value
  int threads = 0;          // 0: env / default
};

inline void add_common_options(CLI::App* sub, CliOptions& opt) {
  sub->add_option("--config", opt.config_path, "experiment config (JSON)")->required();
  sub->add_option("--out", opt.out_path, "output report path (JSON; CSV written next to it)");
  sub->add_option("--trials", opt.trials, "override the trial count");
  sub->add_option("--seed", opt.seed, "override the seed");
  sub->add_option("--threads", opt.threads, "worker threads (default: PENSELECT_THREADS or auto)");
}

inline int run_from_config(ExperimentConfig::Kind kind, const CliOptions& opt) {
  ExperimentConfig cfg;
  try {
    std::ifstream in(opt.config_path);
    if (!in) {
      std::cerr << "penselect: cannot open config file: " << opt.config_path << "\n";
      return 2;
    }
    nlohmann::json doc = nlohmann::json::parse(in);
    cfg = ExperimentConfig::from_json(doc, kind);
    if (opt.trials > 0) cfg.trials = opt.trials;
    if (opt.seed >= 0) cfg.seed = static_cast<std::uint64_t>(opt.seed);
    if (opt.threads > 0) cfg.threads = opt.threads;
    // the echoed config must describe the run actually performed
    cfg.echo["trials"] = cfg.trials;
    cfg.echo["seed"] = cfg.seed;
  } catch (const std::exception& e) {
    std::cerr << "penselect: config error: " << e.what() << "\n";
    return 2;
  }

  Report rep;
  try {
    rep = run_experiment(cfg);
  } catch (const std::exception& e) {
    std::cerr << "penselect: " << e.what() << "\n";
    return 2;
  }

  namespace fs = std::filesystem;
  const fs::path out(opt.out_path);
  fs::path csv = out;
  csv.replace_extension(".csv");
  {
    std::ofstream os(out);
    if (cfg.kind == ExperimentConfig::Kind::select_once) {
      // The selection document itself is the promised output.
      os << rep.extras.at("selection").dump(2) << "\n";
    } else {
      os << rep.to_json().dump(2) << "\n";
    }
  }
  {
    std::ofstream os(csv);
    rep.write_csv(os);
  }
  for (const ReportRow& r : rep.rows) {
    std::printf("%-10s x=%-8g u=%-12g empirical=%-12g bound=%-12g %s\n", r.experiment.c_str(),
                r.x, r.u, r.empirical, r.bound, r.pass ? "pass" : "FAIL");
  }
  std::printf("%s: %s (report: %s)\n", rep.kind.c_str(), rep.all_pass ? "all pass" : "FAILED",
              out.string().c_str());
  return rep.all_pass ? 0 : 1;
}

inline void print_constants() {
  std::printf("kappa = %g\n\n", kKappa);
  std::printf("oracle constant C(K) = K (K^2 + K - 1) / (K - 1)^3\n");
  for (const double K : {1.1, 1.25, 1.5, 2.0, 3.0, 4.0, 8.0, 16.0}) {
    std::printf("  C(%-4g) = %.10g\n", K, oracle_constant(K));
  }
  std::printf("\nchaining series H against its closed-form dominators\n");
  std::printf("  %3s  %12s  %12s  %12s  %12s\n", "D", "H(v=1,b=0)", "14*sqrt(D)", "H(v=0,b=1)",
              "18*D");
  for (int D = 1; D <= 20; ++D) {
    const double hv = chaining_H(ChainingParams{1.0, 0.0, D});
    const double hb = chaining_H(ChainingParams{0.0, 1.0, D});
    std::printf("  %3d  %12.6f  %12.6f  %12.6f  %12.6f\n", D, hv, 14.0 * std::sqrt(double(D)),
                hb, 18.0 * D);
  }
}

}  // namespace detail

inline int cli_main(int argc, char** argv) {
  CLI::App app{"penalized least-squares model selection and its deviation-bound workbench"};
  app.require_subcommand(1);

  detail::CliOptions opt;
  struct SubSpec {
    const char* name;
    const char* help;
    ExperimentConfig::Kind kind;
  };
  const SubSpec subs[] = {
      {"verify-noise", "certify a noise spec and its empirical MGF / tail behaviour",
       ExperimentConfig::Kind::verify_noise},
      {"deviation-chi", "chi-square-type deviation frequencies vs their bounds",
       ExperimentConfig::Kind::deviation_chi},
      {"deviation-sup", "supremum deviation frequencies vs the chaining threshold",
       ExperimentConfig::Kind::deviation_sup},
      {"oracle", "Monte Carlo risk of the selected estimator vs the oracle bound",
       ExperimentConfig::Kind::oracle},
      {"select", "run model selection once and write the selection document",
       ExperimentConfig::Kind::select_once},
  };
  for (const SubSpec& s : subs) {
    detail::add_common_options(app.add_subcommand(s.name, s.help), opt);
  }
  app.add_subcommand("constants", "print kappa, the C(K) table and the chaining series");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const CLI::App* chosen = app.get_subcommands().front();
  if (chosen->get_name() == "constants") {
    detail::print_constants();
    return 0;
  }
  for (const SubSpec& s : subs) {
    if (chosen->get_name() == s.name) return detail::run_from_config(s.kind, opt);
  }
  return 2;
}

}  // namespace penselect

#endif  // PENSELECT_CLI_HPP

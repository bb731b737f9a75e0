// Copyright (c) 2026 penselect contributors
// SPDX-License-Identifier: Apache-2.0

#include "penselect/harness.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "penselect/cli.hpp"

namespace penselect {
namespace {

using nlohmann::json;

std::string csv_of(const Report& rep) {
  std::ostringstream os;
  rep.write_csv(os);
  return os.str();
}

json base_chi_config() {
  return json{{"kind", "deviation_chi"},
              {"n", 64},
              {"trials", 4000},
              {"seed", 99},
              {"noise", {{"family", "gaussian"}, {"params", {{"sd", 1.0}}}}},
              {"collection",
               {{"n", 64},
                {"family", "histogram"},
                {"models", {{{"id", "m0"}, {"blocks", {{1, 16}, {17, 32}, {33, 48}, {49, 64}}}, {"delta", 1.0}}}}}},
              {"x_grid", {0.0, 0.5, 1.0, 2.0}}};
}

TEST(PairwiseSum, AgreesWithSequentialSum) {
  rng::Engine eng(1);
  std::vector<double> x(100001);
  double seq = 0.0;
  for (double& v : x) {
    v = rng::standard_normal(eng);
    seq += v;
  }
  EXPECT_NEAR(pairwise_sum(x), seq, 1e-10 * (std::abs(seq) + 1.0));
}

TEST(WorkerCount, EnvAndOverride) {
  EXPECT_EQ(worker_count(3), 3);
  EXPECT_GE(worker_count(0), 1);
}

TEST(ExperimentConfig, ParseAndValidate) {
  const ExperimentConfig cfg = ExperimentConfig::from_json(base_chi_config());
  EXPECT_EQ(cfg.kind, ExperimentConfig::Kind::deviation_chi);
  EXPECT_EQ(cfg.n, 64);
  EXPECT_EQ(cfg.trials, 4000);
  EXPECT_EQ(cfg.x_grid.size(), 4u);
  // kind mismatch
  EXPECT_THROW(
      ExperimentConfig::from_json(base_chi_config(), ExperimentConfig::Kind::oracle),
      std::invalid_argument);
  // missing noise
  json bad = base_chi_config();
  bad.erase("noise");
  EXPECT_THROW(ExperimentConfig::from_json(bad), std::invalid_argument);
}

TEST(DeviationChi, BoundsHoldOnASmallRun) {
  const ExperimentConfig cfg = ExperimentConfig::from_json(base_chi_config());
  const Report rep = run_deviation_chi(cfg);
  EXPECT_TRUE(rep.all_pass);
  // x = 0 rows have bound 1 and pass trivially
  bool saw_x0 = false;
  for (const ReportRow& r : rep.rows) {
    if (r.experiment == "c1" && r.x == 0.0) {
      saw_x0 = true;
      EXPECT_DOUBLE_EQ(r.bound, 1.0);
      EXPECT_TRUE(r.pass);
    }
  }
  EXPECT_TRUE(saw_x0);
  // chi-square sanity: E |P xi|^2 = sigma^2 D for gaussian noise
  const double mean = rep.extras.at("mean_proj_sq").get<double>();
  const double se = rep.extras.at("stderr_proj_sq").get<double>();
  EXPECT_NEAR(mean, 4.0, 3.5 * se);
}

TEST(DeviationChi, DeterministicAcrossThreadCounts) {
  ExperimentConfig cfg = ExperimentConfig::from_json(base_chi_config());
  cfg.threads = 1;
  const std::string csv1 = csv_of(run_deviation_chi(cfg));
  cfg.threads = 4;
  const std::string csv4 = csv_of(run_deviation_chi(cfg));
  EXPECT_EQ(csv1, csv4);
  const std::string again = csv_of(run_deviation_chi(cfg));
  EXPECT_EQ(csv4, again);
}

TEST(DeviationChi, ExplicitUGrid) {
  // the spec's hand example: span{ones}, u = 10 sigma, x = 1
  json doc = base_chi_config();
  doc["collection"]["models"] = {{{"id", "ones"}, {"blocks", {{1, 64}}}, {"delta", 1.0}}};
  doc["x_grid"] = {1.0};
  doc["u_grid"] = {10.0};
  const Report rep = run_deviation_chi(ExperimentConfig::from_json(doc));
  ASSERT_EQ(rep.rows.size(), 2u);
  EXPECT_DOUBLE_EQ(rep.rows[0].u, 10.0);
  EXPECT_NEAR(rep.rows[0].bound, std::exp(-1.0), 1e-15);
  EXPECT_TRUE(rep.all_pass);
}

TEST(DeviationSup, BallMode) {
  json doc = base_chi_config();
  doc["kind"] = "deviation_sup";
  doc["trials"] = 3000;
  const Report rep = run_deviation_sup(ExperimentConfig::from_json(doc));
  EXPECT_TRUE(rep.all_pass);
  EXPECT_EQ(rep.extras.at("mode").get<std::string>(), "ball");
  // both one- and two-sided rows appear per x
  EXPECT_EQ(rep.rows.size(), 8u);
}

TEST(DeviationSup, IntervalModeForSubGamma) {
  json doc = base_chi_config();
  doc["kind"] = "deviation_sup";
  doc["trials"] = 3000;
  doc["noise"] = {{"family", "centered_poisson"}, {"params", {{"mu", 3.0}}}};
  doc.erase("collection");
  const Report rep = run_deviation_sup(ExperimentConfig::from_json(doc));
  EXPECT_TRUE(rep.all_pass);
  EXPECT_EQ(rep.extras.at("mode").get<std::string>(), "interval");
  EXPECT_EQ(rep.extras.at("D").get<int>(), 1);
}

TEST(VerifyNoiseRunner, PoissonPasses) {
  json doc{{"kind", "verify_noise"},
           {"trials", 20000},
           {"seed", 7},
           {"noise", {{"family", "centered_poisson"}, {"params", {{"mu", 3.0}}}}}};
  const Report rep = run_verify_noise(ExperimentConfig::from_json(doc));
  EXPECT_TRUE(rep.all_pass);
  ASSERT_GE(rep.rows.size(), 4u);
  EXPECT_EQ(rep.rows[0].experiment, "subgamma");
  EXPECT_LE(rep.rows[0].empirical, 1e-12);
}

TEST(OracleRunner, ZeroSignalSingleModel) {
  json doc{{"kind", "oracle"},
           {"n", 16},
           {"trials", 2000},
           {"seed", 5},
           {"noise", {{"family", "gaussian"}, {"params", {{"sd", 1.0}}}}},
           {"collection",
            {{"n", 16},
             {"family", "histogram"},
             {"models", {{{"id", "ones"}, {"blocks", {{1, 16}}}, {"delta", 0.5}}}}}},
           {"penalty", {{"mode", "general"}, {"K", 2.0}}},
           {"signal", {{"type", "custom"}, {"values", json::array()}}}};
  doc["signal"]["values"] = std::vector<double>(16, 0.0);
  const Report rep = run_oracle(ExperimentConfig::from_json(doc));
  EXPECT_TRUE(rep.all_pass);
  // LHS is approximately a 1-dof chi-square mean; RHS includes C(K)(pen + ...)
  const double lhs = rep.rows[0].empirical;
  EXPECT_NEAR(lhs, 1.0, 0.15);
  EXPECT_GT(rep.rows[0].bound, 100.0);
}

TEST(OracleRunner, StepSignalConcentratesOnTheJump) {
  json doc{{"kind", "oracle"},
           {"n", 64},
           {"trials", 400},
           {"seed", 21},
           {"noise", {{"family", "gaussian"}, {"params", {{"sd", 0.1}}}}},
           {"collection", {{"family", "histogram"}, {"generator", "dyadic"}, {"min_block", 8}}},
           {"penalty", {{"mode", "general"}, {"K", 2.0}}},
           {"signal", {{"type", "step"}, {"height", 1.0}}}};
  const Report rep = run_oracle(ExperimentConfig::from_json(doc));
  EXPECT_TRUE(rep.all_pass);
  EXPECT_GE(rep.extras.at("jump_refined_fraction").get<double>(), 0.95);
  EXPECT_LE(rep.rows[0].empirical, rep.rows[0].bound);
}

TEST(OracleRunner, AgreesWithSelectModel) {
  json doc{{"kind", "select_once"},
           {"n", 32},
           {"seed", 3},
           {"noise", {{"family", "gaussian"}, {"params", {{"sd", 0.5}}}}},
           {"collection", {{"family", "histogram"}, {"generator", "dyadic"}, {"min_block", 4}}},
           {"penalty", {{"mode", "general"}, {"K", 2.0}}},
           {"signal", {{"type", "step"}, {"height", 2.0}}}};
  const ExperimentConfig cfg = ExperimentConfig::from_json(doc);
  const Report rep = run_select_once(cfg);
  // reproduce the same realization and compare against the library call
  const ModelCollection coll = cfg.collection.build(cfg.n);
  const VectorN f = cfg.signal.build(cfg.n);
  rng::Engine eng = rng::Engine::for_stream(cfg.seed, stream_id(kMainStream, 0));
  VectorN y(cfg.n);
  for (int i = 0; i < cfg.n; ++i) y[i] = f[i] + cfg.noise->sample_one(eng);
  const SelectionResult expected = select_model(y, coll, cfg.build_penalty());
  EXPECT_EQ(rep.extras.at("selection").at("chosen_id").get<std::string>(), expected.chosen_id);
  EXPECT_DOUBLE_EQ(rep.extras.at("selection").at("crit").get<double>(), expected.chosen_crit);
}

TEST(Report, CsvShape) {
  const ExperimentConfig cfg = ExperimentConfig::from_json(base_chi_config());
  const Report rep = run_deviation_chi(cfg);
  const std::string csv = csv_of(rep);
  EXPECT_EQ(csv.rfind("experiment,x,u,empirical,bound,stderr,pass\n", 0), 0u);
  // rows: |x_grid| * |u_grid| c1 rows + |u_grid| c2 rows, plus the header
  const size_t lines = static_cast<size_t>(std::count(csv.begin(), csv.end(), '\n'));
  EXPECT_EQ(lines, 1u + 4u * 3u + 3u);
}

TEST(Cli, OverridesApplyAndAreEchoed) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "penselect_cli_test";
  fs::create_directories(dir);
  const fs::path cfg = dir / "cfg.json";
  {
    std::ofstream os(cfg);
    os << R"({"kind":"verify_noise","trials":20000,"seed":7,
             "noise":{"family":"scaled_rademacher","params":{"a":1.0}}})";
  }
  const fs::path out = dir / "rep.json";
  const std::string cfg_s = cfg.string(), out_s = out.string();
  const char* argv[] = {"penselect", "verify-noise", "--config", cfg_s.c_str(),
                        "--out",     out_s.c_str(),  "--trials", "4000",
                        "--seed",    "11"};
  ASSERT_EQ(cli_main(10, const_cast<char**>(argv)), 0);
  std::ifstream in(out);
  const json rep = json::parse(in);
  EXPECT_EQ(rep.at("config").at("trials").get<long long>(), 4000);
  EXPECT_EQ(rep.at("config").at("seed").get<std::uint64_t>(), 11u);
  EXPECT_TRUE(rep.at("all_pass").get<bool>());
  EXPECT_TRUE(fs::exists(dir / "rep.csv"));
}

TEST(Cli, ConstantsOutput) {
  testing::internal::CaptureStdout();
  const char* argv[] = {"penselect", "constants"};
  ASSERT_EQ(cli_main(2, const_cast<char**>(argv)), 0);
  const std::string out = testing::internal::GetCapturedStdout();
  EXPECT_NE(out.find("kappa = 18"), std::string::npos);
  EXPECT_NE(out.find("C(2   ) = 10\n"), std::string::npos);
}

TEST(Cli, ExitCodes) {
  {
    const char* argv[] = {"penselect", "oracle", "--config", "/nonexistent/config.json"};
    EXPECT_EQ(cli_main(4, const_cast<char**>(argv)), 2);
  }
  {
    const char* argv[] = {"penselect", "constants"};
    EXPECT_EQ(cli_main(2, const_cast<char**>(argv)), 0);
  }
  {
    const char* argv[] = {"penselect", "no-such-command"};
    EXPECT_EQ(cli_main(2, const_cast<char**>(argv)), 2);
  }
}

}  // namespace
}  // namespace penselect

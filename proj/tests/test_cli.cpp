#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "support.hpp"

using nlohmann::json;
using support::cli;
using support::fixture;

namespace {

std::string path(const std::string& rel) { return "'" + fixture(rel) + "'"; }

std::string scratch_file(const std::string& name) { return (support::scratch() / name).string(); }

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

std::string write_temp(const std::string& name, const json& j) {
  const auto p = scratch_file(name);
  varcomp::io::write_atomic(p, j.dump());
  return p;
}

}  // namespace

TEST(Design, AnalyticToStdout) {
  const auto r = cli("design " + path("problems/spring2025.json"));
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_NEAR(j.at("x_l").get<double>(), 833.3, 833.3 * 0.005);
  EXPECT_NEAR(j.at("x_c").get<double>(), -208.3, 208.3 * 0.005);
  EXPECT_NEAR(j.at("threshold").get<double>(), 12.0, 0.1);
  EXPECT_EQ(j.at("claims").at("unity_points"), json::array({-12.0, 36.0}));
  EXPECT_EQ(j.at("claims").at("worst_abs_qs"), 24.0);
  EXPECT_EQ(j.at("elements").at("fixed").at("kind"), "inductor");
}

TEST(Design, ZeroWidthHasNoSwitchedElement) {
  const auto r = cli("design " + path("problems/zero_width.json"));
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_TRUE(j.at("x_c").is_null());
  EXPECT_TRUE(j.at("threshold").is_null());
  EXPECT_EQ(j.at("elements").at("fixed").at("kind"), "capacitor");
  EXPECT_EQ(j.at("claims").at("worst_pf"), 1.0);
}

TEST(Design, BothWritesAgreementReport) {
  const auto out = scratch_file("both.json");
  const auto r = cli("design " + path("problems/spring2025.json") + " --method both --grid-step 0.5 --out " + out);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto agreement = varcomp::io::read_json_file(out + ".agreement.json");
  EXPECT_TRUE(agreement.at("agree").get<bool>());
  EXPECT_LE(agreement.at("abs_diff").at("worst_abs_qs").get<double>(), 0.5);
}

TEST(Design, BadMethod) {
  const auto r = cli("design " + path("problems/spring2025.json") + " --method magic");
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.err.find("BAD_METHOD"), std::string::npos);
}

TEST(Sweep, ReferenceProfile) {
  const auto sol = scratch_file("ref.json");
  ASSERT_EQ(cli("design " + path("problems/spring2025.json") + " --out " + sol).exit_code, 0);
  const auto r = cli("sweep " + path("problems/spring2025.json") + " " + sol);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto rows = csv_rows(r.out);
  ASSERT_EQ(rows.size(), 98u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"q_d", "switch_state", "q_s", "pf", "label"}));
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double q_d = std::stod(rows[i][0]);
    if (q_d == -36 || q_d == 12 || q_d == 60) {
      EXPECT_DOUBLE_EQ(std::abs(std::stod(rows[i][2])), 24.0) << q_d;
    }
  }
  EXPECT_EQ(rows[1][4], "lagging");
  EXPECT_EQ(rows[49][0], "12");
  EXPECT_EQ(rows[49][1], "open");
}

TEST(Sweep, FaultyDesignPeaksAtThreshold) {
  const auto r = cli("sweep " + path("problems/spring2025.json") + " " + path("candidates/o1_spring2025.json"));
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto rows = csv_rows(r.out);
  EXPECT_EQ(rows[49][0], "12");
  EXPECT_NEAR(std::stod(rows[49][2]), 48.0, 1e-3);
}

TEST(Sweep, SampleCountFromFlagEnvironment) {
  const auto sol = path("reference/spring2025_reference.json");
  EXPECT_EQ(csv_rows(cli("sweep " + path("problems/spring2025.json") + " " + sol + " --samples 2").out).size(), 3u);
  EXPECT_EQ(csv_rows(cli("sweep " + path("problems/spring2025.json") + " " + sol, "VARCOMP_SAMPLES=5").out).size(), 6u);
  EXPECT_EQ(
      csv_rows(cli("sweep " + path("problems/spring2025.json") + " " + sol + " --samples 3", "VARCOMP_SAMPLES=5").out).size(),
      4u);
  EXPECT_EQ(cli("sweep " + path("problems/spring2025.json") + " " + sol, "VARCOMP_SAMPLES=abc").exit_code, 2);
  EXPECT_EQ(cli("sweep " + path("problems/spring2025.json") + " " + sol + " --samples 1").exit_code, 2);
}

TEST(Sweep, ProblemDefaultsRankBelowEnvironment) {
  auto prob = varcomp::io::read_json_file(fixture("problems/spring2025.json"));
  prob["defaults"] = {{"samples", 4}};
  const auto p = write_temp("with_defaults.json", prob);
  const auto sol = path("reference/spring2025_reference.json");
  EXPECT_EQ(csv_rows(cli("sweep " + p + " " + sol).out).size(), 5u);
  EXPECT_EQ(csv_rows(cli("sweep " + p + " " + sol, "VARCOMP_SAMPLES=7").out).size(), 8u);
}

TEST(Multiperiod, DefaultGrids) {
  const auto r = cli("multiperiod " + path("problems/fall2023.json"));
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_EQ(j.at("worst_ratio"), 0.25);
  EXPECT_EQ(j.at("q_cf"), 2.5);
  EXPECT_EQ(j.at("q_cs"), 13.5);
  EXPECT_EQ(j.at("states"), (json{{"morning", false}, {"afternoon", true}, {"evening", false}}));
  EXPECT_FALSE(j.contains("band"));
}

TEST(Multiperiod, Band) {
  const auto r = cli("multiperiod " + path("problems/fall2023.json") + " --band");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_NEAR(j.at("band")[0].get<double>(), 13.5, 1e-9);
  EXPECT_NEAR(j.at("band")[1].get<double>(), 29.5, 1e-9);
  EXPECT_NEAR(j.at("midband_q_cs").get<double>(), 21.5, 1e-9);
}

TEST(Multiperiod, BandOutOfScopeWarns) {
  const auto r = cli("multiperiod " + path("problems/symmetric_two_period.json") + " --band");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.err.find("BAND_SCOPE"), std::string::npos);
  const auto j = json::parse(r.out);
  EXPECT_FALSE(j.contains("band"));
  EXPECT_EQ(j.at("q_cf"), 0.0);
  EXPECT_EQ(j.at("q_cs"), 0.0);
  EXPECT_EQ(j.at("worst_ratio"), 0.5);
}

TEST(Multiperiod, EmptyGridIsSolverFailure) {
  const auto r = cli("multiperiod " + path("problems/fall2023.json") + " --cf-step 0");
  EXPECT_EQ(r.exit_code, 3);
  EXPECT_NE(r.err.find("EMPTY_GRID"), std::string::npos);
}

TEST(Powerflow, ConvergesAndWritesSolution) {
  const auto out = scratch_file("pf.json");
  const auto r = cli("powerflow " + path("problems/pf3bus.json") + " --out " + out);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto j = varcomp::io::read_json_file(out);
  EXPECT_TRUE(j.at("converged").get<bool>());
  EXPECT_LE(j.at("iterations").get<int>(), 10);
  EXPECT_NEAR(j.at("buses")[0].at("p").get<double>(), j.at("buses")[1].at("p").get<double>(), 1e-12);
}

TEST(Powerflow, AnalyticJacobian) {
  const auto r = cli("powerflow " + path("problems/pf3bus.json") + " --jacobian analytic");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_TRUE(json::parse(r.out).at("converged").get<bool>());
  EXPECT_EQ(cli("powerflow " + path("problems/pf3bus.json") + " --jacobian exact").exit_code, 2);
}

TEST(Powerflow, MissingReference) {
  const auto r = cli("powerflow " + path("problems/pf_no_reference.json"));
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.err.find("NO_REFERENCE"), std::string::npos);
}

TEST(Powerflow, NonConvergenceStillWritesDiagnostic) {
  const auto out = scratch_file("pf_cap.json");
  const auto r = cli("powerflow " + path("problems/pf3bus.json") + " --max-iter 1 --out " + out);
  EXPECT_EQ(r.exit_code, 4);
  const auto j = varcomp::io::read_json_file(out);
  EXPECT_FALSE(j.at("converged").get<bool>());
  EXPECT_EQ(cli("powerflow " + path("problems/pf3bus.json"), "VARCOMP_MAX_ITER=1").exit_code, 4);
}

TEST(Powerflow, ZeroLoadNeedsOneEvaluation) {
  const auto r = cli("powerflow " + path("problems/pf_zero_load.json"));
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out).at("iterations"), 1);
}

TEST(Grade, ExitCodes) {
  EXPECT_EQ(cli("grade " + path("reference/spring2025_reference.json") + " " + path("problems/spring2025.json")).exit_code, 0);
  const auto r = cli("grade " + path("candidates/o1_spring2025.json") + " " + path("problems/spring2025.json"));
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_EQ(json::parse(r.out).at("findings").size(), 4u);
  EXPECT_EQ(cli("grade " + path("candidates/o1_spring2025.json") + " " + path("problems/fall2023.json")).exit_code, 2);
}

TEST(Grade, TextFormat) {
  const auto r = cli("grade " + path("candidates/o1_spring2025.json") + " " + path("problems/spring2025.json") +
                     " --format text");
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.out.find("FALSE_OPTIMALITY_CLAIM"), std::string::npos);
  EXPECT_FALSE(json::accept(r.out));
  const auto env = cli("grade " + path("candidates/o1_spring2025.json") + " " + path("problems/spring2025.json"),
                       "VARCOMP_FORMAT=text");
  EXPECT_EQ(env.out, r.out);
}

TEST(Grade, ConventionFlag) {
  const auto cand = path("candidates/spring2025_swapped_labels.json");
  const auto prob = path("problems/spring2025.json");
  EXPECT_EQ(cli("grade " + cand + " " + prob).exit_code, 1);
  EXPECT_EQ(cli("grade " + cand + " " + prob + " --convention classical").exit_code, 0);
  EXPECT_EQ(cli("grade " + cand + " " + prob, "VARCOMP_CONVENTION=classical").exit_code, 0);
  EXPECT_EQ(cli("grade " + cand + " " + prob + " --convention paper", "VARCOMP_CONVENTION=classical").exit_code, 1);
}

TEST(Grade, RepeatedRunsAreByteIdentical) {
  for (const auto* rel : {"candidates/gpt4_powerflow.json", "reference/fall2023_reference.json"}) {
    const std::string prob = std::string(rel).find("powerflow") != std::string::npos ? "problems/pf3bus.json"
                                                                                        : "problems/fall2023.json";
    const auto a = cli("grade " + path(rel) + " " + path(prob));
    const auto b = cli("grade " + path(rel) + " " + path(prob));
    EXPECT_EQ(a.out, b.out);
    EXPECT_FALSE(a.out.empty());
  }
}

TEST(InputFiles, SchemaAndUnits) {
  auto prob = varcomp::io::read_json_file(fixture("problems/spring2025.json"));
  prob["schema_version"] = 2;
  EXPECT_EQ(cli("design " + write_temp("v2.json", prob)).exit_code, 2);

  prob = varcomp::io::read_json_file(fixture("problems/spring2025.json"));
  prob.erase("units");
  const auto r = cli("design " + write_temp("nounits.json", prob));
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.err.find("INVALID_PROBLEM"), std::string::npos);

  EXPECT_EQ(cli("design /nonexistent/problem.json").exit_code, 2);
  EXPECT_EQ(cli("design " + path("problems/fall2023.json")).exit_code, 2);
  EXPECT_EQ(cli("").exit_code, 2);
}

TEST(InputFiles, KilovoltsAreScaled) {
  auto prob = varcomp::io::read_json_file(fixture("problems/spring2025.json"));
  prob["units"] = {{"voltage", "kV"}, {"power", "VA"}};
  prob["v_rms"] = 0.1;
  const auto r = cli("design " + write_temp("kv.json", prob));
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NEAR(json::parse(r.out).at("x_l").get<double>(), 833.3, 833.3 * 0.005);
}

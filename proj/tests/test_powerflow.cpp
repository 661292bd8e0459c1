#include <gtest/gtest.h>

#include "oracles.hpp"
#include "support.hpp"
#include "varcomp/powerflow.hpp"

using namespace varcomp;

namespace {

Formulation formulate(const Network& n) { return assemble_formulation(n, build_ybus(n.branches, n.size())); }

PowerFlowSolution solve(const Network& n, NewtonOptions opt = {}) {
  const auto f = formulate(n);
  return solve_newton(f, f.flat_start(), opt);
}

template <typename F>
std::string code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

}  // namespace

TEST(YBus, ThreeBusGoldenEntries) {
  const auto n = support::pf3bus();
  const auto y = build_ybus(n.branches, n.size());
  const double g[3][3] = {{2, 0, -2}, {0, 0, 0}, {-2, 0, 2}};
  const double b[3][3] = {{-9, 5, 4}, {5, -15, 10}, {4, 10, -14}};
  for (int i = 0; i < 3; ++i) {
    double g_row = 0.0, b_row = 0.0;
    for (int k = 0; k < 3; ++k) {
      EXPECT_NEAR(y.g(i, k), g[i][k], 1e-12) << i << "," << k;
      EXPECT_NEAR(y.b(i, k), b[i][k], 1e-12) << i << "," << k;
      g_row += y.g(i, k);
      b_row += y.b(i, k);
    }
    EXPECT_NEAR(g_row, 0.0, 1e-12);
    EXPECT_NEAR(b_row, 0.0, 1e-12);
  }
}

TEST(YBus, RejectsBadBranches) {
  EXPECT_EQ(code_of([] { build_ybus({{1, 1, 0, 0.1}}, 2); }), "SELF_LOOP");
  EXPECT_EQ(code_of([] { build_ybus({{1, 3, 0, 0.1}}, 2); }), "BUS_OUT_OF_RANGE");
  EXPECT_EQ(code_of([] { build_ybus({{1, 2, 0, 0}}, 2); }), "ZERO_IMPEDANCE");
}

TEST(Formulation, DistributedSlackCounts) {
  const auto f = formulate(support::pf3bus());
  EXPECT_TRUE(f.distributed);
  ASSERT_EQ(f.n_vars(), 4);
  EXPECT_EQ(f.n_eqs(), 4);
  EXPECT_EQ(f.variables[0].name(), "theta2");
  EXPECT_EQ(f.variables[1].name(), "theta3");
  EXPECT_EQ(f.variables[2].name(), "V3");
  EXPECT_EQ(f.variables[3].name(), "p");
  EXPECT_DOUBLE_EQ(f.weights[0], 0.5);
  EXPECT_DOUBLE_EQ(f.weights[1], 0.5);
  EXPECT_DOUBLE_EQ(f.flat_start()(3), 1.5);
}

TEST(Newton, ConvergesFromFlatStart) {
  const auto s = solve(support::pf3bus());
  ASSERT_TRUE(s.converged);
  EXPECT_LE(s.iterations, 10);
  EXPECT_LT(s.final_mismatch, 1e-10);
  EXPECT_NEAR(s.buses[0].p, s.buses[1].p, 1e-12);
  ASSERT_TRUE(s.slack);
  EXPECT_NEAR(s.buses[0].p + s.buses[1].p, *s.slack, 1e-10);

  double total = 0.0;
  for (const auto& b : s.buses) total += b.p;
  EXPECT_NEAR(total, s.losses_p, 1e-8);
  EXPECT_GT(s.losses_p, 0.0);
  EXPECT_NEAR(*s.slack, 1.5 + s.losses_p, 1e-8);
  EXPECT_NEAR(s.buses[2].p, -1.5, 1e-10);
  EXPECT_NEAR(s.buses[2].q, -0.75, 1e-10);
}

TEST(Newton, LosslessVariantHasNoLosses) {
  const auto n = io::read_problem(support::fixture("problems/pf3bus_lossless.json")).network();
  const auto s = solve(n);
  ASSERT_TRUE(s.converged);
  EXPECT_NEAR(s.losses_p, 0.0, 1e-10);
  double total = 0.0;
  for (const auto& b : s.buses) total += b.p;
  EXPECT_NEAR(total, 0.0, 1e-10);
}

TEST(Newton, AgreesWithGaussSeidelOracle) {
  const auto s = solve(support::pf3bus());
  using oracle::GsBus;
  const std::vector<GsBus> buses{{GsBus::ref, 1.0, 0.0, 0.0, 0.5},
                                 {GsBus::pv, 1.0, 0.0, 0.0, 0.5},
                                 {GsBus::pq, 1.0, -1.5, -0.75, 0.0}};
  const std::vector<oracle::GsBranch> branches{{0, 1, {0.0, 0.2}}, {0, 2, {0.1, 0.2}}, {1, 2, {0.0, 0.1}}};
  const auto gs = oracle::gauss_seidel(buses, branches);
  ASSERT_TRUE(gs.converged);
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(std::abs(gs.v[i]), s.buses[i].v, 1e-8);
    EXPECT_NEAR(std::arg(gs.v[i]), s.buses[i].theta, 1e-8);
    EXPECT_NEAR(gs.s[i].real(), s.buses[i].p, 1e-8);
    EXPECT_NEAR(gs.s[i].imag(), s.buses[i].q, 1e-8);
  }
  EXPECT_NEAR(gs.slack, *s.slack, 1e-8);
}

TEST(Newton, AnalyticJacobianMatchesFiniteDifference) {
  const auto f = formulate(support::pf3bus());
  Eigen::VectorXd x = f.flat_start();
  for (const auto& point : {x, Eigen::VectorXd((Eigen::VectorXd(4) << -0.05, -0.2, 0.93, 1.6).finished())}) {
    const auto a = jacobian_analytic(f, point);
    const auto d = jacobian_fd(f, point);
    EXPECT_LT((a - d).cwiseAbs().maxCoeff(), 1e-6);
  }
  NewtonOptions opt;
  opt.jacobian = JacobianMethod::analytic;
  const auto sa = solve_newton(f, x, opt);
  const auto sf = solve_newton(f, x);
  ASSERT_TRUE(sa.converged);
  EXPECT_LT((sa.x - sf.x).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Newton, ZeroLoadConvergesImmediately) {
  const auto n = io::read_problem(support::fixture("problems/pf_zero_load.json")).network();
  const auto s = solve(n);
  EXPECT_TRUE(s.converged);
  EXPECT_EQ(s.iterations, 1);
  EXPECT_EQ(s.losses_p, 0.0);
}

TEST(Newton, ClassicSingleSlack) {
  auto n = support::pf3bus();
  n.buses[0].participation.reset();
  n.buses[1].type = BusType::voltage_controlled;
  n.buses[1].participation.reset();
  n.buses[1].p_inj = 0.0;
  const auto f = formulate(n);
  EXPECT_FALSE(f.distributed);
  EXPECT_EQ(f.n_vars(), 3);
  const auto s = solve_newton(f, f.flat_start());
  ASSERT_TRUE(s.converged);
  EXPECT_FALSE(s.slack);
  EXPECT_NEAR(s.buses[1].p, 0.0, 1e-10);
  EXPECT_NEAR(s.buses[0].p, 1.5 + s.losses_p, 1e-8);
}

TEST(Newton, IterationCapReportsNonConvergence) {
  NewtonOptions opt;
  opt.max_iter = 1;
  const auto s = solve(support::pf3bus(), opt);
  EXPECT_FALSE(s.converged);
  EXPECT_EQ(s.iterations, 2);
  EXPECT_GT(s.final_mismatch, opt.tol);
}

TEST(Newton, IsolatedBusIsSingular) {
  auto n = support::pf3bus();
  Bus island;
  island.id = 4;
  island.p_inj = 0.0;
  island.q_inj = 0.0;
  n.buses.push_back(island);
  EXPECT_EQ(code_of([&] { solve(n); }), "SINGULAR_JACOBIAN");
}

TEST(Newton, OptionGuards) {
  NewtonOptions opt;
  opt.tol = 0;
  EXPECT_EQ(code_of([&] { solve(support::pf3bus(), opt); }), "BAD_TOLERANCE");
  opt = {};
  opt.max_iter = 0;
  EXPECT_EQ(code_of([&] { solve(support::pf3bus(), opt); }), "BAD_MAX_ITER");
}

TEST(NetworkValidation, ErrorCodes) {
  EXPECT_EQ(code_of([] { io::read_problem(support::fixture("problems/pf_no_reference.json")); }), "NO_REFERENCE");

  auto n = support::pf3bus();
  n.buses[0].participation.reset();
  EXPECT_EQ(code_of([&] { n.validate(); }), "SLACK_GROUP_WITHOUT_REFERENCE");

  n = support::pf3bus();
  n.buses[1].type = BusType::reference;
  EXPECT_EQ(code_of([&] { n.validate(); }), "MULTIPLE_REFERENCES");

  n = support::pf3bus();
  n.buses[2].q_inj.reset();
  EXPECT_EQ(code_of([&] { n.validate(); }), "PQ_MISSING_INJECTION");

  n = support::pf3bus();
  n.buses[1].participation = -1.0;
  EXPECT_EQ(code_of([&] { n.validate(); }), "BAD_PARTICIPATION");
}

TEST(PostSolve, BranchFlowsBalance) {
  const auto s = solve(support::pf3bus());
  ASSERT_EQ(s.branches.size(), 3u);
  for (const auto& br : s.branches) {
    EXPECT_NEAR(br.p_from + br.p_to, br.loss_p, 1e-12);
    EXPECT_NEAR(br.q_from + br.q_to, br.loss_q, 1e-12);
  }
  EXPECT_EQ(s.branches[0].loss_p, 0.0);
  EXPECT_EQ(s.branches[2].loss_p, 0.0);
}

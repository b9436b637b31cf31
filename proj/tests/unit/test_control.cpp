#include <gtest/gtest.h>

#include "support/instances.hpp"

using namespace heatctl;
using testing_support::random_instance;

namespace {

ControlPair<double> random_pair(const DiscreteOperators<double>& ops, Eigen::Index N, std::uint64_t seed,
                                double scale = 1.0) {
  std::mt19937_64 rng(seed);
  return random_control(ops, N, rng, scale);
}

struct DenseProblem {
  oracle::DenseOps dense;
  oracle::SpaceTime st;
  oracle::Quadratic qd;
  Eigen::MatrixXd gram;
};

DenseProblem dense_problem(const testing_support::Instance& inst, Variant v) {
  DenseProblem d;
  d.st = testing_support::dense_space_time(inst, d.dense, v);
  d.qd = oracle::cost_quadratic(d.dense, d.st, oracle::stack(inst.data.z_d), inst.data.M1, inst.data.M2);
  d.gram = oracle::control_gram(d.dense, d.st);
  return d;
}

double hq_norm(const DenseProblem& d, const Eigen::VectorXd& x) { return std::sqrt(x.dot(d.gram * x)); }

}  // namespace

TEST(ApplyC, ZeroAndLinearity) {
  auto inst = random_instance(4, 5, 301);
  for (Variant v : {Variant::P, Variant::Palpha}) {
    const ReducedProblem<double> rp(inst.data, inst.ops, v);
    EXPECT_EQ(rp.apply_C(rp.zero_control()).slices.cwiseAbs().maxCoeff(), 0.0);
    const auto c = random_pair(inst.ops, 5, 1);
    const Matrix<double> twice = apply_C(inst.data, 2.0 * c, inst.ops, v).slices;
    EXPECT_LE((twice - 2.0 * rp.apply_C(c).slices).cwiseAbs().maxCoeff(), 1e-10);
    // C(c) = u_c - u_00
    const Matrix<double> diff = rp.state(c).slices - rp.state(rp.zero_control()).slices;
    EXPECT_LE((diff - rp.apply_C(c).slices).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(ApplyC, MatchesDenseLinearMap) {
  auto inst = random_instance(2, 2, 302);
  for (Variant v : {Variant::P, Variant::Palpha}) {
    const auto d = dense_problem(inst, v);
    const auto c = random_pair(inst.ops, 2, 2);
    const Eigen::VectorXd ref = d.st.S * oracle::stack(c.g, c.q);
    const auto got = oracle::stack(apply_C(inst.data, c, inst.ops, v).active());
    EXPECT_LE((got - ref).cwiseAbs().maxCoeff(), 1e-12 * (1 + ref.cwiseAbs().maxCoeff()));
  }
}

TEST(CostJ, ExactTrackingIsZero) {
  for (Variant v : {Variant::P, Variant::Palpha}) {
    auto inst = random_instance(3, 4, 303);
    testing_support::track_uncontrolled(inst, v);
    EXPECT_EQ(cost_J(inst.data, ControlPair<double>::zeros(inst.ops, 4), inst.ops, v), 0.0);
    EXPECT_EQ(gradient_J(inst.data, ControlPair<double>::zeros(inst.ops, 4), inst.ops, v).g.cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(CostJ, ZeroControlIsHalfTrackingNorm) {
  auto inst = random_instance(3, 4, 304);
  const ReducedProblem<double> rp(inst.data, inst.ops, Variant::P);
  const auto u = rp.state(rp.zero_control());
  Trajectory<double> r{u.slices, Role::State};
  r.slices.rightCols(4) -= inst.data.z_d;
  r.slices.col(0).setZero();
  const double half = 0.5 * std::pow(l2_H_norm(inst.ops, inst.data.tau(), r), 2);
  EXPECT_NEAR(rp.cost(rp.zero_control()), half, 1e-14 * half);
}

TEST(CostJ, MatchesDenseQuadraticForm) {
  auto inst = random_instance(2, 2, 305, 0.3, 0.7);
  for (Variant v : {Variant::P, Variant::Palpha}) {
    const auto d = dense_problem(inst, v);
    for (std::uint64_t s = 0; s < 5; ++s) {
      const auto c = random_pair(inst.ops, 2, 10 + s);
      const double ref = d.qd(oracle::stack(c.g, c.q));
      EXPECT_NEAR(cost_J(inst.data, c, inst.ops, v), ref, 1e-12 * ref);
    }
  }
}

TEST(GradientJ, MatchesDenseRieszRepresentative) {
  auto inst = random_instance(2, 2, 306);
  for (Variant v : {Variant::P, Variant::Palpha}) {
    const auto d = dense_problem(inst, v);
    const auto c = random_pair(inst.ops, 2, 3);
    const Eigen::VectorXd x = oracle::stack(c.g, c.q);
    const Eigen::VectorXd riesz = d.gram.partialPivLu().solve(d.qd.Pi * x - d.qd.L);
    const auto gr = gradient_J(inst.data, c, inst.ops, v);
    EXPECT_LE((oracle::stack(gr.g, gr.q) - riesz).cwiseAbs().maxCoeff(), 1e-10 * (1 + riesz.cwiseAbs().maxCoeff()));
  }
}

TEST(GradientJ, CentralDifferences) {
  for (Variant v : {Variant::P, Variant::Palpha}) {
    for (std::uint64_t seed : {307u, 308u}) {
      auto inst = random_instance(seed == 307u ? 3 : 6, 5, seed);
      const ReducedProblem<double> rp(inst.data, inst.ops, v);
      const auto r = gradient_fd_check(rp, 20, seed);
      EXPECT_LE(r.measured, 1e-6) << r.name;
    }
  }
}

TEST(ConvexityGap, TrivialCases) {
  auto inst = random_instance(3, 3, 309);
  const ReducedProblem<double> rp(inst.data, inst.ops, Variant::P);
  const auto c1 = random_pair(inst.ops, 3, 1), c2 = random_pair(inst.ops, 3, 2);
  EXPECT_NEAR(convexity_gap(rp, c1, c2, 0.0), 0.0, 1e-15);
  for (double t : {0.0, 0.3, 1.0}) EXPECT_NEAR(convexity_gap(rp, c1, c1, t), 0.0, 1e-14);
  EXPECT_THROW(convexity_gap(rp, c1, c2, 1.5), ContractError);
  EXPECT_THROW(convexity_gap(rp, c1, c2, -0.1), ContractError);
}

TEST(ConvexityGap, EqualsIdentityRightHandSide) {
  for (Variant v : {Variant::P, Variant::Palpha}) {
    auto inst = random_instance(4, 4, 310, 0.2, 0.05);
    const auto c1 = random_pair(inst.ops, 4, 4), c2 = random_pair(inst.ops, 4, 5);
    const double gap = convexity_gap(inst.data, c1, c2, 0.5, inst.ops, v);
    // Dense evaluation: t(1-t)/2 (c2-c1)^T Pi (c2-c1) at t = 1/2.
    const auto d = dense_problem(inst, v);
    const Eigen::VectorXd dc = oracle::stack(c2.g, c2.q) - oracle::stack(c1.g, c1.q);
    const double rhs = 0.125 * dc.dot(d.qd.Pi * dc);
    EXPECT_NEAR(gap, rhs, 1e-10 * rhs);
    const ReducedProblem<double> rp(inst.data, inst.ops, v);
    EXPECT_NEAR(convexity_identity_rhs(rp, c1, c2, 0.5), rhs, 1e-10 * rhs);
    EXPECT_LE(convexity_check(rp, 10, 6).measured, 1e-10);
  }
}

TEST(SolveCg, ExactTrackingStopsImmediately) {
  for (Variant v : {Variant::P, Variant::Palpha}) {
    auto inst = random_instance(3, 4, 311);
    testing_support::track_uncontrolled(inst, v);
    const auto rep = solve_cg(inst.data, inst.ops, v, 1e-10);
    EXPECT_TRUE(rep.converged);
    EXPECT_EQ(rep.iterations, 0);
    EXPECT_EQ(rep.cost, 0.0);
    EXPECT_EQ(rep.control.g.cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(SolveCg, MatchesDenseKkt) {
  for (Variant v : {Variant::P, Variant::Palpha}) {
    for (std::uint64_t seed : {312u, 313u, 314u}) {
      auto inst = random_instance(2, 2, seed, 0.05, 0.02, 10.0);
      const auto d = dense_problem(inst, v);
      const Eigen::VectorXd ref = oracle::kkt_solve(d.qd, d.st.n * d.st.N);
      const auto rep = solve_cg(inst.data, inst.ops, v, 1e-12);
      ASSERT_TRUE(rep.converged);
      const Eigen::VectorXd got = oracle::stack(rep.control.g, rep.control.q);
      EXPECT_LE(hq_norm(d, got - ref), 1e-8);
      EXPECT_NEAR(rep.cost, d.qd(ref), 1e-12);
    }
  }
}

TEST(SolveCg, ReportedGradientMatchesRecomputation) {
  auto inst = random_instance(6, 8, 315, 1e-2, 1e-2);
  for (Variant v : {Variant::P, Variant::Palpha}) {
    const double tol = 1e-10;
    const auto rep = solve_cg(inst.data, inst.ops, v, tol);
    ASSERT_TRUE(rep.converged);
    EXPECT_LE(rep.grad_norm, rep.tolerance);
    const ReducedProblem<double> rp(inst.data, inst.ops, v);
    const double fresh = rp.norm(rp.gradient(rep.control));
    EXPECT_NEAR(fresh, rep.grad_norm, 1e-12);
    EXPECT_EQ(rep.history.front().iteration, 0);
    EXPECT_EQ(rep.history.back().cost, rep.cost);
  }
}

TEST(SolveCg, LargePenaltyForcesZeroControl) {
  auto inst = random_instance(3, 4, 316, 1e6, 1e6);
  const auto rep = solve_cg(inst.data, inst.ops, Variant::P, 1e-12);
  const ReducedProblem<double> rp(inst.data, inst.ops, Variant::P);
  auto moderate = inst;
  moderate.data.M1 = moderate.data.M2 = 1e-2;
  const auto ref = solve_cg(moderate.data, moderate.ops, Variant::P, 1e-12);
  EXPECT_LE(rp.norm(rep.control), 1e-5 * rp.norm(ref.control));
}

TEST(SolveCg, IterationCapReportsNotConverged) {
  auto inst = random_instance(5, 6, 317, 1e-4, 1e-4);
  const auto rep = solve_cg(inst.data, inst.ops, Variant::P, 1e-14, 2);
  EXPECT_FALSE(rep.converged);
  EXPECT_EQ(rep.iterations, 2);
  EXPECT_THROW(solve_cg(inst.data, inst.ops, Variant::P, 0.0), ContractError);
}

TEST(ApplyW, ExactTrackingIsFixedAtZero) {
  auto inst = random_instance(3, 3, 318);
  testing_support::track_uncontrolled(inst, Variant::P);
  const auto w = apply_W(inst.data, ControlPair<double>::zeros(inst.ops, 3), inst.ops, Variant::P);
  EXPECT_EQ(w.g.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(w.q.cwiseAbs().maxCoeff(), 0.0);
}

TEST(ApplyW, MatchesScaledDenseAdjoint) {
  auto inst = random_instance(2, 2, 319, 0.4, 0.25);
  for (Variant v : {Variant::P, Variant::Palpha}) {
    oracle::DenseOps dense;
    const auto st = testing_support::dense_space_time(inst, dense, v);
    const auto c = random_pair(inst.ops, 2, 8);
    const Eigen::VectorXd u = st.state(oracle::stack(c.g, c.q));
    const Eigen::MatrixXd p = oracle::adjoint_from_transpose(dense, st, u - oracle::stack(inst.data.z_d));
    const auto w = apply_W(inst.data, c, inst.ops, v);
    const double scale = 1 + p.cwiseAbs().maxCoeff();
    EXPECT_LE((w.g + p / 0.4).cwiseAbs().maxCoeff(), 1e-11 * scale / 0.4);
    EXPECT_LE((w.q - dense.T2 * p / 0.25).cwiseAbs().maxCoeff(), 1e-11 * scale / 0.25);
  }
}

TEST(ApplyW, FixedPointHasZeroGradient) {
  auto inst = random_instance(4, 4, 320, 50, 50);
  const ReducedProblem<double> rp(inst.data, inst.ops, Variant::P);
  const auto rep = solve_fixed_point(rp, FixedPointOptions{1e-13, 200});
  ASSERT_TRUE(rep.converged);
  EXPECT_LE(rp.norm(rp.apply_W(rep.control) - rep.control), 1e-12);
  EXPECT_LE(rp.norm(rp.gradient(rep.control)), 1e-10);
}

TEST(ContractionConstant, FormulaExamples) {
  ConstantsReport<double> k;
  k.lambda0 = 1;
  k.lambda1 = 1;
  k.trace_norm = 1;
  EXPECT_NEAR(contraction_constant(k, 4.0, 4.0, Variant::P), std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(contraction_constant(k, 10.0, 10.0, Variant::P), 0.4 * std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(contraction_constant(k, 10.0, 10.0, Variant::P), 0.56569, 5e-6);
}

TEST(ContractionConstant, PalphaUsesLambda1TimesMinOneAlpha) {
  ConstantsReport<double> k;
  k.lambda0 = 0.5;
  k.lambda1 = 0.8;
  k.trace_norm = 1.5;
  const double at1 = contraction_constant(k, 2.0, 3.0, Variant::Palpha, 1.0);
  EXPECT_EQ(contraction_constant(k, 2.0, 3.0, Variant::Palpha, 1e4), at1);
  EXPECT_NEAR(contraction_constant(k, 2.0, 3.0, Variant::Palpha, 0.5), 4 * at1, 1e-12 * at1);
  k.lambda0 = 0.9;
  EXPECT_EQ(contraction_constant(k, 2.0, 3.0, Variant::Palpha, 10.0), at1);
  EXPECT_THROW(contraction_constant(k, 2.0, 3.0, Variant::Palpha, 0.0), ContractError);
}

TEST(SolveFixedPoint, ExactTrackingConvergesInOneStep) {
  auto inst = random_instance(3, 3, 321, 1e-3, 1e-3);
  testing_support::track_uncontrolled(inst, Variant::Palpha);
  const auto rep = solve_fixed_point(inst.data, inst.ops, Variant::Palpha, 1e-10);
  EXPECT_TRUE(rep.converged);
  EXPECT_EQ(rep.iterations, 1);
  EXPECT_EQ(rep.control.g.cwiseAbs().maxCoeff(), 0.0);
}

TEST(SolveFixedPoint, GeometricDecayAndAgreementWithCg) {
  // Weights sized so that the computed contraction constant is about 0.5.
  const auto probe = random_instance(6, 8, 322);
  const auto k = compute_constants(probe.ops);
  const double g = k.trace_norm;
  const double m = 2.0 / (k.lambda0 * k.lambda0) * std::sqrt(1 + g * g) * (1 + g) / 0.5;
  auto inst = random_instance(6, 8, 322, m, m);
  const double c0 = contraction_constant(k, m, m, Variant::P);
  EXPECT_NEAR(c0, 0.5, 1e-12);
  const ReducedProblem<double> rp(inst.data, inst.ops, Variant::P);
  const double tol = 1e-11;
  const auto fp = solve_fixed_point(rp, FixedPointOptions{tol, 500});
  ASSERT_TRUE(fp.converged);
  EXPECT_LE(fp.contraction_ratio, 0.6);
  const auto cg = minimize_cg(rp, rp.zero_control(), CgOptions{1e-13, 500, false});
  EXPECT_LE(rp.norm(fp.control - cg.control), 10 * tol);
}

TEST(SolveFixedPoint, TinyWeightsDiverge) {
  auto inst = random_instance(4, 4, 323, 1e-4, 1e-4);
  const ReducedProblem<double> rp(inst.data, inst.ops, Variant::P);
  const auto rep = solve_fixed_point(rp, FixedPointOptions{1e-10, 200});
  EXPECT_FALSE(rep.converged);
  EXPECT_GT(rep.contraction_ratio, 1.0);
}

TEST(SolveDistributedOnly, ZeroTrackingGivesZero) {
  auto inst = random_instance(3, 3, 324);
  testing_support::track_uncontrolled(inst, Variant::P);
  const auto rep = solve_distributed_only(inst.data, Matrix<double>(Matrix<double>::Zero(inst.ops.num_gamma2(), 3)),
                                          inst.ops, Variant::P, 1e-10);
  EXPECT_TRUE(rep.converged);
  EXPECT_EQ(rep.control.g.cwiseAbs().maxCoeff(), 0.0);
}

TEST(SolveDistributedOnly, MatchesDenseGBlock) {
  for (Variant v : {Variant::P, Variant::Palpha}) {
    auto inst = random_instance(2, 2, 325, 0.05, 0.05);
    const auto d = dense_problem(inst, v);
    std::mt19937_64 rng(12);
    const Matrix<double> q = testing_support::uniform(inst.ops.num_gamma2(), 2, rng);
    const auto rep = solve_distributed_only(inst.data, q, inst.ops, v, 1e-12);
    ASSERT_TRUE(rep.converged);
    EXPECT_EQ(rep.control.q, q);
    const Eigen::VectorXd ref = oracle::kkt_solve(d.qd, d.st.n * d.st.N, true, oracle::stack(q));
    EXPECT_LE(hq_norm(d, oracle::stack(rep.control.g, rep.control.q) - ref), 1e-8);
    // Constant M2/2 |q|^2 is kept in the cost.
    EXPECT_NEAR(rep.cost, d.qd(ref), 1e-12 * (1 + d.qd(ref)));
  }
}

TEST(SolveDistributedOnly, JointOptimumIsNoWorse) {
  for (Variant v : {Variant::P, Variant::Palpha}) {
    auto inst = random_instance(5, 6, 326, 0.02, 0.03);
    const auto joint = solve_cg(inst.data, inst.ops, v, 1e-12);
    std::mt19937_64 rng(13);
    for (int k = 0; k < 3; ++k) {
      const Matrix<double> q = k == 0 ? joint.control.q : testing_support::uniform(inst.ops.num_gamma2(), 6, rng);
      const auto dist = solve_distributed_only(inst.data, q, inst.ops, v, 1e-12);
      EXPECT_LE(joint.cost, dist.cost + 1e-12 * (1 + dist.cost));
    }
  }
}

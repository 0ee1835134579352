#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "qp_oracle.hpp"
#include "rmpwbc/biped.hpp"
#include "rmpwbc/linalg.hpp"
#include "rmpwbc/wbc.hpp"
#include "test_util.hpp"
#include "wbc_oracle.hpp"

using namespace rmpwbc;
using namespace rmpwbc::wbc;
using rmpwbc::testing::Leaf;
using rmpwbc::testing::max_abs;
using rmpwbc::testing::random_matrix;
using rmpwbc::testing::random_psd;
using rmpwbc::testing::random_spd;
using rmpwbc::testing::random_vector;

namespace {

ContactConstraint random_contact(std::mt19937& rng, int rows, int nv) {
  return {random_matrix(rng, rows, nv), random_vector(rng, rows)};
}

TaskLevel random_task(std::mt19937& rng, const std::string& name, int rows, int nv) {
  return {name, random_matrix(rng, rows, nv), random_vector(rng, rows), random_vector(rng, rows, 3.0)};
}

rmp::NaturalRmp root_of(const std::vector<Leaf>& leaves, int nv) {
  std::vector<rmp::ChildRmp> kids;
  for (const Leaf& l : leaves) kids.push_back({rmp::to_natural({l.xdd, l.M}), l.J, l.Jdot_qdot});
  return rmp::pullback(kids, nv);
}

std::vector<Leaf> random_leaves(std::mt19937& rng, int count, int nv) {
  std::vector<Leaf> leaves;
  for (int i = 0; i < count; ++i) {
    const int m = 1 + static_cast<int>(rng() % 3);
    leaves.push_back({random_matrix(rng, m, nv), random_vector(rng, m), random_vector(rng, m, 5.0),
                      random_psd(rng, m, m) + 0.01 * MatX::Identity(m, m)});
  }
  return leaves;
}

struct StanceSetup {
  RobotModel model = rmpwbc::testing::pat_model();
  RobotState state;
  KinematicsCache kin;
  DynamicsTerms dyn;
  ContactConstraint contact;
};

StanceSetup stance(double vel_scale, unsigned seed) {
  StanceSetup s;
  s.state = biped::standing_state(s.model, biped::Dimensions{}, 0.45, 0.0);
  std::mt19937 rng(seed);
  s.state.velocity = random_vector(rng, s.model.nv(), vel_scale);
  s.kin = s.model.kinematics(s.state);
  s.dyn = s.model.dynamics(s.kin);
  const auto lf = s.model.frame("l_foot");
  const auto rf = s.model.frame("r_foot");
  s.contact.Jc = MatX(6, s.model.nv());
  s.contact.Jc << s.model.point_jacobian(s.kin, lf), s.model.point_jacobian(s.kin, rf);
  s.contact.Jcdot_qdot = VecX(6);
  s.contact.Jcdot_qdot << s.model.jdot_qdot(s.kin, lf).tail<3>(), s.model.jdot_qdot(s.kin, rf).tail<3>();
  return s;
}

}  // namespace

TEST(DynPinv, IdentityInertiaGivesMoorePenrose) {
  std::mt19937 rng(1);
  const MatX J = random_matrix(rng, 3, 7);
  const auto dp = linalg::dyn_pinv(J, MatX::Identity(7, 7));
  EXPECT_LT(max_abs(dp.Jbar - linalg::pinv(J)), 1e-10);
}

TEST(DynPinv, SquareInvertibleGivesInverse) {
  std::mt19937 rng(2);
  const MatX J = random_matrix(rng, 5, 5) + 3.0 * MatX::Identity(5, 5);
  const auto dp = linalg::dyn_pinv(J, random_spd(rng, 5));
  EXPECT_LT(max_abs(dp.Jbar - J.inverse()), 1e-8);
}

TEST(DynPinv, RightInverseForFullRowRank) {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 12, m = 1 + trial % 8;
    const MatX J = random_matrix(rng, m, n);
    const auto dp = linalg::dyn_pinv(J, random_spd(rng, n));
    EXPECT_LT(max_abs(J * dp.Jbar - MatX::Identity(m, m)), 1e-8);
    EXPECT_EQ(dp.rank, m);
  }
}

TEST(DynPinv, RankDeficientStaysFinite) {
  std::mt19937 rng(4);
  MatX J = random_matrix(rng, 3, 6);
  J.row(2) = J.row(0) + J.row(1);
  const auto dp = linalg::dyn_pinv(J, random_spd(rng, 6));
  EXPECT_EQ(dp.rank, 2);
  EXPECT_TRUE(dp.Jbar.allFinite());
  // J Jbar is the projector onto range(J).
  const MatX P = J * dp.Jbar;
  EXPECT_LT(max_abs(P * P - P), 1e-8);
  EXPECT_LT(max_abs(P * J - J), 1e-8);
}

TEST(ContactAccel, ZeroVelocityGivesZero) {
  std::mt19937 rng(5);
  const MatX A = random_spd(rng, 12);
  ContactConstraint c{random_matrix(rng, 6, 12), VecX::Zero(6)};
  const auto p = contact_accel(c, Eigen::LLT<MatX>(A));
  EXPECT_LT(max_abs(p.qdd), 1e-15);
}

TEST(ContactAccel, ContactPointDoesNotAccelerate) {
  const auto s = stance(1.0, 6);
  const auto p = contact_accel(s.contact, Eigen::LLT<MatX>(s.dyn.A));
  EXPECT_LT(max_abs(s.contact.Jc * p.qdd + s.contact.Jcdot_qdot), 1e-8);
  EXPECT_LT(max_abs(p.N * p.N - p.N), 1e-8);
  EXPECT_LT(max_abs(s.contact.Jc * p.N), 1e-8);
}

TEST(ContactAccel, NoContactIsVacuous) {
  std::mt19937 rng(7);
  const auto p = contact_accel(ContactConstraint::none(8), Eigen::LLT<MatX>(random_spd(rng, 8)));
  EXPECT_EQ(p.qdd, VecX::Zero(8));
  EXPECT_EQ(p.N, MatX::Identity(8, 8));
}

TEST(ProjectTasks, EmptyStackNoContact) {
  const auto p = project_tasks(ContactConstraint::none(5), {}, MatX::Identity(5, 5));
  EXPECT_EQ(p.qdd, VecX::Zero(5));
  EXPECT_EQ(p.N, MatX::Identity(5, 5));
}

TEST(ProjectTasks, SingleTaskReducesToLeastSquares) {
  std::mt19937 rng(8);
  const auto t = random_task(rng, "t", 3, 7);
  const std::vector<TaskLevel> tasks{t};
  const auto p = project_tasks(ContactConstraint::none(7), tasks, MatX::Identity(7, 7));
  EXPECT_LT(max_abs(p.qdd - linalg::pinv(t.J) * (t.xdd_cmd - t.Jdot_qdot)), 1e-10);
}

TEST(ProjectTasks, StanceStackTracksEveryLevel) {
  const auto s = stance(0.5, 9);
  const int nv = s.model.nv();
  const auto base = s.model.frame("base");
  const MatX Jb = s.model.frame_jacobian(s.kin, base);
  const Vec6 jb = s.model.jdot_qdot(s.kin, base);
  std::mt19937 rng(10);
  const std::vector<TaskLevel> tasks{
      {"orientation", Jb.topRows(3), jb.head(3), random_vector(rng, 3)},
      {"position", Jb.bottomRows(3), jb.tail(3), random_vector(rng, 3)},
  };
  const auto p = project_tasks(s.contact, tasks, s.dyn.A);
  ASSERT_EQ(p.num_levels(), 3);
  for (const auto& lvl : p.levels) EXPECT_LT(lvl.residual, 1e-6) << lvl.name;
  // Lower priority leaves higher levels untouched.
  EXPECT_LT(max_abs(tasks[0].J * (p.level_qdd[2] - p.level_qdd[1])), 1e-8);
  EXPECT_LT(max_abs(s.contact.Jc * (p.level_qdd[2] - p.level_qdd[0])), 1e-8);
  for (const MatX& N : p.level_N) EXPECT_LT(max_abs(N * N - N), 1e-8);
  (void)nv;
}

TEST(ProjectTasks, RandomProjectorAlgebra) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 12;
    const MatX A = random_spd(rng, n);
    const auto c = random_contact(rng, 3 * (1 + trial % 2), n);
    const std::vector<TaskLevel> tasks{random_task(rng, "a", 2, n), random_task(rng, "b", 3, n)};
    const auto p = project_tasks(c, tasks, A);
    for (const MatX& N : p.level_N) EXPECT_LT(max_abs(N * N - N), 1e-8);
    EXPECT_LT(max_abs(c.Jc * p.level_N[0]), 1e-8);
    for (const MatX& Jpre : p.level_Jpre) EXPECT_LT(max_abs(Jpre * p.N), 1e-8);
    for (const auto& lvl : p.levels) EXPECT_LT(lvl.residual, 1e-6) << lvl.name;
  }
}

TEST(ProjectTasks, RankCollapseIsReported) {
  std::mt19937 rng(12);
  const int n = 6;
  const MatX A = random_spd(rng, n);
  const auto t1 = random_task(rng, "a", 4, n);
  auto t2 = random_task(rng, "b", 3, n);
  t2.J.topRows(2) = t1.J.topRows(2);  // partly shadowed by the first level
  const std::vector<TaskLevel> tasks{t1, t2};
  const auto p = project_tasks(ContactConstraint::none(n), tasks, A);
  EXPECT_EQ(p.levels[1].rank, 4);
  EXPECT_EQ(p.levels[2].rank, 1);
  EXPECT_GT(p.levels[2].residual, 1e-6);
}

TEST(ModifiedPullback, IdentityProjectorIsPlainPullback) {
  std::mt19937 rng(13);
  const rmp::NaturalRmp root{random_vector(rng, 6), random_spd(rng, 6)};
  const auto out = modified_pullback(root, MatX::Identity(6, 6), VecX::Zero(6));
  EXPECT_LT(max_abs(out.f - root.f), 1e-15);
  EXPECT_LT(max_abs(out.M - root.M), 1e-15);
}

TEST(ModifiedPullback, ZeroMetric) {
  std::mt19937 rng(14);
  const MatX N = random_matrix(rng, 5, 5);
  const rmp::NaturalRmp root{random_vector(rng, 5), MatX::Zero(5, 5)};
  const auto out = modified_pullback(root, N, random_vector(rng, 5));
  EXPECT_LT(max_abs(out.f - N.transpose() * root.f), 1e-14);
  EXPECT_EQ(out.M, MatX::Zero(5, 5));
}

TEST(ModifiedPullback, MatchesConstrainedLeastSquaresOracle) {
  std::mt19937 rng(15);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 4 + trial % 9;
    const MatX A = random_spd(rng, n);
    const int crow = trial % 3 == 0 ? 0 : std::min(3, n - 2);
    const auto c = random_contact(rng, crow, n);
    std::vector<TaskLevel> tasks;
    for (int k = 0; k < trial % 3 && crow + 2 * (k + 1) < n; ++k) tasks.push_back(random_task(rng, "t", 2, n));
    const auto proj = project_tasks(c, tasks, A);
    const auto leaves = random_leaves(rng, 1 + trial % 3, n);
    const auto projected = modified_pullback(root_of(leaves, n), proj.N, proj.qdd);
    EXPECT_GT(rmpwbc::testing::min_eigenvalue(projected.M), -1e-9);
    const VecX qdd = final_accel(proj.qdd, proj.N, projected);
    const VecX ref = rmpwbc::testing::constrained_lsq(leaves, proj.qdd, proj.N);
    const double got = rmpwbc::testing::leaf_objective(leaves, qdd);
    const double want = rmpwbc::testing::leaf_objective(leaves, ref);
    EXPECT_NEAR(got, want, 1e-6 * (1.0 + std::abs(want))) << "trial " << trial;
  }
}

TEST(FinalAccel, ZeroForceKeepsTaskCommand) {
  std::mt19937 rng(16);
  const VecX q = random_vector(rng, 6);
  const auto out = final_accel(q, random_matrix(rng, 6, 6), {VecX::Zero(6), random_spd(rng, 6)});
  EXPECT_LT(max_abs(out - q), 1e-15);
}

TEST(FinalAccel, ReducesToRmpflowWithoutHigherTasks) {
  std::mt19937 rng(17);
  const int n = 6;
  const auto leaves = random_leaves(rng, 1, n);
  std::vector<Leaf> full{{random_matrix(rng, n, n), random_vector(rng, n), random_vector(rng, n), random_spd(rng, n)}};
  const auto root = root_of(full, n);
  const auto proj = project_tasks(ContactConstraint::none(n), {}, random_spd(rng, n));
  const VecX q = final_accel(proj.qdd, proj.N, modified_pullback(root, proj.N, proj.qdd));
  EXPECT_LT(max_abs(q - rmp::resolve(root).a), 1e-8);
}

TEST(FinalAccel, NonInterferenceWithHigherPriorities) {
  std::mt19937 rng(18);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 12;
    const MatX A = random_spd(rng, n);
    const auto c = random_contact(rng, 3 * (1 + trial % 2), n);
    const std::vector<TaskLevel> tasks{random_task(rng, "a", 3, n), random_task(rng, "b", 2, n)};
    const auto proj = project_tasks(c, tasks, A);
    const auto leaves = random_leaves(rng, 3, n);
    const VecX q = final_accel(proj.qdd, proj.N, modified_pullback(root_of(leaves, n), proj.N, proj.qdd));
    EXPECT_LT(max_abs(c.Jc * q + c.Jcdot_qdot), 1e-6);
    for (const auto& t : tasks) EXPECT_LT(max_abs(t.J * (q - proj.qdd)), 1e-6);
  }
}

TEST(WbcQp, ConsistentCommandNeedsNoRelaxation) {
  auto s = stance(0.0, 19);
  s.state.velocity.setZero();
  const int nv = s.model.nv();
  std::mt19937 rng(20);
  WbcQpInput in;
  in.A = s.dyn.A;
  in.bias = s.dyn.bias;
  in.S_a = s.dyn.S_a;
  in.Jc = s.contact.Jc;
  in.f_ref = (VecX(6) << 1.0, -2.0, 25.0, -1.0, 2.0, 28.0).finished();
  in.bounds.assign(2, {});
  in.Q1 = MatX::Identity(6, 6);
  in.Q2 = 10.0 * MatX::Identity(6, 6);
  // Pick joint accelerations, then solve the floating rows for the base.
  VecX qdd(nv);
  qdd.tail(nv - 6) = random_vector(rng, nv - 6);
  const VecX rhs = in.Jc.leftCols(6).transpose() * in.f_ref - in.A.topRightCorner(6, nv - 6) * qdd.tail(nv - 6) -
                   in.bias.head(6);
  qdd.head(6) = in.A.topLeftCorner(6, 6).ldlt().solve(rhs);
  in.qdd_cmd = qdd;
  const auto out = solve_wbc_qp(in);
  ASSERT_TRUE(out.ok());
  EXPECT_LT(max_abs(out.delta_f), 1e-8);
  EXPECT_LT(max_abs(out.delta_fr), 1e-8);
}

TEST(WbcQp, StaticDoubleStanceCarriesBodyWeight) {
  auto s = stance(0.0, 21);
  WbcQpInput in;
  in.A = s.dyn.A;
  in.bias = s.dyn.bias;
  in.S_a = s.dyn.S_a;
  in.Jc = s.contact.Jc;
  const double w = 5.4 * 9.81;
  in.f_ref = (VecX(6) << 0, 0, w / 2, 0, 0, w / 2).finished();
  in.qdd_cmd = VecX::Zero(s.model.nv());
  in.bounds.assign(2, {});
  in.Q1 = MatX::Identity(6, 6);
  in.Q2 = 1e8 * MatX::Identity(6, 6);
  const auto out = solve_wbc_qp(in);
  ASSERT_TRUE(out.ok());
  EXPECT_NEAR(out.fr[2] + out.fr[5], 52.974, 1e-6);

  // With cheap base relaxation the vertical balance includes the base acceleration.
  in.Q2 = MatX::Identity(6, 6);
  const auto relaxed = solve_wbc_qp(in);
  ASSERT_TRUE(relaxed.ok());
  const VecX com_acc = s.model.com_jacobian(s.kin) * relaxed.qdd;
  EXPECT_NEAR(relaxed.fr[2] + relaxed.fr[5], 5.4 * (9.81 + com_acc[2]), 1e-6);
  EXPECT_LT(out.dynamics_residual, 1e-6);
  // Static stance with zero acceleration: inverse dynamics is pure gravity compensation.
  EXPECT_TRUE(out.tau.allFinite());
}

TEST(WbcQp, MatchesReferenceQpOnRandomInstances) {
  std::mt19937 rng(22);
  int solved = 0;
  for (int trial = 0; trial < 20; ++trial) {
    auto s = stance(0.3, 100 + trial);
    WbcQpInput in;
    in.A = s.dyn.A;
    in.bias = s.dyn.bias;
    in.S_a = s.dyn.S_a;
    in.Jc = s.contact.Jc;
    in.f_ref = random_vector(rng, 6, 15.0);
    in.f_ref[2] += 20.0;
    in.f_ref[5] += 20.0;
    in.qdd_cmd = random_vector(rng, s.model.nv(), 3.0);
    in.bounds = {{0.7, 2.0, 60.0}, {0.7, 0.0, std::numeric_limits<double>::infinity()}};
    in.Q1 = random_spd(rng, 6, 0.5);
    in.Q2 = random_spd(rng, 6, 0.5) * 10.0;
    const auto out = solve_wbc_qp(in);

    // Same problem handed to the enumeration oracle.
    qp::Problem P;
    P.H = MatX::Zero(12, 12);
    P.H.topLeftCorner(6, 6) = 2.0 * in.Q2;
    P.H.bottomRightCorner(6, 6) = 2.0 * in.Q1;
    P.g = VecX::Zero(12);
    P.Aeq = MatX(6, 12);
    P.Aeq << in.A.topLeftCorner(6, 6), -in.Jc.leftCols(6).transpose();
    P.beq = in.Jc.leftCols(6).transpose() * in.f_ref - in.A.topRows(6) * in.qdd_cmd - in.bias.head(6);
    MatX W;
    VecX b;
    friction_constraints(in.bounds, W, b);
    P.Ain = MatX::Zero(W.rows(), 12);
    P.Ain.rightCols(6) = W;
    P.bin = b - W * in.f_ref;
    const auto ref = rmpwbc::testing::brute_force(P);
    ASSERT_EQ(ref.feasible, out.ok()) << "trial " << trial;
    if (!out.ok()) continue;
    ++solved;
    EXPECT_NEAR(out.objective, ref.objective, 1e-6 * (1.0 + std::abs(ref.objective))) << "trial " << trial;
    EXPECT_GT((W * out.fr - b).minCoeff(), -1e-9);
    EXPECT_LT(out.dynamics_residual, 1e-6);
  }
  EXPECT_GT(solved, 10);
}

TEST(WbcQp, TransitionBoundsAreEnforced) {
  auto s = stance(0.0, 23);
  WbcQpInput in;
  in.A = s.dyn.A;
  in.bias = s.dyn.bias;
  in.S_a = s.dyn.S_a;
  in.Jc = s.contact.Jc;
  const double w = 5.4 * 9.81;
  in.f_ref = (VecX(6) << 0, 0, w / 2, 0, 0, w / 2).finished();
  in.qdd_cmd = VecX::Zero(s.model.nv());
  in.bounds = {{0.7, 0.0, 5.0}, {0.7, 0.0, std::numeric_limits<double>::infinity()}};
  in.Q1 = MatX::Identity(6, 6);
  in.Q2 = MatX::Identity(6, 6);
  const auto out = solve_wbc_qp(in);
  ASSERT_TRUE(out.ok());
  EXPECT_LE(out.fr[2], 5.0 + 1e-9);
  EXPECT_FALSE(out.active_constraints.empty());
}

TEST(WbcQp, FrictionConstraintRows) {
  MatX W;
  VecX b;
  const std::vector<ContactForceBounds> bounds{{0.7, 1.0, 9.0}};
  friction_constraints(bounds, W, b);
  ASSERT_EQ(W.rows(), 6);
  const Vec3 inside(0.5, -0.5, 2.0);
  EXPECT_GE((W * inside - b).minCoeff(), 0.0);
  const Vec3 slipping(2.0, 0.0, 2.0);
  EXPECT_LT((W * slipping - b).minCoeff(), 0.0);
  const Vec3 too_heavy(0.0, 0.0, 10.0);
  EXPECT_LT((W * too_heavy - b).minCoeff(), 0.0);
}

TEST(Apf, DecaysAndIgnoresVelocity) {
  ApfParams p;
  EXPECT_NEAR(apf_rmp(1.0, p).a[0], 0.0, 1e-12);
  EXPECT_DOUBLE_EQ(apf_rmp(0.0, p).a[0], p.k_p);
  EXPECT_DOUBLE_EQ(apf_rmp(0.0, p).M(0, 0), 1.0);
  WitnessPair w;
  w.distance = 0.0;
  w.normal = Vec3(0, 1, 0);
  EXPECT_LT((apf_baseline_accel(w, p) - Vec3(0, p.k_p, 0)).norm(), 1e-12);
  // The collision policy responds to approach velocity, the APF leaf cannot.
  rmp::CollisionRmpParams c;
  EXPECT_NE(rmp::collision_rmp(0.01, -0.5, c).a[0], rmp::collision_rmp(0.01, 0.5, c).a[0]);
}

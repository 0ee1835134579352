#include <gtest/gtest.h>

#include <Eigen/Cholesky>

#include "rmpwbc/geometry.hpp"
#include "test_util.hpp"

namespace rmpwbc {
namespace {

using testing::max_abs;

BodyDescription free_body(const std::string& name, double mass = 2.0) {
  BodyDescription b;
  b.name = name;
  b.joint_type = JointType::Floating;
  b.mass = mass;
  b.rotational_inertia = Vec3(0.1, 0.2, 0.3).asDiagonal();
  return b;
}

BodyDescription link(const std::string& name, const std::string& parent, const Vec3& axis, const Vec3& offset,
                     double mass = 1.0, const Vec3& com = Vec3::Zero()) {
  BodyDescription b;
  b.name = name;
  b.parent = parent;
  b.joint_type = JointType::Revolute;
  b.joint_axis = axis;
  b.translation_to_parent = offset;
  b.mass = mass;
  b.com_offset = com;
  b.rotational_inertia = Vec3(0.01, 0.01, 0.01).asDiagonal();
  return b;
}

// Base plus a two-link planar arm rotating about world y; link lengths l1, l2.
ModelDescription two_link(double l1, double l2) {
  ModelDescription d;
  d.bodies.push_back(free_body("base", 5.0));
  d.bodies.push_back(link("link1", "base", Vec3::UnitY(), Vec3::Zero()));
  d.bodies.push_back(link("link2", "link1", Vec3::UnitY(), Vec3(0.0, 0.0, -l1)));
  d.frames.push_back({"tip", "link2", Vec3(0.0, 0.0, -l2)});
  d.gravity.setZero();
  return d;
}

TEST(BuildModel, SingleFloatingBodyHasSixDof) {
  ModelDescription d;
  d.bodies.push_back(free_body("base"));
  const RobotModel m = build_model(d);
  EXPECT_EQ(m.nv(), 6);
  EXPECT_EQ(m.num_joints(), 0);
}

TEST(BuildModel, BipedHasTwelveDof) {
  const RobotModel m = testing::pat_model();
  EXPECT_EQ(m.nv(), 12);
  EXPECT_EQ(m.actuated_velocity_indices().size(), 6u);
  EXPECT_NEAR(m.total_mass(), 5.4, 1e-12);
}

TEST(BuildModel, RejectsMalformedTrees) {
  ModelDescription self;
  self.bodies.push_back(free_body("base"));
  self.bodies.push_back(link("a", "a", Vec3::UnitX(), Vec3::Zero()));
  EXPECT_THROW(build_model(self), ModelError);

  ModelDescription cycle;
  cycle.bodies.push_back(free_body("base"));
  cycle.bodies.push_back(link("a", "b", Vec3::UnitX(), Vec3::Zero()));
  cycle.bodies.push_back(link("b", "a", Vec3::UnitX(), Vec3::Zero()));
  EXPECT_THROW(build_model(cycle), ModelError);

  ModelDescription dup;
  dup.bodies.push_back(free_body("base"));
  dup.bodies.push_back(link("a", "base", Vec3::UnitX(), Vec3::Zero()));
  dup.bodies.push_back(link("a", "base", Vec3::UnitY(), Vec3::Zero()));
  EXPECT_THROW(build_model(dup), ModelError);

  ModelDescription axis;
  axis.bodies.push_back(free_body("base"));
  axis.bodies.push_back(link("a", "base", Vec3(1.0, 0.1, 0.0), Vec3::Zero()));
  EXPECT_THROW(build_model(axis), ModelError);

  ModelDescription two_roots;
  two_roots.bodies.push_back(free_body("base"));
  two_roots.bodies.push_back(free_body("other"));
  EXPECT_THROW(build_model(two_roots), ModelError);

  ModelDescription bad_mass;
  bad_mass.bodies.push_back(free_body("base", 0.0));
  EXPECT_THROW(build_model(bad_mass), ModelError);

  ModelDescription bad_capsule;
  bad_capsule.bodies.push_back(free_body("base"));
  bad_capsule.capsules.push_back({"c", "base", Vec3::Zero(), Vec3::UnitZ(), 0.0});
  EXPECT_THROW(build_model(bad_capsule), ModelError);
}

TEST(MassMatrix, FreeBodyTranslationalBlockIsMassTimesIdentity) {
  ModelDescription d;
  d.bodies.push_back(free_body("base", 3.0));
  const RobotModel m = build_model(d);
  const MatX A = mass_matrix(m, m.neutral_state());
  EXPECT_LT(max_abs(A.bottomRightCorner<3, 3>() - 3.0 * Mat3::Identity()), 1e-14);
}

TEST(MassMatrix, MatchesKineticEnergyOracleAtNominalStance) {
  const RobotModel m = testing::pat_model();
  const RobotState s = biped::standing_state(m, {}, 0.45);
  const MatX A = mass_matrix(m, s);
  const MatX oracle = testing::kinetic_energy_mass_matrix(m, s);
  EXPECT_LT(max_abs(A - oracle), 1e-6 * max_abs(A));
}

TEST(MassMatrix, SymmetricPositiveDefiniteAtRandomStates) {
  const RobotModel m = testing::pat_model();
  std::mt19937 rng(7);
  for (int k = 0; k < 50; ++k) {
    const RobotState s = testing::random_state(m, rng);
    const MatX A = mass_matrix(m, s);
    EXPECT_LT(max_abs(A - A.transpose()), 1e-10);
    EXPECT_EQ(Eigen::LLT<MatX>(A).info(), Eigen::Success);
  }
  const RobotState s = testing::random_state(m, rng);
  EXPECT_LT(max_abs(mass_matrix(m, s) - testing::kinetic_energy_mass_matrix(m, s)), 1e-6);
}

TEST(BiasForces, ZeroAtRestWithoutGravity) {
  ModelDescription d = biped::pat_description();
  d.gravity.setZero();
  const RobotModel m = build_model(d);
  std::mt19937 rng(3);
  RobotState s = testing::random_state(m, rng);
  s.velocity.setZero();
  EXPECT_LT(bias_forces(m, s).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(BiasForces, GravityOnlyFreeBody) {
  ModelDescription d;
  d.bodies.push_back(free_body("base", 2.0));
  const RobotModel m = build_model(d);
  const VecX b = bias_forces(m, m.neutral_state());
  EXPECT_LT((b.tail<3>() - Vec3(0.0, 0.0, 2.0 * kGravity)).norm(), 1e-12);
  EXPECT_LT(b.head<3>().norm(), 1e-12);
}

TEST(BiasForces, MatchesKaneOracleAtRandomStates) {
  const RobotModel m = testing::pat_model();
  std::mt19937 rng(11);
  for (int k = 0; k < 10; ++k) {
    const RobotState s = testing::random_state(m, rng);
    const VecX b = bias_forces(m, s);
    const VecX oracle = testing::kane_bias(m, s);
    EXPECT_LT((b - oracle).cwiseAbs().maxCoeff(), 1e-5) << "state " << k;
  }
}

TEST(FrameJacobian, FloatingFrameOfJointlessModelIsIdentityInLocalCoordinates) {
  ModelDescription d;
  d.bodies.push_back(free_body("base"));
  const RobotModel m = build_model(d);
  std::mt19937 rng(5);
  const RobotState s = testing::random_state(m, rng);
  const MatX J = frame_jacobian(m, s, m.frame("base"), ReferenceFrame::Local);
  EXPECT_LT(max_abs(J - MatX::Identity(6, 6)), 1e-14);
}

TEST(FrameJacobian, WorldFixedFrameIsZero) {
  ModelDescription d = biped::pat_description();
  d.frames.push_back({"anchor", "world", Vec3(1.0, 2.0, 0.0)});
  const RobotModel m = build_model(d);
  std::mt19937 rng(5);
  const RobotState s = testing::random_state(m, rng);
  EXPECT_EQ(max_abs(frame_jacobian(m, s, m.frame("anchor"))), 0.0);
  EXPECT_EQ(jdot_qdot(m, s, m.frame("anchor")).norm(), 0.0);
}

TEST(FrameJacobian, FootColumnsMatchForwardKinematicsDifferences) {
  const RobotModel m = testing::pat_model();
  std::mt19937 rng(9);
  const auto& frame = m.frames()[m.frame("l_foot").index];
  for (int k = 0; k < 20; ++k) {
    const RobotState s = testing::random_state(m, rng);
    const MatX J = frame_jacobian(m, s, m.frame("l_foot"));
    for (int c = 0; c < m.nv(); ++c) {
      const auto fd = testing::fd_body_velocity(m, s, VecX::Unit(m.nv(), c), frame.body, frame.offset);
      EXPECT_LT((J.block<3, 1>(3, c) - fd.linear).norm(), 1e-6);
      EXPECT_LT((J.block<3, 1>(0, c) - fd.angular).norm(), 1e-6);
    }
  }
}

TEST(JdotQdot, ZeroVelocityGivesZero) {
  const RobotModel m = testing::pat_model();
  std::mt19937 rng(2);
  RobotState s = testing::random_state(m, rng);
  s.velocity.setZero();
  EXPECT_EQ(jdot_qdot(m, s, m.frame("r_foot")).norm(), 0.0);
}

TEST(JdotQdot, PlanarTwoLinkCentripetalTerm) {
  const double l1 = 0.4, l2 = 0.3;
  const RobotModel m = build_model(two_link(l1, l2));
  RobotState s = m.neutral_state();
  const double q1 = 0.3, q2 = -0.8, w1 = 1.7, w2 = -2.3;
  s.joint_positions << q1, q2;
  s.velocity.setZero();
  s.velocity[6] = w1;
  s.velocity[7] = w2;
  // Rotation about +y maps -z to (-sin q, 0, -cos q); tip acceleration at
  // qdd = 0 is purely centripetal.
  const Vec3 e1(-std::sin(q1), 0.0, -std::cos(q1));
  const Vec3 e12(-std::sin(q1 + q2), 0.0, -std::cos(q1 + q2));
  const Vec3 expected = -l1 * w1 * w1 * e1 - l2 * (w1 + w2) * (w1 + w2) * e12;
  const Vec6 jd = jdot_qdot(m, s, m.frame("tip"));
  EXPECT_LT((jd.tail<3>() - expected).norm(), 1e-8);
  EXPECT_LT(jd.head<3>().norm(), 1e-12);
}

TEST(JdotQdot, MatchesJacobianFiniteDifferenceAlongFlow) {
  const RobotModel m = testing::pat_model();
  std::mt19937 rng(21);
  for (const char* name : {"l_foot", "r_foot", "base"}) {
    const RobotState s = testing::random_state(m, rng);
    const double eps = 1e-6;
    const MatX Jp = frame_jacobian(m, s.integrated(s.velocity, eps), m.frame(name));
    const MatX Jm = frame_jacobian(m, s.integrated(s.velocity, -eps), m.frame(name));
    const VecX fd = (Jp - Jm) / (2.0 * eps) * s.velocity;
    EXPECT_LT((jdot_qdot(m, s, m.frame(name)) - fd).norm(), 1e-4) << name;
  }
}

TEST(CapsuleWitness, ParallelVerticalCapsules) {
  ModelDescription d;
  d.bodies.push_back(free_body("base"));
  d.capsules.push_back({"a", "base", Vec3(0.0, 0.05, 0.0), Vec3(0.0, 0.05, 0.3), 0.015});
  d.capsules.push_back({"b", "base", Vec3(0.0, -0.05, 0.0), Vec3(0.0, -0.05, 0.3), 0.015});
  const RobotModel m = build_model(d);
  const WitnessPair w = capsule_witness(m, m.neutral_state(), 0, 1);
  EXPECT_NEAR(w.distance, 0.07, 1e-12);
  // Overlapping parallel axes: witness at the overlap midpoint.
  EXPECT_NEAR(w.point_a.z(), 0.15, 1e-12);
  EXPECT_LT((w.normal - Vec3::UnitY()).norm(), 1e-12);
}

TEST(CapsuleWitness, CoincidentPointCapsulesUseTieBreak) {
  ModelDescription d;
  d.bodies.push_back(free_body("base"));
  d.capsules.push_back({"a", "base", Vec3::Zero(), Vec3::Zero(), 0.02});
  d.capsules.push_back({"b", "base", Vec3::Zero(), Vec3::Zero(), 0.03});
  const RobotModel m = build_model(d);
  const WitnessPair w = capsule_witness(m, m.neutral_state(), 0, 1);
  EXPECT_NEAR(w.distance, -0.05, 1e-15);
  EXPECT_EQ(w.normal, Vec3::UnitY());
  EXPECT_TRUE(w.jacobian_rel.allFinite());
}

TEST(CapsuleWitness, JacobianMatchesDistanceRate) {
  const RobotModel m = testing::pat_model();
  std::mt19937 rng(4);
  const int a = m.capsule_index("l_shank"), b = m.capsule_index("r_shank");
  for (int k = 0; k < 20; ++k) {
    const RobotState s = testing::random_state(m, rng);
    const WitnessPair w = capsule_witness(m, s, a, b);
    const double eps = 1e-6;
    const double fd = (capsule_witness(m, s.integrated(s.velocity, eps), a, b).distance -
                       capsule_witness(m, s.integrated(s.velocity, -eps), a, b).distance) /
                      (2.0 * eps);
    if (w.distance > 1e-3) EXPECT_NEAR(w.distance_rate, fd, 1e-5);
    // Symmetry under argument swap.
    const WitnessPair ws = capsule_witness(m, s, b, a);
    EXPECT_NEAR(ws.distance, w.distance, 1e-12);
    EXPECT_LT((ws.point_a - w.point_b).norm(), 1e-9);
  }
}

TEST(SegmentDistance, MatchesDenseSamplingOracle) {
  std::mt19937 rng(1234);
  for (int k = 0; k < 200; ++k) {
    const Vec3 p1 = testing::random_vector(rng, 3), q1 = testing::random_vector(rng, 3);
    const Vec3 p2 = testing::random_vector(rng, 3), q2 = testing::random_vector(rng, 3);
    const auto cp = geometry::closest_points_segments(p1, q1, p2, q2);
    double best = 1e9;
    constexpr int kSamples = 2000;
    for (int i = 0; i <= kSamples; ++i) {
      const Vec3 x = p1 + (q1 - p1) * (double(i) / kSamples);
      const Vec3 d = q2 - p2;
      const double t = std::clamp((x - p2).dot(d) / d.squaredNorm(), 0.0, 1.0);
      best = std::min(best, (x - p2 - t * d).norm());
    }
    EXPECT_LE(cp.distance, best + 1e-12);
    EXPECT_NEAR(cp.distance, best, 2e-3);
  }
}

}  // namespace
}  // namespace rmpwbc

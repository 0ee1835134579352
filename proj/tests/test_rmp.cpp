#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "rmpwbc/linalg.hpp"
#include "rmpwbc/rmp.hpp"
#include "test_util.hpp"

using namespace rmpwbc;
using namespace rmpwbc::rmp;
using rmpwbc::testing::max_abs;
using rmpwbc::testing::random_matrix;
using rmpwbc::testing::random_psd;
using rmpwbc::testing::random_spd;
using rmpwbc::testing::random_vector;

namespace {

// Scalar transcription of the repulsive policy, written out term by term.
double oracle_accel(double x, double xd, const CollisionRmpParams& p) {
  const double s = 1.0 - 1.0 / (1.0 + std::exp(-xd / p.v_d));
  const double denom = (x > 0 ? x : 0.0) / p.l_d + p.eps_d;
  return p.k_p * std::exp(-x / p.l_p) - p.k_d * s * xd / denom;
}

double oracle_metric(double x, double xd, const CollisionRmpParams& p) {
  const double s = 1.0 - 1.0 / (1.0 + std::exp(-xd / p.v_d));
  const double g = x <= p.r ? (x / p.r - 1.0) * (x / p.r - 1.0) : 0.0;
  return s * g * p.mu / ((x > 0 ? x : 0.0) / p.l_m + p.eps_m);
}

}  // namespace

TEST(Pullback, IdentityMapLeavesRmpUnchanged) {
  std::mt19937 rng(1);
  const MatX M = random_spd(rng, 4);
  const VecX f = random_vector(rng, 4);
  const ChildRmp c{{f, M}, MatX::Identity(4, 4), VecX::Zero(4)};
  const auto out = pullback(std::span<const ChildRmp>(&c, 1));
  EXPECT_LT(max_abs(out.f - f), 1e-15);
  EXPECT_LT(max_abs(out.M - M), 1e-15);
}

TEST(Pullback, TwoOrthogonalChildrenDecouple) {
  // Children see x and y of a planar point; combined metric is diagonal.
  MatX Jx(1, 2), Jy(1, 2);
  Jx << 1, 0;
  Jy << 0, 1;
  const std::vector<ChildRmp> kids{
      {{VecX::Constant(1, 3.0), MatX::Constant(1, 1, 2.0)}, Jx, VecX::Zero(1)},
      {{VecX::Constant(1, -1.0), MatX::Constant(1, 1, 5.0)}, Jy, VecX::Zero(1)},
  };
  const auto out = pullback(kids);
  EXPECT_DOUBLE_EQ(out.f[0], 3.0);
  EXPECT_DOUBLE_EQ(out.f[1], -1.0);
  EXPECT_DOUBLE_EQ(out.M(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(out.M(1, 1), 5.0);
  EXPECT_DOUBLE_EQ(out.M(0, 1), 0.0);
  const auto a = resolve(out);
  EXPECT_DOUBLE_EQ(a.a[0], 1.5);
  EXPECT_DOUBLE_EQ(a.a[1], -0.2);
}

TEST(Pullback, MatchesDirectSummation) {
  std::mt19937 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 3 + trial % 6;
    std::vector<ChildRmp> kids;
    VecX f_ref = VecX::Zero(n);
    MatX M_ref = MatX::Zero(n, n);
    for (int k = 0; k < 1 + trial % 4; ++k) {
      const int m = 1 + (trial + k) % 4;
      ChildRmp c{{random_vector(rng, m), random_psd(rng, m, m)}, random_matrix(rng, m, n), random_vector(rng, m)};
      for (int i = 0; i < n; ++i) {
        for (int a = 0; a < m; ++a) {
          double Mjd = 0.0;
          for (int b = 0; b < m; ++b) Mjd += c.rmp.M(a, b) * c.Jdot_qdot[b];
          f_ref[i] += c.J(a, i) * (c.rmp.f[a] - Mjd);
          for (int j = 0; j < n; ++j)
            for (int b = 0; b < m; ++b) M_ref(i, j) += c.J(a, i) * c.rmp.M(a, b) * c.J(b, j);
        }
      }
      kids.push_back(std::move(c));
    }
    const auto out = pullback(kids, n);
    EXPECT_LT(max_abs(out.f - f_ref), 1e-12);
    EXPECT_LT(max_abs(out.M - M_ref), 1e-12);
  }
}

TEST(Pullback, PreservesPsdAndIsAdditive) {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const ChildRmp a{{random_vector(rng, 3), random_psd(rng, 3, 2)}, random_matrix(rng, 3, 6), random_vector(rng, 3)};
    const ChildRmp b{{random_vector(rng, 2), random_psd(rng, 2, 1)}, random_matrix(rng, 2, 6), random_vector(rng, 2)};
    const std::vector<ChildRmp> both{a, b};
    const auto sum = pullback(both);
    const auto pa = pullback(std::span<const ChildRmp>(&a, 1));
    const auto pb = pullback(std::span<const ChildRmp>(&b, 1));
    EXPECT_LT(max_abs(sum.f - (pa + pb).f), 1e-12);
    EXPECT_LT(max_abs(sum.M - (pa + pb).M), 1e-12);
    EXPECT_GT(rmpwbc::testing::min_eigenvalue(sum.M), -1e-12);
  }
}

TEST(Pullback, NestedTreeEqualsFlatComposition) {
  std::mt19937 rng(4);
  const MatX J1 = random_matrix(rng, 3, 5);  // root -> intermediate
  const VecX c1 = random_vector(rng, 3);
  const MatX J2 = random_matrix(rng, 2, 3);  // intermediate -> leaf
  const VecX c2 = random_vector(rng, 2);
  const NaturalRmp leaf{random_vector(rng, 2), random_spd(rng, 2)};
  const auto mid = pullback(std::vector<ChildRmp>{{leaf, J2, c2}});
  const auto root = pullback(std::vector<ChildRmp>{{mid, J1, c1}});
  // Flat: chain rule gives J = J2 J1, Jdot qd = J2 c1 + c2.
  const auto flat = pullback(std::vector<ChildRmp>{{leaf, J2 * J1, J2 * c1 + c2}});
  EXPECT_LT(max_abs(root.f - flat.f), 1e-12);
  EXPECT_LT(max_abs(root.M - flat.M), 1e-12);
}

TEST(Pullback, DimensionMismatchThrows) {
  const ChildRmp bad{{VecX::Zero(2), MatX::Identity(2, 2)}, MatX::Zero(3, 4), VecX::Zero(2)};
  EXPECT_THROW(pullback(std::span<const ChildRmp>(&bad, 1)), DimensionError);
  EXPECT_THROW(pullback(std::span<const ChildRmp>()), DimensionError);
  NaturalRmp a = NaturalRmp::zero(2);
  EXPECT_THROW(a += NaturalRmp::zero(3), DimensionError);
}

TEST(Resolve, SingularMetricUsesPseudoInverse) {
  const NaturalRmp r{(VecX(2) << 4, 1).finished(), (MatX(2, 2) << 2, 0, 0, 0).finished()};
  const auto c = resolve(r);
  EXPECT_DOUBLE_EQ(c.a[0], 2.0);
  EXPECT_DOUBLE_EQ(c.a[1], 0.0);
}

TEST(Resolve, MinimizesResidualForPsdMetric) {
  std::mt19937 rng(6);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 5;
    const MatX M = random_psd(rng, n, 1 + trial % n);
    const VecX f = random_vector(rng, n);
    const VecX a = resolve({f, M}).a;
    // Normal equations of min |M a - f|: M^T (M a - f) = 0, and a lies in range(M).
    EXPECT_LT(max_abs(M.transpose() * (M * a - f)), 1e-8);
    const MatX P = M * linalg::psd_pinv(M);
    EXPECT_LT(max_abs(P * a - a), 1e-8);
  }
}

TEST(Resolve, RoundTripThroughNaturalForm) {
  std::mt19937 rng(7);
  const MatX M = random_spd(rng, 4);
  const VecX a = random_vector(rng, 4);
  const auto back = resolve(to_natural({a, M}));
  EXPECT_LT(max_abs(back.a - a), 1e-10);
}

TEST(Attractor, AtTargetProducesFeedforwardOnly) {
  AttractorParams p{MatX::Identity(3, 3) * 100.0, MatX::Identity(3, 3) * 20.0, Vec3(0.1, 0.2, 0.3), Vec3(1, 0, 0),
                    Vec3(0, 0, -2)};
  const auto c = attractor_rmp(p.x_des, p.xd_des, p, MatX::Identity(3, 3));
  EXPECT_LT(max_abs(c.a - p.xdd_des), 1e-15);
}

TEST(Attractor, PdLaw) {
  AttractorParams p{MatX::Identity(1, 1) * 100.0, MatX::Identity(1, 1) * 20.0, VecX::Constant(1, 1.0),
                    VecX::Zero(1), VecX::Zero(1)};
  const auto c = attractor_rmp(VecX::Zero(1), VecX::Constant(1, 0.5), p, MatX::Constant(1, 1, 2.0));
  EXPECT_DOUBLE_EQ(c.a[0], 100.0 - 10.0);
  EXPECT_DOUBLE_EQ(c.M(0, 0), 2.0);
  EXPECT_THROW(attractor_rmp(VecX::Zero(2), VecX::Zero(1), p, MatX::Identity(1, 1)), DimensionError);
}

TEST(Attractor, ProportionalOnly) {
  AttractorParams p{MatX::Identity(3, 3), MatX::Zero(3, 3), Vec3(0.1, 0.0, 0.0), Vec3::Zero(), Vec3::Zero()};
  const auto c = attractor_rmp(Vec3::Zero(), Vec3(0.3, -0.2, 1.0), p, MatX::Identity(3, 3));
  EXPECT_LT(max_abs(c.a - Vec3(0.1, 0.0, 0.0)), 1e-15);
}

TEST(Attractor, MatchesCoordinateWiseEvaluation) {
  std::mt19937 rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + trial % 6;
    const MatX Kp = random_spd(rng, n), Kd = random_spd(rng, n);
    AttractorParams p{Kp, Kd, random_vector(rng, n), random_vector(rng, n), random_vector(rng, n)};
    const VecX x = random_vector(rng, n), xd = random_vector(rng, n);
    const MatX L = random_spd(rng, n);
    const auto c = attractor_rmp(x, xd, p, L);
    for (int i = 0; i < n; ++i) {
      double a = p.xdd_des[i];
      for (int j = 0; j < n; ++j) a += Kp(i, j) * (p.x_des[j] - x[j]) + Kd(i, j) * (p.xd_des[j] - xd[j]);
      EXPECT_NEAR(c.a[i], a, 1e-12);
    }
    EXPECT_LT(max_abs(c.M - L), 1e-15);
  }
}

TEST(CollisionGates, DistanceGateBoundaryValues) {
  const double r = 0.06;
  EXPECT_DOUBLE_EQ(distance_gate(0.0, r), 1.0);
  EXPECT_NEAR(distance_gate(r, r), 0.0, 1e-15);
  EXPECT_NEAR(distance_gate_derivative(r, r), 0.0, 1e-12);
  EXPECT_DOUBLE_EQ(distance_gate(2 * r, r), 0.0);
  // C1 across the cutoff: the central difference only sees the h^2/r^2 term.
  const double h = 1e-7;
  EXPECT_NEAR((distance_gate(r + h, r) - distance_gate(r - h, r)) / (2 * h), 0.0, h / (r * r));
}

TEST(CollisionGates, VelocityGateLimits) {
  EXPECT_DOUBLE_EQ(velocity_gate(0.0, 0.1), 0.5);
  EXPECT_NEAR(velocity_gate(-10.0, 0.1), 1.0, 1e-12);
  EXPECT_NEAR(velocity_gate(10.0, 0.1), 0.0, 1e-12);
  EXPECT_DOUBLE_EQ(velocity_gate(-1e6, 0.1), 1.0);
  EXPECT_DOUBLE_EQ(velocity_gate(1e6, 0.1), 0.0);
}

TEST(CollisionRmp, MatchesScalarTranscription) {
  CollisionRmpParams p;
  for (double x : {-0.01, 0.0, 0.005, 0.02, 0.06, 0.1}) {
    for (double xd : {-1.0, -0.1, 0.0, 0.05, 0.5}) {
      const auto c = collision_rmp(x, xd, p);
      EXPECT_NEAR(c.a[0], oracle_accel(x, xd, p), 1e-12 * (1 + std::abs(c.a[0])));
      EXPECT_NEAR(c.M(0, 0), oracle_metric(x, xd, p), 1e-12);
    }
  }
}

TEST(CollisionRmp, MetricNonNegativeAndBoundedOnGrid) {
  CollisionRmpParams p;
  double max_metric = 0.0;
  for (int i = 0; i < 100; ++i) {
    for (int j = 0; j < 100; ++j) {
      const double x = -0.02 + 0.2 * i / 99.0;
      const double xd = -2.0 + 4.0 * j / 99.0;
      const auto c = collision_rmp(x, xd, p);
      ASSERT_GE(c.M(0, 0), 0.0);
      ASSERT_TRUE(std::isfinite(c.a[0]));
      max_metric = std::max(max_metric, c.M(0, 0));
      if (x > p.r) EXPECT_EQ(c.M(0, 0), 0.0);
    }
  }
  // Largest at the deepest penetration sampled, where the gate exceeds 1.
  EXPECT_LE(max_metric, p.mu * distance_gate(-0.02, p.r) / p.eps_m + 1e-12);
}

TEST(CollisionRmp, RepelsWhenApproaching) {
  CollisionRmpParams p;
  const auto near = collision_rmp(0.005, -0.3, p);
  const auto far = collision_rmp(0.05, -0.3, p);
  EXPECT_GT(near.a[0], far.a[0]);
  EXPECT_GT(near.a[0], 0.0);
  EXPECT_GT(near.M(0, 0), far.M(0, 0));
  EXPECT_THROW(CollisionRmpParams{.l_p = 0.0}.validate(), ConfigError);
}

TEST(Pushforward, IdentityMapReturnsState) {
  const auto model = rmpwbc::testing::pat_model();
  std::mt19937 rng(9);
  const auto s = rmpwbc::testing::random_state(model, rng);
  const auto ts = pushforward(model, s, IdentityMap(model.nv()));
  EXPECT_LT(max_abs(ts.xd - s.velocity), 1e-15);
  EXPECT_LT(max_abs(ts.x.head<3>() - s.base_position), 1e-15);
  EXPECT_LT(max_abs(ts.x.tail(model.num_joints()) - s.joint_positions), 1e-15);
}

TEST(Pushforward, ZeroVelocityGivesZeroTaskVelocity) {
  const auto model = rmpwbc::testing::pat_model();
  std::mt19937 rng(10);
  auto s = rmpwbc::testing::random_state(model, rng);
  s.velocity.setZero();
  EXPECT_LT(max_abs(pushforward(model, s, PointMap(model.frame("r_foot"))).xd), 1e-15);
  EXPECT_LT(max_abs(pushforward(model, s, CapsuleDistanceMap(0, 1)).xd), 1e-15);
}

TEST(Pushforward, PointMapMatchesForwardKinematics) {
  const auto model = rmpwbc::testing::pat_model();
  std::mt19937 rng(8);
  const auto s = rmpwbc::testing::random_state(model, rng);
  const FrameId foot = model.frame("l_foot");
  const auto ts = pushforward(model, s, PointMap(foot));
  const auto kin = model.kinematics(s);
  EXPECT_LT(max_abs(ts.x - model.frame_position(kin, foot)), 1e-15);
  const auto fd = rmpwbc::testing::fd_body_velocity(model, s, s.velocity, model.frames()[foot.index].body,
                                                     model.frames()[foot.index].offset);
  EXPECT_LT(max_abs(ts.xd - fd.linear), 1e-6);
}

TEST(Pushforward, CapsuleDistanceMapMatchesWitness) {
  const auto model = rmpwbc::testing::pat_model();
  const auto s = biped::standing_state(model, biped::Dimensions{}, 0.45, 0.0);
  const auto ts = pushforward(model, s, CapsuleDistanceMap(0, 1));
  const auto w = capsule_witness(model, s, 0, 1);
  EXPECT_DOUBLE_EQ(ts.x[0], w.distance);
  EXPECT_GT(ts.x[0], 0.0);
}

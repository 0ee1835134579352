#include "rmpwbc/model.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include <Eigen/Cholesky>

#include "rmpwbc/geometry.hpp"

namespace rmpwbc {
namespace {

void validate_body(const BodyDescription& b) {
  if (b.name.empty()) throw ModelError("body with empty name");
  if (b.joint_type == JointType::Revolute && std::abs(b.joint_axis.norm() - 1.0) > 1e-9) {
    throw ModelError("joint axis of body '" + b.name + "' is not unit norm");
  }
  if (!(b.mass > 0.0)) throw ModelError("body '" + b.name + "' must have positive mass");
  const Mat3& I = b.rotational_inertia;
  if ((I - I.transpose()).cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, I.cwiseAbs().maxCoeff())) {
    throw ModelError("rotational inertia of body '" + b.name + "' is not symmetric");
  }
  Eigen::LLT<Mat3> llt(I);
  if (llt.info() != Eigen::Success) {
    throw ModelError("rotational inertia of body '" + b.name + "' is not positive definite");
  }
  const Mat3 R = b.rotation_to_parent;
  if ((R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-9 || R.determinant() < 0.0) {
    throw ModelError("rotation of body '" + b.name + "' is not a proper rotation");
  }
}

}  // namespace

RobotState RobotState::integrated(const VecX& qd, double dt) const {
  RobotState out = *this;
  const Vec3 omega = qd.head<3>();
  const Vec3 v = qd.segment<3>(3);
  out.base_position += base_orientation * (v * dt);
  const Vec3 rot = omega * dt;
  if (rot.norm() > 0.0) {
    out.base_orientation = base_orientation * Quat(Eigen::AngleAxisd(rot.norm(), rot.normalized()));
  }
  out.base_orientation.normalize();
  out.joint_positions += qd.tail(qd.size() - 6) * dt;
  return out;
}

RobotModel build_model(const ModelDescription& desc) {
  std::unordered_map<std::string, int> by_name;
  for (int i = 0; i < static_cast<int>(desc.bodies.size()); ++i) {
    const auto& b = desc.bodies[i];
    validate_body(b);
    if (!by_name.emplace(b.name, i).second) throw ModelError("duplicate body name '" + b.name + "'");
    if (b.name == "world") throw ModelError("'world' is a reserved body name");
  }

  int root = -1;
  for (int i = 0; i < static_cast<int>(desc.bodies.size()); ++i) {
    const auto& b = desc.bodies[i];
    if (b.parent == b.name) throw ModelError("cycle detected: body '" + b.name + "' is its own parent");
    if (b.joint_type == JointType::Floating) {
      if (!b.parent.empty()) throw ModelError("floating body '" + b.name + "' must be the root");
      if (root >= 0) throw ModelError("more than one floating root");
      root = i;
    } else {
      if (b.parent.empty()) throw ModelError("body '" + b.name + "' has no parent and is not floating");
      if (!by_name.contains(b.parent)) throw ModelError("body '" + b.name + "' has unknown parent '" + b.parent + "'");
    }
  }
  if (root < 0) throw ModelError("model has no floating root");

  // Topological order from the root.
  std::vector<int> order{root};
  std::unordered_set<std::string> placed{desc.bodies[root].name};
  bool progress = true;
  while (progress && order.size() < desc.bodies.size()) {
    progress = false;
    for (int i = 0; i < static_cast<int>(desc.bodies.size()); ++i) {
      const auto& b = desc.bodies[i];
      if (placed.contains(b.name) || !placed.contains(b.parent)) continue;
      order.push_back(i);
      placed.insert(b.name);
      progress = true;
    }
  }
  if (order.size() != desc.bodies.size()) throw ModelError("cycle detected in kinematic tree");

  RobotModel model;
  model.gravity_ = desc.gravity;
  std::unordered_map<std::string, int> index_of;
  int nj = 0;
  for (int src : order) {
    const auto& d = desc.bodies[src];
    RobotModel::Body body;
    body.name = d.name;
    body.parent = d.parent.empty() ? -1 : index_of.at(d.parent);
    body.joint_type = d.joint_type;
    body.axis = d.joint_axis;
    body.X_tree = spatial::Transform::from_pose(d.rotation_to_parent, d.translation_to_parent);
    body.mass = d.mass;
    body.com = d.com_offset;
    body.inertia_com = d.rotational_inertia;
    body.inertia = spatial::rigid_body_inertia(d.mass, d.com_offset, d.rotational_inertia);
    if (d.joint_type == JointType::Floating) {
      body.v_index = 0;
    } else if (d.joint_type == JointType::Revolute) {
      body.q_index = nj++;
      body.v_index = 6 + body.q_index;
    }
    index_of[d.name] = static_cast<int>(model.bodies_.size());
    model.bodies_.push_back(std::move(body));
  }
  model.nj_ = nj;
  model.nv_ = 6 + nj;

  for (const auto& c : desc.capsules) {
    if (!index_of.contains(c.body_name)) throw ModelError("capsule '" + c.name + "' references unknown body");
    if (!(c.radius > 0.0)) throw ModelError("capsule '" + c.name + "' must have positive radius");
    model.capsules_.push_back({c.name, index_of.at(c.body_name), c.endpoint_a, c.endpoint_b, c.radius});
  }
  for (int i = 0; i < model.num_bodies(); ++i) model.frames_.push_back({model.bodies_[i].name, i, Vec3::Zero()});
  for (const auto& f : desc.frames) {
    int body = -1;
    if (f.body_name != "world") {
      if (!index_of.contains(f.body_name)) throw ModelError("frame '" + f.name + "' references unknown body");
      body = index_of.at(f.body_name);
    }
    for (const auto& existing : model.frames_) {
      if (existing.name == f.name) throw ModelError("duplicate frame name '" + f.name + "'");
    }
    model.frames_.push_back({f.name, body, f.offset});
  }
  for (const auto& name : desc.actuated_joint_names) {
    const auto it = index_of.find(name);
    if (it == index_of.end() || model.bodies_[it->second].joint_type != JointType::Revolute) {
      throw ModelError("actuated joint '" + name + "' is not a revolute joint");
    }
    model.actuated_.push_back(model.bodies_[it->second].v_index);
  }
  return model;
}

double RobotModel::total_mass() const {
  double m = 0.0;
  for (const auto& b : bodies_) m += b.mass;
  return m;
}

int RobotModel::body_index(const std::string& name) const {
  for (int i = 0; i < num_bodies(); ++i) {
    if (bodies_[i].name == name) return i;
  }
  throw ModelError("unknown body '" + name + "'");
}

int RobotModel::capsule_index(const std::string& name) const {
  for (int i = 0; i < static_cast<int>(capsules_.size()); ++i) {
    if (capsules_[i].name == name) return i;
  }
  throw ModelError("unknown capsule '" + name + "'");
}

FrameId RobotModel::frame(const std::string& name) const {
  for (int i = 0; i < static_cast<int>(frames_.size()); ++i) {
    if (frames_[i].name == name) return {i};
  }
  throw ModelError("unknown frame '" + name + "'");
}

int RobotModel::joint_velocity_index(const std::string& joint_name) const {
  const auto& b = bodies_[body_index(joint_name)];
  if (b.joint_type != JointType::Revolute) throw ModelError("'" + joint_name + "' is not a revolute joint");
  return b.v_index;
}

RobotState RobotModel::neutral_state() const {
  RobotState s;
  s.joint_positions = VecX::Zero(nj_);
  s.velocity = VecX::Zero(nv_);
  return s;
}

KinematicsCache RobotModel::kinematics(const RobotState& state) const {
  if (state.joint_positions.size() != nj_ || state.velocity.size() != nv_) {
    throw DimensionError("state dimension does not match model");
  }
  const int nb = num_bodies();
  KinematicsCache kin;
  kin.X_up.resize(nb);
  kin.R.resize(nb);
  kin.p.resize(nb);
  kin.omega.resize(nb);
  kin.vel.resize(nb);
  kin.omega_dot.resize(nb);
  kin.acc.resize(nb);
  kin.qd = state.velocity;
  const VecX& qd = state.velocity;

  for (int i = 0; i < nb; ++i) {
    const Body& b = bodies_[i];
    if (b.joint_type == JointType::Floating) {
      const Mat3 R0 = state.base_orientation.normalized().toRotationMatrix();
      kin.X_up[i] = spatial::Transform::from_pose(R0, state.base_position);
      kin.R[i] = R0;
      kin.p[i] = state.base_position;
      const Vec3 w = qd.head<3>();
      const Vec3 v = qd.segment<3>(3);
      kin.omega[i] = R0 * w;
      kin.vel[i] = R0 * v;
      kin.omega_dot[i].setZero();
      kin.acc[i] = R0 * w.cross(v);
      continue;
    }
    spatial::Transform XJ;
    double rate = 0.0;
    if (b.joint_type == JointType::Revolute) {
      XJ = spatial::Transform::from_pose(spatial::axis_rotation(b.axis, state.joint_positions[b.q_index]), Vec3::Zero());
      rate = qd[b.v_index];
    }
    kin.X_up[i] = XJ * b.X_tree;
    const int par = b.parent;
    kin.R[i] = kin.R[par] * kin.X_up[i].rotation();
    kin.p[i] = kin.p[par] + kin.R[par] * b.X_tree.translation();
    const Vec3 r = kin.p[i] - kin.p[par];
    const Vec3& wp = kin.omega[par];
    kin.vel[i] = kin.vel[par] + wp.cross(r);
    kin.acc[i] = kin.acc[par] + kin.omega_dot[par].cross(r) + wp.cross(wp.cross(r));
    if (b.joint_type == JointType::Revolute) {
      const Vec3 s = kin.R[i] * b.axis * rate;
      kin.omega[i] = wp + s;
      kin.omega_dot[i] = kin.omega_dot[par] + wp.cross(s);
    } else {
      kin.omega[i] = wp;
      kin.omega_dot[i] = kin.omega_dot[par];
    }
  }
  return kin;
}

MatX RobotModel::mass_matrix(const KinematicsCache& kin) const {
  const int nb = num_bodies();
  std::vector<Mat6> Ic(nb);
  for (int i = 0; i < nb; ++i) Ic[i] = bodies_[i].inertia;
  for (int i = nb - 1; i > 0; --i) {
    const Mat6 X = kin.X_up[i].motion_matrix();
    Ic[bodies_[i].parent] += X.transpose() * Ic[i] * X;
  }

  MatX H = MatX::Zero(nv_, nv_);
  for (int i = 0; i < nb; ++i) {
    const Body& b = bodies_[i];
    if (b.joint_type == JointType::Fixed) continue;
    if (b.joint_type == JointType::Floating) {
      H.topLeftCorner<6, 6>() = Ic[i];
      continue;
    }
    Vec6 S;
    S << b.axis, Vec3::Zero();
    Vec6 F = Ic[i] * S;
    H(b.v_index, b.v_index) = S.dot(F);
    int j = i;
    while (bodies_[j].parent >= 0) {
      F = kin.X_up[j].apply_force_transpose(F);
      j = bodies_[j].parent;
      const Body& bj = bodies_[j];
      if (bj.joint_type == JointType::Revolute) {
        Vec6 Sj;
        Sj << bj.axis, Vec3::Zero();
        H(b.v_index, bj.v_index) = H(bj.v_index, b.v_index) = F.dot(Sj);
      } else if (bj.joint_type == JointType::Floating) {
        H.block<1, 6>(b.v_index, 0) = F.transpose();
        H.block<6, 1>(0, b.v_index) = F;
      }
    }
  }
  return H;
}

VecX RobotModel::bias_forces(const KinematicsCache& kin) const {
  const int nb = num_bodies();
  std::vector<Vec6> v(nb), a(nb), f(nb);
  VecX tau = VecX::Zero(nv_);
  const VecX& qd = kin.qd;
  Vec6 a_grav;
  a_grav << Vec3::Zero(), -gravity_;
  for (int i = 0; i < nb; ++i) {
    const Body& b = bodies_[i];
    if (b.joint_type == JointType::Floating) {
      v[i] = qd.head<6>();
      a[i] = kin.X_up[i].apply_motion(a_grav);
    } else {
      const int par = b.parent;
      v[i] = kin.X_up[i].apply_motion(v[par]);
      a[i] = kin.X_up[i].apply_motion(a[par]);
      if (b.joint_type == JointType::Revolute) {
        Vec6 vj;
        vj << b.axis * qd[b.v_index], Vec3::Zero();
        v[i] += vj;
        a[i] += spatial::cross_motion(v[i], vj);
      }
    }
    f[i] = b.inertia * a[i] + spatial::cross_force(v[i], b.inertia * v[i]);
  }
  for (int i = nb - 1; i >= 0; --i) {
    const Body& b = bodies_[i];
    if (b.joint_type == JointType::Revolute) {
      tau[b.v_index] = b.axis.dot(f[i].head<3>());
    } else if (b.joint_type == JointType::Floating) {
      tau.head<6>() = f[i];
    }
    if (b.parent >= 0) f[b.parent] += kin.X_up[i].apply_force_transpose(f[i]);
  }
  return tau;
}

MatX RobotModel::actuated_selection() const {
  MatX S = MatX::Zero(static_cast<int>(actuated_.size()), nv_);
  for (int k = 0; k < static_cast<int>(actuated_.size()); ++k) S(k, actuated_[k]) = 1.0;
  return S;
}

MatX RobotModel::floating_selection() const {
  MatX S = MatX::Zero(6, nv_);
  S.leftCols<6>().setIdentity();
  return S;
}

DynamicsTerms RobotModel::dynamics(const KinematicsCache& kin) const {
  return {mass_matrix(kin), bias_forces(kin), actuated_selection(), floating_selection()};
}

Vec3 RobotModel::frame_position(const KinematicsCache& kin, FrameId frame) const {
  const Frame& f = frames_.at(frame.index);
  if (f.body < 0) return f.offset;
  return kin.p[f.body] + kin.R[f.body] * f.offset;
}

Mat3 RobotModel::frame_rotation(const KinematicsCache& kin, FrameId frame) const {
  const Frame& f = frames_.at(frame.index);
  return f.body < 0 ? Mat3::Identity() : kin.R[f.body];
}

MatX RobotModel::point_jacobian(const KinematicsCache& kin, int body, const Vec3& point) const {
  MatX J = MatX::Zero(3, nv_);
  for (int i = body; i >= 0; i = bodies_[i].parent) {
    const Body& b = bodies_[i];
    if (b.joint_type == JointType::Revolute) {
      J.col(b.v_index) = (kin.R[i] * b.axis).cross(point - kin.p[i]);
    } else if (b.joint_type == JointType::Floating) {
      J.leftCols<3>() = -skew(point - kin.p[i]) * kin.R[i];
      J.middleCols<3>(3) = kin.R[i];
    }
  }
  return J;
}

MatX RobotModel::point_jacobian(const KinematicsCache& kin, FrameId frame) const {
  const Frame& f = frames_.at(frame.index);
  if (f.body < 0) return MatX::Zero(3, nv_);
  return point_jacobian(kin, f.body, frame_position(kin, frame));
}

MatX RobotModel::frame_jacobian(const KinematicsCache& kin, FrameId frame, ReferenceFrame ref) const {
  const Frame& f = frames_.at(frame.index);
  MatX J = MatX::Zero(6, nv_);
  if (f.body < 0) return J;
  for (int i = f.body; i >= 0; i = bodies_[i].parent) {
    const Body& b = bodies_[i];
    if (b.joint_type == JointType::Revolute) {
      J.block<3, 1>(0, b.v_index) = kin.R[i] * b.axis;
    } else if (b.joint_type == JointType::Floating) {
      J.block<3, 3>(0, 0) = kin.R[i];
    }
  }
  J.bottomRows<3>() = point_jacobian(kin, f.body, frame_position(kin, frame));
  if (ref == ReferenceFrame::Local) {
    const Mat3 Rt = kin.R[f.body].transpose();
    J.topRows<3>() = (Rt * J.topRows<3>()).eval();
    J.bottomRows<3>() = (Rt * J.bottomRows<3>()).eval();
  }
  return J;
}

Vec3 RobotModel::point_jdot_qdot(const KinematicsCache& kin, int body, const Vec3& point) const {
  const Vec3 r = point - kin.p[body];
  const Vec3& w = kin.omega[body];
  return kin.acc[body] + kin.omega_dot[body].cross(r) + w.cross(w.cross(r));
}

Vec6 RobotModel::jdot_qdot(const KinematicsCache& kin, FrameId frame) const {
  const Frame& f = frames_.at(frame.index);
  Vec6 out = Vec6::Zero();
  if (f.body < 0) return out;
  out.head<3>() = kin.omega_dot[f.body];
  out.tail<3>() = point_jdot_qdot(kin, f.body, frame_position(kin, frame));
  return out;
}

Vec3 RobotModel::center_of_mass(const KinematicsCache& kin) const {
  Vec3 c = Vec3::Zero();
  for (int i = 0; i < num_bodies(); ++i) c += bodies_[i].mass * (kin.p[i] + kin.R[i] * bodies_[i].com);
  return c / total_mass();
}

MatX RobotModel::com_jacobian(const KinematicsCache& kin) const {
  MatX J = MatX::Zero(3, nv_);
  for (int i = 0; i < num_bodies(); ++i) {
    J += bodies_[i].mass * point_jacobian(kin, i, kin.p[i] + kin.R[i] * bodies_[i].com);
  }
  return J / total_mass();
}

double RobotModel::kinetic_energy(const KinematicsCache& kin) const {
  return 0.5 * kin.qd.dot(mass_matrix(kin) * kin.qd);
}

double RobotModel::potential_energy(const KinematicsCache& kin) const {
  double u = 0.0;
  for (int i = 0; i < num_bodies(); ++i) {
    u -= bodies_[i].mass * gravity_.dot(kin.p[i] + kin.R[i] * bodies_[i].com);
  }
  return u;
}

std::pair<Vec3, Vec3> RobotModel::capsule_segment_world(const KinematicsCache& kin, int capsule) const {
  const Capsule& c = capsules_.at(capsule);
  return {kin.p[c.body] + kin.R[c.body] * c.a, kin.p[c.body] + kin.R[c.body] * c.b};
}

WitnessPair RobotModel::capsule_witness(const KinematicsCache& kin, int ci, int cj) const {
  const Capsule& A = capsules_.at(ci);
  const Capsule& B = capsules_.at(cj);
  const auto [a0, a1] = capsule_segment_world(kin, ci);
  const auto [b0, b1] = capsule_segment_world(kin, cj);
  const auto cp = geometry::closest_points_segments(a0, a1, b0, b1);

  WitnessPair w;
  const Vec3 diff = cp.point1 - cp.point2;
  const double axis_dist = diff.norm();
  w.normal = axis_dist > 1e-12 ? Vec3(diff / axis_dist) : geometry::tie_break_direction();
  w.point_a = cp.point1 - A.radius * w.normal;
  w.point_b = cp.point2 + B.radius * w.normal;
  w.distance = axis_dist - A.radius - B.radius;

  const MatX Ja = point_jacobian(kin, A.body, cp.point1);
  const MatX Jb = point_jacobian(kin, B.body, cp.point2);
  w.jacobian_rel = w.normal.transpose() * (Ja - Jb);
  w.distance_rate = (w.jacobian_rel * kin.qd)(0);

  // Witness points treated as material points for the curvature term.
  const Vec3 dv = (Ja - Jb) * kin.qd;
  const Vec3 da = point_jdot_qdot(kin, A.body, cp.point1) - point_jdot_qdot(kin, B.body, cp.point2);
  w.jdot_qdot_rel = w.normal.dot(da);
  if (axis_dist > 1e-12) {
    const Vec3 dv_perp = dv - w.normal * w.normal.dot(dv);
    w.jdot_qdot_rel += dv_perp.squaredNorm() / axis_dist;
  }
  return w;
}

MatX mass_matrix(const RobotModel& model, const RobotState& state) { return model.mass_matrix(model.kinematics(state)); }

VecX bias_forces(const RobotModel& model, const RobotState& state) { return model.bias_forces(model.kinematics(state)); }

MatX frame_jacobian(const RobotModel& model, const RobotState& state, FrameId frame, ReferenceFrame ref) {
  return model.frame_jacobian(model.kinematics(state), frame, ref);
}

Vec6 jdot_qdot(const RobotModel& model, const RobotState& state, FrameId frame) {
  return model.jdot_qdot(model.kinematics(state), frame);
}

WitnessPair capsule_witness(const RobotModel& model, const RobotState& state, int capsule_i, int capsule_j) {
  return model.capsule_witness(model.kinematics(state), capsule_i, capsule_j);
}

}  // namespace rmpwbc

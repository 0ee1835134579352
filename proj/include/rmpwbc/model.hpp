#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rmpwbc/spatial.hpp"
#include "rmpwbc/types.hpp"

namespace rmpwbc {

enum class JointType { Floating, Revolute, Fixed };

struct BodyDescription {
  std::string name;
  std::string parent;  // empty for the floating root
  JointType joint_type = JointType::Revolute;
  Vec3 joint_axis = Vec3::UnitZ();
  // Pose of the body frame in the parent frame at zero joint angle.
  Mat3 rotation_to_parent = Mat3::Identity();
  Vec3 translation_to_parent = Vec3::Zero();
  double mass = 0.0;
  Vec3 com_offset = Vec3::Zero();
  Mat3 rotational_inertia = Mat3::Zero();  // about the centre of mass, body axes
};

struct CapsuleDescription {
  std::string name;
  std::string body_name;
  Vec3 endpoint_a = Vec3::Zero();  // body frame
  Vec3 endpoint_b = Vec3::Zero();
  double radius = 0.0;
};

// A point rigidly attached to a body. The body name "world" pins it to the
// inertial frame.
struct FrameDescription {
  std::string name;
  std::string body_name;
  Vec3 offset = Vec3::Zero();
};

struct ModelDescription {
  std::vector<BodyDescription> bodies;
  std::vector<CapsuleDescription> capsules;
  std::vector<FrameDescription> frames;
  std::vector<std::string> actuated_joint_names;
  Vec3 gravity{0.0, 0.0, -kGravity};
};

// Generalized state. Velocity coordinates are the base twist in base
// coordinates [angular; linear] followed by the joint rates.
struct RobotState {
  Vec3 base_position = Vec3::Zero();
  Quat base_orientation = Quat::Identity();
  VecX joint_positions;
  VecX velocity;

  // Integrates the configuration along `qd` for `dt` (quaternion renormalized).
  RobotState integrated(const VecX& qd, double dt) const;
};

struct DynamicsTerms {
  MatX A;      // mass matrix
  VecX bias;   // coriolis/centrifugal + gravity, A qdd + bias = S_a^T tau + J_c^T f
  MatX S_a;    // actuated selection, n x (6+n)
  MatX S_f;    // floating-base selection, 6 x (6+n)
};

struct WitnessPair {
  Vec3 point_a = Vec3::Zero();
  Vec3 point_b = Vec3::Zero();
  Vec3 normal = Vec3::UnitY();  // unit, from b towards a
  double distance = 0.0;        // surface to surface, negative when penetrating
  double distance_rate = 0.0;
  MatX jacobian_rel;            // 1 x (6+n)
  double jdot_qdot_rel = 0.0;   // d/dt(jacobian_rel) qd
};

enum class ReferenceFrame { World, Local };

struct FrameId {
  int index = -1;
  bool operator==(const FrameId&) const = default;
};

// World poses and velocities of every body for one state.
struct KinematicsCache {
  std::vector<spatial::Transform> X_up;  // parent -> body
  std::vector<Mat3> R;                   // body orientation in world
  std::vector<Vec3> p;                   // body origin in world
  std::vector<Vec3> omega;               // world angular velocity
  std::vector<Vec3> vel;                 // world velocity of the body origin
  std::vector<Vec3> omega_dot;           // world angular acceleration at qdd = 0
  std::vector<Vec3> acc;                 // world origin acceleration at qdd = 0
  VecX qd;
};

class RobotModel {
 public:
  struct Body {
    std::string name;
    int parent = -1;
    JointType joint_type = JointType::Fixed;
    Vec3 axis = Vec3::UnitZ();
    spatial::Transform X_tree;
    Mat6 inertia = Mat6::Zero();
    double mass = 0.0;
    Vec3 com = Vec3::Zero();
    Mat3 inertia_com = Mat3::Zero();
    int q_index = -1;  // joint angle index (revolute only)
    int v_index = -1;  // first velocity index (floating: 0, revolute: 6 + q_index)
  };
  struct Capsule {
    std::string name;
    int body = -1;
    Vec3 a, b;
    double radius = 0.0;
  };
  struct Frame {
    std::string name;
    int body = -1;  // -1: world
    Vec3 offset = Vec3::Zero();
  };

  int nv() const { return nv_; }
  int num_joints() const { return nj_; }
  int num_bodies() const { return static_cast<int>(bodies_.size()); }
  const std::vector<Body>& bodies() const { return bodies_; }
  const std::vector<Capsule>& capsules() const { return capsules_; }
  const std::vector<Frame>& frames() const { return frames_; }
  const Vec3& gravity() const { return gravity_; }
  double total_mass() const;

  int body_index(const std::string& name) const;
  int capsule_index(const std::string& name) const;
  FrameId frame(const std::string& name) const;
  // Index of the velocity coordinate driven by the named joint.
  int joint_velocity_index(const std::string& joint_name) const;
  const std::vector<int>& actuated_velocity_indices() const { return actuated_; }

  RobotState neutral_state() const;

  KinematicsCache kinematics(const RobotState& state) const;

  MatX mass_matrix(const KinematicsCache& kin) const;
  VecX bias_forces(const KinematicsCache& kin) const;
  DynamicsTerms dynamics(const KinematicsCache& kin) const;
  MatX actuated_selection() const;
  MatX floating_selection() const;

  Vec3 frame_position(const KinematicsCache& kin, FrameId frame) const;
  Mat3 frame_rotation(const KinematicsCache& kin, FrameId frame) const;
  // 6 x nv [angular; linear] Jacobian. World: world-aligned axes at the frame
  // point. Local: the frame twist in frame coordinates.
  MatX frame_jacobian(const KinematicsCache& kin, FrameId frame, ReferenceFrame ref = ReferenceFrame::World) const;
  MatX point_jacobian(const KinematicsCache& kin, FrameId frame) const;
  MatX point_jacobian(const KinematicsCache& kin, int body, const Vec3& world_point) const;
  // World-aligned bias acceleration [angular; linear] of the frame at qdd = 0.
  Vec6 jdot_qdot(const KinematicsCache& kin, FrameId frame) const;
  Vec3 point_jdot_qdot(const KinematicsCache& kin, int body, const Vec3& world_point) const;

  Vec3 center_of_mass(const KinematicsCache& kin) const;
  MatX com_jacobian(const KinematicsCache& kin) const;
  double kinetic_energy(const KinematicsCache& kin) const;
  double potential_energy(const KinematicsCache& kin) const;

  WitnessPair capsule_witness(const KinematicsCache& kin, int capsule_i, int capsule_j) const;
  std::pair<Vec3, Vec3> capsule_segment_world(const KinematicsCache& kin, int capsule) const;

 private:
  friend RobotModel build_model(const ModelDescription& desc);

  std::vector<Body> bodies_;
  std::vector<Capsule> capsules_;
  std::vector<Frame> frames_;
  std::vector<int> actuated_;
  Vec3 gravity_ = Vec3(0.0, 0.0, -kGravity);
  int nv_ = 0;
  int nj_ = 0;
};

// Validates the description and assigns contiguous velocity coordinates.
// Throws ModelError on malformed trees (cycles, duplicate names, non-unit axes,
// non-positive masses, indefinite inertias, bad capsules).
RobotModel build_model(const ModelDescription& desc);

// Convenience wrappers that take a state directly.
MatX mass_matrix(const RobotModel& model, const RobotState& state);
VecX bias_forces(const RobotModel& model, const RobotState& state);
MatX frame_jacobian(const RobotModel& model, const RobotState& state, FrameId frame,
                    ReferenceFrame ref = ReferenceFrame::World);
Vec6 jdot_qdot(const RobotModel& model, const RobotState& state, FrameId frame);
WitnessPair capsule_witness(const RobotModel& model, const RobotState& state, int capsule_i, int capsule_j);

}  // namespace rmpwbc

#include "rmpwbc/trial.hpp"

#include <algorithm>
#include <random>

#include "json.hpp"

namespace rmpwbc::sim {
namespace {

nlohmann::json vec_json(const VecX& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

void write_sample(std::ostream& os, const TrialSample& s) {
  const RobotState& x = *s.state;
  nlohmann::json j;
  j["t"] = s.time;
  j["base_position"] = {x.base_position.x(), x.base_position.y(), x.base_position.z()};
  j["base_orientation"] = {x.base_orientation.w(), x.base_orientation.x(), x.base_orientation.y(),
                           x.base_orientation.z()};
  j["joints"] = vec_json(x.joint_positions);
  j["velocity"] = vec_json(x.velocity);
  auto& cf = j["contact_forces"] = nlohmann::json::array();
  for (const auto& c : *s.contacts) cf.push_back({c.force.x(), c.force.y(), c.force.z()});
  j["clearance"] = s.clearance;
  j["push"] = {s.push.x(), s.push.y(), s.push.z()};
  if (s.record) j["phase"] = locomotion::phase_name(s.record->phase);
  os << j.dump() << '\n';
}

double gait_origin_shift(const TrialConfig& cfg) { return cfg.left_first ? 0.5 * cfg.controller.gait.period : 0.0; }

}  // namespace

void TrialConfig::validate() const {
  controller.validate();
  sim.validate();
  if (!(warmup_cycles >= 0.0) || !(window > 0.0) || initial_jitter < 0.0 || max_consecutive_qp_failures < 1)
    throw ConfigError("invalid trial parameters");
}

double push_time(const TrialConfig& cfg, locomotion::TimingTag tag) {
  const locomotion::GaitSchedule gait(cfg.controller.gait);
  return cfg.warmup_cycles * cfg.controller.gait.period + gait.tag_time(tag) - gait_origin_shift(cfg);
}

TrialOutcome run_trial(const TrialConfig& cfg, const Disturbance& d, std::uint64_t seed, const TrialOptions& opts) {
  cfg.validate();
  if (opts.push) d.validate();
  const RobotModel model = build_model(cfg.model);
  RobotState state = biped::standing_state(model, biped::dimensions_of(cfg.model), cfg.controller.base_height);
  if (cfg.initial_jitter > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, cfg.initial_jitter);
    for (int i = 6; i < model.nv(); ++i) state.velocity[i] += n(rng);
  }

  SimWorld world(model, state, cfg.sim);
  control::BipedController ctrl(model, cfg.controller);
  ctrl.reset(world.state(), -gait_origin_shift(cfg));
  const int la = ctrl.shank_capsule(biped::Side::Left);
  const int ra = ctrl.shank_capsule(biped::Side::Right);

  TrialOutcome out;
  out.disturbance = d;
  out.push_time = push_time(cfg, d.tag);
  const double t_end = opts.duration_override > 0.0 ? opts.duration_override : out.push_time + cfg.window;
  out.min_base_height = world.state().base_position.z();
  out.min_clearance = model.capsule_witness(model.kinematics(world.state()), la, ra).distance;

  auto fail = [&](FailureCause c) {
    out.success = false;
    out.failure_cause = c;
    out.failure_time = world.time();
  };

  const long n_steps = std::lround(t_end / cfg.sim.dt);
  for (long k = 0; k < n_steps; ++k) {
    const double t = world.time();
    VecX tau;
    Vec3 push_world = Vec3::Zero();
    try {
      tau = ctrl.update(world.state(), t);
      if (ctrl.consecutive_qp_failures() > cfg.max_consecutive_qp_failures) {
        fail(FailureCause::ControllerFailure);
        break;
      }
      if (opts.push) push_world = world.state().base_orientation * disturbance_force(d, t, out.push_time);
      world.step(tau, push_world);
    } catch (const std::exception&) {
      fail(FailureCause::ControllerFailure);
      break;
    }

    const KinematicsCache kin = model.kinematics(world.state());
    const double clearance = model.capsule_witness(kin, la, ra).distance;
    const double z = world.state().base_position.z();
    out.min_base_height = std::min(out.min_base_height, z);
    out.min_clearance = std::min(out.min_clearance, clearance);

    if (opts.observer || opts.dump) {
      const TrialSample s{world.time(), &world.state(), &world.contacts(), clearance, push_world, &ctrl.last_record()};
      if (opts.observer) opts.observer(s);
      if (opts.dump) write_sample(*opts.dump, s);
    }
    const FailureCause c = detect_failure(z, clearance, cfg.failure);
    if (c != FailureCause::None) {
      fail(c);
      break;
    }
  }
  out.steps_taken = ctrl.completed_steps();
  out.qp_failures = ctrl.qp_failures();
  return out;
}

}  // namespace rmpwbc::sim

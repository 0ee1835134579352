#pragma once

// One push-recovery trial: warm-up stepping, a timed push on the base, and
// failure monitoring over the following window.

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>

#include "rmpwbc/biped.hpp"
#include "rmpwbc/controller.hpp"
#include "rmpwbc/sim.hpp"

namespace rmpwbc::sim {

struct TrialConfig {
  ModelDescription model = biped::pat_description();
  control::ControllerConfig controller;
  SimParams sim;
  FailureCriteria failure;
  double warmup_cycles = 2.0;    // gait cycles before the tagged push instant
  double window = 3.0;           // monitored time after the push starts
  double initial_jitter = 0.0;   // std of seeded joint-velocity noise at start, rad/s
  int max_consecutive_qp_failures = 25;
  bool left_first = false;       // start the gait clock half a cycle in so the left leg swings first

  void validate() const;
};

struct TrialSample {
  double time = 0.0;
  const RobotState* state = nullptr;
  const std::array<FootContact, 2>* contacts = nullptr;
  double clearance = 0.0;
  Vec3 push = Vec3::Zero();
  const control::ControlRecord* record = nullptr;
};

struct TrialOptions {
  std::function<void(const TrialSample&)> observer;  // called after every physics step
  std::ostream* dump = nullptr;                      // line-delimited JSON trajectory
  bool push = true;                                  // false: unperturbed run
  double duration_override = -1.0;                   // total simulated time if positive
};

// Push instant (simulation time) for a timing tag after the warm-up.
double push_time(const TrialConfig& cfg, locomotion::TimingTag tag);

TrialOutcome run_trial(const TrialConfig& cfg, const Disturbance& d, std::uint64_t seed,
                       const TrialOptions& opts = {});

}  // namespace rmpwbc::sim

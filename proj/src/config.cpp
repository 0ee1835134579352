#include "rmpwbc/config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <type_traits>
#include <utility>

#include <yaml-cpp/yaml.h>

namespace rmpwbc::config {
namespace {

int line_of(const YAML::Node& n) { return n.Mark().is_null() ? -1 : n.Mark().line + 1; }

bool present(const YAML::Node& n) { return n.IsDefined() && !n.IsNull(); }

// A mapping node whose keys are consumed as they are read; leftovers are errors.
class Section {
 public:
  Section(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path)) {
    if (present(node_) && !node_.IsMap()) throw ConfigError(path_ + " must be a mapping", line_of(node_));
  }

  bool has(const char* key) const { return node_.IsMap() && present(std::as_const(node_)[key]); }
  int line() const { return line_of(node_); }
  const std::string& path() const { return path_; }

  YAML::Node raw(const char* key) {
    seen_.insert(key);
    if (node_.IsMap()) {
      const YAML::Node n = std::as_const(node_)[key];
      if (present(n)) return n;
    }
    return YAML::Node(YAML::NodeType::Undefined);
  }

  int key_line(const char* key) const {
    if (node_.IsMap())
      for (const auto& kv : node_)
        if (kv.first.as<std::string>() == key) return line_of(kv.first);
    return line();
  }

  Section child(const char* key) { return Section(raw(key), path_ + "." + key); }

  template <class T>
  void get(const char* key, T& out) {
    const YAML::Node n = raw(key);
    if (!n) return;
    try {
      out = n.as<T>();
    } catch (const YAML::Exception&) {
      throw ConfigError(path_ + "." + key + ": malformed value", line_of(n));
    }
  }

  void get(const char* key, Vec3& out) {
    const YAML::Node n = raw(key);
    if (!n) return;
    const std::vector<double> v = numbers(n, std::string(path_) + "." + key, 3);
    out = Vec3(v[0], v[1], v[2]);
  }

  static std::vector<double> numbers(const YAML::Node& n, const std::string& what, std::size_t size) {
    if (!n.IsSequence() || n.size() != size)
      throw ConfigError(what + ": expected a list of " + std::to_string(size) + " numbers", line_of(n));
    std::vector<double> v;
    for (const auto& x : n) {
      try {
        v.push_back(x.as<double>());
      } catch (const YAML::Exception&) {
        throw ConfigError(what + ": malformed number", line_of(x));
      }
    }
    return v;
  }

  void finish() const {
    if (!node_.IsMap()) return;
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!seen_.count(key)) throw ConfigError("unknown key '" + key + "' in " + path_, line_of(kv.first));
    }
  }

 private:
  YAML::Node node_;
  std::string path_;
  std::set<std::string> seen_;
};

JointType parse_joint(const std::string& s, int line) {
  if (s == "floating") return JointType::Floating;
  if (s == "revolute") return JointType::Revolute;
  if (s == "fixed") return JointType::Fixed;
  throw ConfigError("unknown joint type '" + s + "'", line);
}

const char* joint_name(JointType t) {
  switch (t) {
    case JointType::Floating: return "floating";
    case JointType::Revolute: return "revolute";
    case JointType::Fixed: return "fixed";
  }
  return "revolute";
}

template <class F>
void each_entry(Section& s, const char* key, F&& f) {
  const YAML::Node list = s.raw(key);
  if (!list) return;
  if (!list.IsSequence()) throw ConfigError(s.path() + "." + key + " must be a list", line_of(list));
  for (std::size_t i = 0; i < list.size(); ++i) {
    Section e(list[i], s.path() + "." + key + "[" + std::to_string(i) + "]");
    f(e);
    e.finish();
  }
}

ModelDescription read_model(Section s) {
  ModelDescription d;
  s.get("gravity", d.gravity);
  each_entry(s, "bodies", [&](Section& e) {
    BodyDescription b;
    e.get("name", b.name);
    e.get("parent", b.parent);
    std::string joint = b.parent.empty() ? "floating" : "revolute";
    const int jl = e.has("joint") ? line_of(e.raw("joint")) : e.line();
    e.get("joint", joint);
    b.joint_type = parse_joint(joint, jl);
    e.get("axis", b.joint_axis);
    e.get("origin", b.translation_to_parent);
    if (const YAML::Node r = e.raw("rotation")) {
      const auto v = Section::numbers(r, e.path() + ".rotation", 9);
      b.rotation_to_parent = Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(v.data());
    }
    e.get("mass", b.mass);
    e.get("com", b.com_offset);
    if (const YAML::Node in = e.raw("inertia")) {
      const auto v = Section::numbers(in, e.path() + ".inertia", 6);
      b.rotational_inertia << v[0], v[3], v[4], v[3], v[1], v[5], v[4], v[5], v[2];
    }
    if (b.name.empty()) throw ConfigError(e.path() + ": body needs a name", e.line());
    d.bodies.push_back(b);
  });
  each_entry(s, "frames", [&](Section& e) {
    FrameDescription f;
    e.get("name", f.name);
    e.get("body", f.body_name);
    e.get("offset", f.offset);
    d.frames.push_back(f);
  });
  each_entry(s, "capsules", [&](Section& e) {
    CapsuleDescription c;
    e.get("name", c.name);
    e.get("body", c.body_name);
    e.get("a", c.endpoint_a);
    e.get("b", c.endpoint_b);
    e.get("radius", c.radius);
    d.capsules.push_back(c);
  });
  s.get("actuated", d.actuated_joint_names);
  s.finish();
  return d;
}

void read_gains(Section s, control::Gains& g) {
  s.get("kp", g.kp);
  s.get("kd", g.kd);
  s.finish();
}

void read_region(Section s, locomotion::StepRegion& r) {
  s.get("sagittal_min", r.sagittal_min);
  s.get("sagittal_max", r.sagittal_max);
  s.get("outward_min", r.outward_min);
  s.get("outward_max", r.outward_max);
  s.finish();
}

void read_controller(Section s, control::ControllerConfig& c) {
  if (s.has("strategy")) {
    const int line = line_of(s.raw("strategy"));
    std::string name;
    s.get("strategy", name);
    try {
      c.strategy = control::parse_strategy(name);
    } catch (const ConfigError& e) {
      throw ConfigError(e.what(), line);
    }
  }
  s.get("base_height", c.base_height);
  s.get("swing_apex", c.swing_apex);
  s.get("swing_target_z", c.swing_target_z);
  s.get("mpc_period", c.mpc_period);
  s.get("crossing_band", c.crossing_band);
  s.get("crossing_setback", c.crossing_setback);
  s.get("horizontal_damping", c.horizontal_damping);
  {
    Section g = s.child("gait");
    g.get("period", c.gait.period);
    g.get("dual_support", c.gait.dual_support);
    g.get("transition", c.gait.transition);
    g.finish();
  }
  {
    Section t = s.child("tvr");
    t.get("com_height", c.tvr.com_height);
    t.get("reversal_time_sagittal", c.tvr.reversal_time_sagittal);
    t.get("reversal_time_lateral", c.tvr.reversal_time_lateral);
    t.get("lateral_bias", c.tvr.lateral_bias);
    t.finish();
  }
  {
    Section m = s.child("srb");
    m.get("dt", c.srb.dt);
    m.get("horizon", c.srb.horizon);
    m.get("force_weight", c.srb.force_weight);
    if (const YAML::Node w = m.raw("state_weights")) {
      const auto v = Section::numbers(w, m.path() + ".state_weights", 12);
      std::copy(v.begin(), v.end(), c.srb.state_weights.begin());
    }
    m.finish();
  }
  {
    Section r = s.child("regions");
    read_region(r.child("restricted"), c.restricted);
    read_region(r.child("extended"), c.extended);
    r.finish();
  }
  {
    Section k = s.child("collision");
    auto& p = c.collision;
    k.get("k_p", p.k_p);
    k.get("k_d", p.k_d);
    k.get("l_p", p.l_p);
    k.get("l_d", p.l_d);
    k.get("l_m", p.l_m);
    k.get("v_d", p.v_d);
    k.get("eps_d", p.eps_d);
    k.get("eps_m", p.eps_m);
    k.get("mu", p.mu);
    k.get("r", p.r);
    k.finish();
  }
  {
    Section a = s.child("apf");
    a.get("k_p", c.apf.k_p);
    a.get("l_p", c.apf.l_p);
    a.finish();
  }
  {
    Section g = s.child("gains");
    read_gains(g.child("orientation"), c.orientation);
    read_gains(g.child("height"), c.height);
    read_gains(g.child("swing"), c.swing);
    g.finish();
  }
  {
    Section q = s.child("qp");
    q.get("Q1", c.force_weight);
    q.get("Q2", c.accel_weight);
    q.get("friction_mu", c.friction_mu);
    q.get("fz_max", c.fz_max);
    q.finish();
  }
  s.finish();
}

void read_sim(Section s, sim::SimParams& p) {
  s.get("dt", p.dt);
  s.get("max_speed", p.max_speed);
  Section c = s.child("contact");
  c.get("stiffness", p.contact.stiffness);
  c.get("damping", p.contact.damping);
  c.get("mu", p.contact.mu);
  c.finish();
  s.finish();
}

void read_trial(Section s, sim::TrialConfig& t) {
  s.get("warmup_cycles", t.warmup_cycles);
  s.get("window", t.window);
  s.get("initial_jitter", t.initial_jitter);
  s.get("max_consecutive_qp_failures", t.max_consecutive_qp_failures);
  s.get("left_first", t.left_first);
  s.get("min_base_height", t.failure.min_base_height);
  s.get("min_clearance", t.failure.min_clearance);
  s.finish();
}

sim::TrialConfig parse_root(const YAML::Node& root) {
  sim::TrialConfig cfg;
  Section top(root, "config");
  int model_line = -1;
  if (top.has("model")) {
    model_line = top.key_line("model");
    cfg.model = read_model(top.child("model"));
  }
  read_controller(top.child("controller"), cfg.controller);
  read_sim(top.child("sim"), cfg.sim);
  read_trial(top.child("trial"), cfg);
  top.finish();

  cfg.validate();
  try {
    build_model(cfg.model);
    biped::dimensions_of(cfg.model);
  } catch (const ConfigError& e) {
    if (e.line() >= 0) throw;
    throw ConfigError(e.what(), model_line);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("invalid model: ") + e.what(), model_line);
  }
  return cfg;
}

}  // namespace

sim::TrialConfig parse_trial_config(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(std::string("YAML syntax: ") + e.msg, e.mark.line + 1);
  }
  return parse_root(root);
}

sim::TrialConfig load_trial_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_trial_config(ss.str());
}

namespace {

// Shortest text that parses back to the same double.
std::string num(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

void emit_vec(YAML::Emitter& out, const char* key, const Vec3& v) {
  out << YAML::Key << key << YAML::Value << YAML::Flow << YAML::BeginSeq << num(v.x()) << num(v.y()) << num(v.z())
      << YAML::EndSeq;
}

template <class T>
void emit(YAML::Emitter& out, const char* key, const T& v) {
  if constexpr (std::is_same_v<T, double>)
    out << YAML::Key << key << YAML::Value << num(v);
  else
    out << YAML::Key << key << YAML::Value << v;
}

void emit_gains(YAML::Emitter& out, const char* key, const control::Gains& g) {
  out << YAML::Key << key << YAML::Value << YAML::Flow << YAML::BeginMap;
  emit(out, "kp", g.kp);
  emit(out, "kd", g.kd);
  out << YAML::EndMap;
}

void emit_region(YAML::Emitter& out, const char* key, const locomotion::StepRegion& r) {
  out << YAML::Key << key << YAML::Value << YAML::Flow << YAML::BeginMap;
  emit(out, "sagittal_min", r.sagittal_min);
  emit(out, "sagittal_max", r.sagittal_max);
  emit(out, "outward_min", r.outward_min);
  emit(out, "outward_max", r.outward_max);
  out << YAML::EndMap;
}

}  // namespace

std::string emit_trial_config(const sim::TrialConfig& cfg) {
  YAML::Emitter out;
  out << YAML::BeginMap;

  const ModelDescription& m = cfg.model;
  out << YAML::Key << "model" << YAML::Value << YAML::BeginMap;
  emit_vec(out, "gravity", m.gravity);
  out << YAML::Key << "bodies" << YAML::Value << YAML::BeginSeq;
  for (const auto& b : m.bodies) {
    out << YAML::BeginMap;
    emit(out, "name", b.name);
    if (!b.parent.empty()) emit(out, "parent", b.parent);
    emit(out, "joint", joint_name(b.joint_type));
    if (b.joint_type == JointType::Revolute) emit_vec(out, "axis", b.joint_axis);
    emit_vec(out, "origin", b.translation_to_parent);
    if (!b.rotation_to_parent.isIdentity(0.0)) {
      out << YAML::Key << "rotation" << YAML::Value << YAML::Flow << YAML::BeginSeq;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) out << num(b.rotation_to_parent(i, j));
      out << YAML::EndSeq;
    }
    emit(out, "mass", b.mass);
    emit_vec(out, "com", b.com_offset);
    const Mat3& I = b.rotational_inertia;
    out << YAML::Key << "inertia" << YAML::Value << YAML::Flow << YAML::BeginSeq << num(I(0, 0)) << num(I(1, 1))
        << num(I(2, 2)) << num(I(0, 1)) << num(I(0, 2)) << num(I(1, 2)) << YAML::EndSeq;
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::Key << "frames" << YAML::Value << YAML::BeginSeq;
  for (const auto& f : m.frames) {
    out << YAML::Flow << YAML::BeginMap;
    emit(out, "name", f.name);
    emit(out, "body", f.body_name);
    emit_vec(out, "offset", f.offset);
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::Key << "capsules" << YAML::Value << YAML::BeginSeq;
  for (const auto& c : m.capsules) {
    out << YAML::Flow << YAML::BeginMap;
    emit(out, "name", c.name);
    emit(out, "body", c.body_name);
    emit_vec(out, "a", c.endpoint_a);
    emit_vec(out, "b", c.endpoint_b);
    emit(out, "radius", c.radius);
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::Key << "actuated" << YAML::Value << YAML::Flow << m.actuated_joint_names;
  out << YAML::EndMap;

  const control::ControllerConfig& c = cfg.controller;
  out << YAML::Key << "controller" << YAML::Value << YAML::BeginMap;
  emit(out, "strategy", std::string(control::strategy_name(c.strategy)));
  emit(out, "base_height", c.base_height);
  emit(out, "swing_apex", c.swing_apex);
  emit(out, "swing_target_z", c.swing_target_z);
  emit(out, "mpc_period", c.mpc_period);
  emit(out, "crossing_band", c.crossing_band);
  emit(out, "crossing_setback", c.crossing_setback);
  emit(out, "horizontal_damping", c.horizontal_damping);
  out << YAML::Key << "gait" << YAML::Value << YAML::BeginMap;
  emit(out, "period", c.gait.period);
  emit(out, "dual_support", c.gait.dual_support);
  emit(out, "transition", c.gait.transition);
  out << YAML::EndMap;
  out << YAML::Key << "tvr" << YAML::Value << YAML::BeginMap;
  emit(out, "com_height", c.tvr.com_height);
  emit(out, "reversal_time_sagittal", c.tvr.reversal_time_sagittal);
  emit(out, "reversal_time_lateral", c.tvr.reversal_time_lateral);
  emit(out, "lateral_bias", c.tvr.lateral_bias);
  out << YAML::EndMap;
  out << YAML::Key << "srb" << YAML::Value << YAML::BeginMap;
  emit(out, "dt", c.srb.dt);
  emit(out, "horizon", c.srb.horizon);
  emit(out, "force_weight", c.srb.force_weight);
  out << YAML::Key << "state_weights" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (double w : c.srb.state_weights) out << num(w);
  out << YAML::EndSeq << YAML::EndMap;
  out << YAML::Key << "regions" << YAML::Value << YAML::BeginMap;
  emit_region(out, "restricted", c.restricted);
  emit_region(out, "extended", c.extended);
  out << YAML::EndMap;
  const auto& k = c.collision;
  out << YAML::Key << "collision" << YAML::Value << YAML::BeginMap;
  emit(out, "k_p", k.k_p);
  emit(out, "k_d", k.k_d);
  emit(out, "l_p", k.l_p);
  emit(out, "l_d", k.l_d);
  emit(out, "l_m", k.l_m);
  emit(out, "v_d", k.v_d);
  emit(out, "eps_d", k.eps_d);
  emit(out, "eps_m", k.eps_m);
  emit(out, "mu", k.mu);
  emit(out, "r", k.r);
  out << YAML::EndMap;
  out << YAML::Key << "apf" << YAML::Value << YAML::BeginMap;
  emit(out, "k_p", c.apf.k_p);
  emit(out, "l_p", c.apf.l_p);
  out << YAML::EndMap;
  out << YAML::Key << "gains" << YAML::Value << YAML::BeginMap;
  emit_gains(out, "orientation", c.orientation);
  emit_gains(out, "height", c.height);
  emit_gains(out, "swing", c.swing);
  out << YAML::EndMap;
  out << YAML::Key << "qp" << YAML::Value << YAML::BeginMap;
  emit(out, "Q1", c.force_weight);
  emit(out, "Q2", c.accel_weight);
  emit(out, "friction_mu", c.friction_mu);
  emit(out, "fz_max", c.fz_max);
  out << YAML::EndMap;
  out << YAML::EndMap;

  out << YAML::Key << "sim" << YAML::Value << YAML::BeginMap;
  emit(out, "dt", cfg.sim.dt);
  emit(out, "max_speed", cfg.sim.max_speed);
  out << YAML::Key << "contact" << YAML::Value << YAML::BeginMap;
  emit(out, "stiffness", cfg.sim.contact.stiffness);
  emit(out, "damping", cfg.sim.contact.damping);
  emit(out, "mu", cfg.sim.contact.mu);
  out << YAML::EndMap << YAML::EndMap;

  out << YAML::Key << "trial" << YAML::Value << YAML::BeginMap;
  emit(out, "warmup_cycles", cfg.warmup_cycles);
  emit(out, "window", cfg.window);
  emit(out, "initial_jitter", cfg.initial_jitter);
  emit(out, "max_consecutive_qp_failures", cfg.max_consecutive_qp_failures);
  emit(out, "left_first", cfg.left_first);
  emit(out, "min_base_height", cfg.failure.min_base_height);
  emit(out, "min_clearance", cfg.failure.min_clearance);
  out << YAML::EndMap;

  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace rmpwbc::config

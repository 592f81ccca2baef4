/*
 * (C) Copyright 2026 The hmcda authors.
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <yaml-cpp/yaml.h>

#include "hmcda/experiment.hpp"

namespace hmcda {

namespace {

using Scheme = ExperimentConfig::Scheme;

// Reads typed values from YAML maps, recording every failure instead of
// stopping at the first one.
class Reader {
 public:
  std::vector<std::string> errors;

  void error(std::string msg) { errors.push_back(std::move(msg)); }

  // Flags keys of `node` that are not in `known`.
  void check_keys(const YAML::Node& node, const std::string& path, std::initializer_list<const char*> known) {
    if (!node.IsMap()) return;
    for (const auto& kv : node) {
      const auto key = kv.first.as<std::string>("");
      bool found = false;
      for (const char* k : known) found = found || key == k;
      if (!found) error(fmt::format("{}: unknown key '{}'", path.empty() ? "config" : path, key));
    }
  }

  YAML::Node map(const YAML::Node& parent, const char* key, const std::string& path, bool required = false) {
    const YAML::Node node = parent[key];
    if (!node) {
      if (required) error(fmt::format("{}: missing required section", join(path, key)));
      return YAML::Node(YAML::NodeType::Map);
    }
    if (!node.IsMap()) {
      error(fmt::format("{}: expected a mapping", join(path, key)));
      return YAML::Node(YAML::NodeType::Map);
    }
    return node;
  }

  template <typename T>
  void read(const YAML::Node& parent, const char* key, const std::string& path, T& out, bool required = false) {
    const YAML::Node node = parent[key];
    if (!node) {
      if (required) error(fmt::format("{}: missing required value", join(path, key)));
      return;
    }
    try {
      out = node.as<T>();
    } catch (const YAML::Exception&) {
      error(fmt::format("{}: cannot read value '{}'", join(path, key), node.IsScalar() ? node.Scalar() : "<node>"));
    }
  }

  void read_list(const YAML::Node& parent, const char* key, const std::string& path, std::vector<double>& out) {
    const YAML::Node node = parent[key];
    if (!node) return;
    if (!node.IsSequence()) {
      error(fmt::format("{}: expected a list of numbers", join(path, key)));
      return;
    }
    out.clear();
    for (std::size_t i = 0; i < node.size(); ++i) {
      try {
        out.push_back(node[i].as<double>());
      } catch (const YAML::Exception&) {
        error(fmt::format("{}[{}]: not a number", join(path, key), i));
      }
    }
  }

  void read_noise(const YAML::Node& parent, const char* key, const std::string& path, NoiseSpec& out) {
    const YAML::Node node = parent[key];
    if (!node) return;
    const std::string p = join(path, key);
    if (!node.IsMap()) {
      error(fmt::format("{}: expected {{sigma: v}} or {{relative: v}}", p));
      return;
    }
    check_keys(node, p, {"sigma", "relative"});
    const bool has_sigma = static_cast<bool>(node["sigma"]);
    const bool has_relative = static_cast<bool>(node["relative"]);
    if (has_sigma == has_relative) {
      error(fmt::format("{}: give exactly one of sigma or relative", p));
      return;
    }
    out.mode = has_sigma ? NoiseSpec::Mode::Absolute : NoiseSpec::Mode::Relative;
    read(node, has_sigma ? "sigma" : "relative", p, out.value);
    if (!(out.value > 0.0) || !std::isfinite(out.value)) error(fmt::format("{}: value must be > 0", p));
  }

  template <typename E>
  void read_enum(const YAML::Node& parent, const char* key, const std::string& path, E& out,
                 std::initializer_list<std::pair<const char*, E>> choices, bool required = false) {
    std::string text;
    const std::size_t before = errors.size();
    read(parent, key, path, text, required);
    if (text.empty() || errors.size() != before) return;
    for (const auto& [name, value] : choices) {
      if (text == name) {
        out = value;
        return;
      }
    }
    std::vector<std::string> names;
    for (const auto& c : choices) names.emplace_back(c.first);
    error(fmt::format("{}: '{}' is not one of {}", join(path, key), text, fmt::join(names, ", ")));
  }

  static std::string join(const std::string& path, const char* key) {
    return path.empty() ? std::string(key) : path + "." + key;
  }
};

bool on_step_grid(double span, double step) {
  const double ratio = span / step;
  return std::abs(ratio - std::round(ratio)) <= 1e-6 * std::max(1.0, std::abs(ratio));
}

void validate_semantics(const ExperimentConfig& c, std::vector<std::string>& errors) {
  auto check = [&](bool ok, std::string msg) {
    if (!ok) errors.push_back(std::move(msg));
  };
  const bool lorenz = c.model == ExperimentConfig::ModelKind::Lorenz96;
  const std::size_t nvar = lorenz ? static_cast<std::size_t>(std::max(c.lorenz_n, 0)) : 1;

  check(c.model_step > 0.0 && std::isfinite(c.model_step), "model.step must be > 0");
  if (lorenz) {
    check(c.lorenz_n >= 4, "model.n must be >= 4");
    check(std::isfinite(c.lorenz_forcing), "model.forcing must be finite");
  }
  check(c.noise_scale >= 0.0 && std::isfinite(c.noise_scale), "observations.noise_scale must be >= 0");
  check(c.truth_x0.empty() || c.truth_x0.size() == nvar,
        fmt::format("truth.x0 has {} entries, the model has {}", c.truth_x0.size(), nvar));
  check(lorenz || !c.truth_x0.empty(), "truth.x0 is required for the double-well model");
  check(c.spinup_time >= 0.0 && on_step_grid(c.spinup_time, c.model_step),
        "truth.spinup_time must be >= 0 and a multiple of model.step");
  check(c.background_x0.empty() || c.background_x0.size() == nvar,
        fmt::format("background.x0 has {} entries, the model has {}", c.background_x0.size(), nvar));
  check(c.background_correlation >= 0.0, "background.correlation_length must be >= 0");
  check(c.time_scale > 0.0 && std::isfinite(c.time_scale), "time_scale must be > 0");
  if (c.bootstrap_cycles != 0) {
    check(c.bootstrap_cycles > 0, "background.bootstrap.cycles must be >= 0");
    check(c.bootstrap_members >= 2, "background.bootstrap.members must be >= 2");
    check(c.bootstrap_average >= 1 && c.bootstrap_average <= c.bootstrap_cycles,
          "background.bootstrap.average_last must lie in [1, cycles]");
    check(c.bootstrap_every > 0.0 && on_step_grid(c.bootstrap_every * c.time_scale, c.model_step),
          "background.bootstrap.every must be > 0 and a multiple of model.step");
  }

  check(!c.windows.empty(), "windows: at least one window is required");
  double last_obs = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < c.windows.size(); ++i) {
    const WindowConfig& w = c.windows[i];
    const std::string p = fmt::format("windows[{}]", i);
    if (!(w.t0 < w.tF)) {
      errors.push_back(fmt::format("{}: t0 ({}) must be < tF ({})", p, w.t0, w.tF));
      continue;
    }
    if (i > 0 && w.t0 != c.windows[i - 1].tF) {
      errors.push_back(fmt::format("{}: t0 ({}) must equal the previous tF ({})", p, w.t0, c.windows[i - 1].tF));
    }
    check(!w.obs_times.empty() || w.obs_every > 0.0, fmt::format("{}: give obs_times or obs_every > 0", p));
    check(w.obs_times.empty() || w.obs_every == 0.0, fmt::format("{}: give only one of obs_times and obs_every", p));
    check(on_step_grid((w.tF - w.t0) * c.time_scale, c.model_step),
          fmt::format("{}: window length is not a multiple of model.step", p));
    if (!(c.model_step > 0.0) || !(c.time_scale > 0.0)) continue;
    const std::vector<double> times = c.observation_times(i);
    check(!times.empty(), fmt::format("{}: no observation times inside the window", p));
    for (double t : times) {
      if (t < w.t0 * c.time_scale || t > w.tF * c.time_scale) {
        errors.push_back(fmt::format("{}: observation time {} outside [t0, tF]", p, t / c.time_scale));
      } else if (!on_step_grid(t - w.t0 * c.time_scale, c.model_step)) {
        errors.push_back(fmt::format("{}: observation time {} is not a multiple of model.step", p, t / c.time_scale));
      }
      if (!(t > last_obs)) errors.push_back(fmt::format("{}: observation times must be strictly increasing", p));
      last_obs = t;
    }
  }

  const HmcConfig& h = c.hmc;
  check(h.trajectory_steps >= 1, "hmc.trajectory_steps must be >= 1");
  check(h.base_step > 0.0, "hmc.base_step must be > 0");
  check(h.step_jitter >= 0.0 && h.step_jitter < 1.0, "hmc.step_jitter must lie in [0, 1)");
  check(h.burn_in >= 0, "hmc.burn_in must be >= 0");
  check(h.thin >= 0, "hmc.thin must be >= 0");
  check(h.n_samples >= 2, "hmc.n_samples must be >= 2");
  check(c.gamma >= 0.0 && c.gamma <= 1.0, fmt::format("smoother.gamma ({}) must lie in [0, 1]", c.gamma));
  check(c.taper_length >= 0.0, "smoother.taper_length must be >= 0");
  check(c.warm_start_iterations >= 1, "smoother.warm_start_iterations must be >= 1");
  check(c.fourdvar_max_iterations >= 1, "fourdvar.max_iterations must be >= 1");
  check(c.fourdvar_memory >= 0, "fourdvar.memory must be >= 0");
  check(c.fourdvar_grad_norm_tol > 0.0, "fourdvar.grad_norm_tol must be > 0");
  check(c.fourdvar_rel_f_tol > 0.0, "fourdvar.rel_f_tol must be > 0");
  check(c.enks_members >= 2, "enks.members must be >= 2");
  check(c.histogram_bins >= 1 && c.histogram_hi > c.histogram_lo, "output.histogram needs bins >= 1 and hi > lo");
  check(c.kernel_step > 0.0 && c.kernel_hi > c.kernel_lo, "output.kernel needs step > 0 and hi > lo");
  check(!c.output_dir.empty(), "output_dir must not be empty");
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"' || ch == '\\') out += '\\';
    out += ch;
  }
  return out + "\"";
}

std::string list(const std::vector<double>& v) { return fmt::format("[{}]", fmt::join(v, ", ")); }

std::string noise(const NoiseSpec& n) {
  return fmt::format("{{{}: {}}}", n.mode == NoiseSpec::Mode::Absolute ? "sigma" : "relative", n.value);
}

}  // namespace

std::vector<double> ExperimentConfig::observation_times(std::size_t i) const {
  const WindowConfig& w = windows.at(i);
  std::vector<double> out;
  if (!w.obs_times.empty()) {
    for (double t : w.obs_times) out.push_back(t * time_scale);
    return out;
  }
  if (!(w.obs_every > 0.0)) return out;
  const auto count = static_cast<long long>(std::floor((w.tF - w.t0) / w.obs_every + 1e-9));
  const double end = w.tF * time_scale;
  for (long long k = 1; k <= count; ++k) {
    double t = (w.t0 + static_cast<double>(k) * w.obs_every) * time_scale;
    if (std::abs(t - end) <= 1e-9 * std::max(1.0, std::abs(end))) t = end;
    out.push_back(t);
  }
  return out;
}

std::string_view to_string(Scheme s) {
  switch (s) {
    case Scheme::HmcSmoother: return "hmc";
    case Scheme::FourDVar: return "fourdvar";
    case Scheme::Enks: return "enks";
    case Scheme::All: return "all";
  }
  return "all";
}

std::optional<Scheme> parse_scheme(std::string_view text) {
  for (Scheme s : {Scheme::HmcSmoother, Scheme::FourDVar, Scheme::Enks, Scheme::All}) {
    if (text == to_string(s)) return s;
  }
  return std::nullopt;
}

ConfigParse validate_config(const std::string& raw) {
  ConfigParse result;
  YAML::Node root;
  try {
    root = YAML::Load(raw);
  } catch (const YAML::Exception& e) {
    result.errors.push_back(fmt::format("config is not valid YAML: {}", e.what()));
    return result;
  }
  if (!root || root.IsNull()) {
    result.errors.push_back("config is empty");
    return result;
  }
  if (!root.IsMap()) {
    result.errors.push_back("config must be a mapping");
    return result;
  }

  Reader r;
  ExperimentConfig c;
  r.check_keys(root, "", {"seed", "output_dir", "scheme", "model", "observations", "truth", "background",
                          "time_scale", "windows", "hmc", "smoother", "fourdvar", "enks", "output"});
  r.read(root, "seed", "", c.seed, true);
  r.read(root, "output_dir", "", c.output_dir);
  r.read_enum(root, "scheme", "", c.scheme,
              {{"hmc", Scheme::HmcSmoother}, {"fourdvar", Scheme::FourDVar}, {"enks", Scheme::Enks}, {"all", Scheme::All}});
  r.read(root, "time_scale", "", c.time_scale);

  const YAML::Node model = r.map(root, "model", "", true);
  r.check_keys(model, "model", {"kind", "step", "n", "forcing"});
  r.read_enum(model, "kind", "model", c.model,
              {{"double_well", ExperimentConfig::ModelKind::DoubleWell},
               {"lorenz96", ExperimentConfig::ModelKind::Lorenz96}},
              root["model"].IsDefined());
  if (c.model == ExperimentConfig::ModelKind::Lorenz96) c.model_step = 0.005;
  r.read(model, "step", "model", c.model_step);
  r.read(model, "n", "model", c.lorenz_n);
  r.read(model, "forcing", "model", c.lorenz_forcing);

  const YAML::Node obs = r.map(root, "observations", "");
  r.check_keys(obs, "observations", {"operator", "error", "noise_scale"});
  r.read_enum(obs, "operator", "observations", c.obs_operator,
              {{"identity", ExperimentConfig::Operator::Identity}, {"quadratic", ExperimentConfig::Operator::Quadratic}});
  r.read_noise(obs, "error", "observations", c.obs_error);
  r.read(obs, "noise_scale", "observations", c.noise_scale);

  const YAML::Node truth = r.map(root, "truth", "");
  r.check_keys(truth, "truth", {"x0", "spinup_time"});
  r.read_list(truth, "x0", "truth", c.truth_x0);
  r.read(truth, "spinup_time", "truth", c.spinup_time);

  const YAML::Node bg = r.map(root, "background", "");
  r.check_keys(bg, "background", {"x0", "error", "correlation_length", "bootstrap"});
  r.read_list(bg, "x0", "background", c.background_x0);
  r.read_noise(bg, "error", "background", c.background_error);
  r.read(bg, "correlation_length", "background", c.background_correlation);
  const YAML::Node boot = r.map(bg, "bootstrap", "background");
  r.check_keys(boot, "background.bootstrap", {"cycles", "members", "average_last", "every"});
  r.read(boot, "cycles", "background.bootstrap", c.bootstrap_cycles);
  r.read(boot, "members", "background.bootstrap", c.bootstrap_members);
  r.read(boot, "average_last", "background.bootstrap", c.bootstrap_average);
  r.read(boot, "every", "background.bootstrap", c.bootstrap_every);

  const YAML::Node windows = root["windows"];
  if (!windows) {
    r.error("windows: missing required list");
  } else if (!windows.IsSequence()) {
    r.error("windows: expected a list");
  } else {
    for (std::size_t i = 0; i < windows.size(); ++i) {
      const std::string p = fmt::format("windows[{}]", i);
      WindowConfig w;
      r.check_keys(windows[i], p, {"t0", "tF", "obs_times", "obs_every"});
      r.read(windows[i], "t0", p, w.t0, true);
      r.read(windows[i], "tF", p, w.tF, true);
      r.read_list(windows[i], "obs_times", p, w.obs_times);
      r.read(windows[i], "obs_every", p, w.obs_every);
      c.windows.push_back(std::move(w));
    }
  }

  const YAML::Node hmc = r.map(root, "hmc", "");
  r.check_keys(hmc, "hmc", {"trajectory_steps", "base_step", "step_jitter", "burn_in", "thin", "n_samples"});
  r.read(hmc, "trajectory_steps", "hmc", c.hmc.trajectory_steps);
  r.read(hmc, "base_step", "hmc", c.hmc.base_step);
  r.read(hmc, "step_jitter", "hmc", c.hmc.step_jitter);
  r.read(hmc, "burn_in", "hmc", c.hmc.burn_in);
  r.read(hmc, "thin", "hmc", c.hmc.thin);
  r.read(hmc, "n_samples", "hmc", c.hmc.n_samples);
  c.hmc.seed = c.seed;

  const YAML::Node sm = r.map(root, "smoother", "");
  r.check_keys(sm, "smoother", {"b0_mode", "gamma", "taper_length", "init", "warm_start_iterations"});
  r.read_enum(sm, "b0_mode", "smoother", c.b0_mode,
              {{"fixed", ExperimentConfig::B0Mode::Fixed}, {"hybrid", ExperimentConfig::B0Mode::Hybrid}});
  r.read(sm, "gamma", "smoother", c.gamma);
  r.read(sm, "taper_length", "smoother", c.taper_length);
  r.read_enum(sm, "init", "smoother", c.init,
              {{"background", ExperimentConfig::Init::Background},
               {"fourdvar", ExperimentConfig::Init::FourDVarWarmStart}});
  r.read(sm, "warm_start_iterations", "smoother", c.warm_start_iterations);

  const YAML::Node fd = r.map(root, "fourdvar", "");
  r.check_keys(fd, "fourdvar", {"max_iterations", "memory", "grad_norm_tol", "rel_f_tol"});
  r.read(fd, "max_iterations", "fourdvar", c.fourdvar_max_iterations);
  r.read(fd, "memory", "fourdvar", c.fourdvar_memory);
  r.read(fd, "grad_norm_tol", "fourdvar", c.fourdvar_grad_norm_tol);
  r.read(fd, "rel_f_tol", "fourdvar", c.fourdvar_rel_f_tol);

  const YAML::Node en = r.map(root, "enks", "");
  r.check_keys(en, "enks", {"members"});
  r.read(en, "members", "enks", c.enks_members);

  const YAML::Node out = r.map(root, "output", "");
  r.check_keys(out, "output", {"histogram", "kernel"});
  const YAML::Node hist = r.map(out, "histogram", "output");
  r.check_keys(hist, "output.histogram", {"lo", "hi", "bins"});
  r.read(hist, "lo", "output.histogram", c.histogram_lo);
  r.read(hist, "hi", "output.histogram", c.histogram_hi);
  r.read(hist, "bins", "output.histogram", c.histogram_bins);
  const YAML::Node kern = r.map(out, "kernel", "output");
  r.check_keys(kern, "output.kernel", {"lo", "hi", "step"});
  r.read(kern, "lo", "output.kernel", c.kernel_lo);
  r.read(kern, "hi", "output.kernel", c.kernel_hi);
  r.read(kern, "step", "output.kernel", c.kernel_step);

  validate_semantics(c, r.errors);
  result.errors = std::move(r.errors);
  if (result.errors.empty()) result.config = std::move(c);
  return result;
}

ConfigParse load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    ConfigParse result;
    result.errors.push_back(fmt::format("cannot read config file {}", path.string()));
    return result;
  }
  std::ostringstream text;
  text << in.rdbuf();
  return validate_config(text.str());
}

std::string emit_config(const ExperimentConfig& c) {
  const bool lorenz = c.model == ExperimentConfig::ModelKind::Lorenz96;
  std::string s;
  auto line = [&s](std::string text) { s += text + "\n"; };
  line(fmt::format("seed: {}", c.seed));
  line(fmt::format("output_dir: {}", quote(c.output_dir)));
  line(fmt::format("scheme: {}", to_string(c.scheme)));
  line("model:");
  line(fmt::format("  kind: {}", lorenz ? "lorenz96" : "double_well"));
  line(fmt::format("  step: {}", c.model_step));
  line(fmt::format("  n: {}", c.lorenz_n));
  line(fmt::format("  forcing: {}", c.lorenz_forcing));
  line("observations:");
  line(fmt::format("  operator: {}", c.obs_operator == ExperimentConfig::Operator::Quadratic ? "quadratic" : "identity"));
  line(fmt::format("  error: {}", noise(c.obs_error)));
  line(fmt::format("  noise_scale: {}", c.noise_scale));
  line("truth:");
  if (!c.truth_x0.empty()) line(fmt::format("  x0: {}", list(c.truth_x0)));
  line(fmt::format("  spinup_time: {}", c.spinup_time));
  line("background:");
  if (!c.background_x0.empty()) line(fmt::format("  x0: {}", list(c.background_x0)));
  line(fmt::format("  error: {}", noise(c.background_error)));
  line(fmt::format("  correlation_length: {}", c.background_correlation));
  if (c.bootstrap_cycles != 0) {
    line(fmt::format("  bootstrap: {{cycles: {}, members: {}, average_last: {}, every: {}}}", c.bootstrap_cycles,
                     c.bootstrap_members, c.bootstrap_average, c.bootstrap_every));
  }
  line(fmt::format("time_scale: {}", c.time_scale));
  line("windows:");
  for (const WindowConfig& w : c.windows) {
    line(fmt::format("  - t0: {}", w.t0));
    line(fmt::format("    tF: {}", w.tF));
    if (!w.obs_times.empty()) line(fmt::format("    obs_times: {}", list(w.obs_times)));
    if (w.obs_every != 0.0) line(fmt::format("    obs_every: {}", w.obs_every));
  }
  line("hmc:");
  line(fmt::format("  trajectory_steps: {}", c.hmc.trajectory_steps));
  line(fmt::format("  base_step: {}", c.hmc.base_step));
  line(fmt::format("  step_jitter: {}", c.hmc.step_jitter));
  line(fmt::format("  burn_in: {}", c.hmc.burn_in));
  line(fmt::format("  thin: {}", c.hmc.thin));
  line(fmt::format("  n_samples: {}", c.hmc.n_samples));
  line("smoother:");
  line(fmt::format("  b0_mode: {}", c.b0_mode == ExperimentConfig::B0Mode::Hybrid ? "hybrid" : "fixed"));
  line(fmt::format("  gamma: {}", c.gamma));
  line(fmt::format("  taper_length: {}", c.taper_length));
  line(fmt::format("  init: {}", c.init == ExperimentConfig::Init::FourDVarWarmStart ? "fourdvar" : "background"));
  line(fmt::format("  warm_start_iterations: {}", c.warm_start_iterations));
  line("fourdvar:");
  line(fmt::format("  max_iterations: {}", c.fourdvar_max_iterations));
  line(fmt::format("  memory: {}", c.fourdvar_memory));
  line(fmt::format("  grad_norm_tol: {}", c.fourdvar_grad_norm_tol));
  line(fmt::format("  rel_f_tol: {}", c.fourdvar_rel_f_tol));
  line("enks:");
  line(fmt::format("  members: {}", c.enks_members));
  line("output:");
  line(fmt::format("  histogram: {{lo: {}, hi: {}, bins: {}}}", c.histogram_lo, c.histogram_hi, c.histogram_bins));
  line(fmt::format("  kernel: {{lo: {}, hi: {}, step: {}}}", c.kernel_lo, c.kernel_hi, c.kernel_step));
  return s;
}

}  // namespace hmcda

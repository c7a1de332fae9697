#include "shnse/config.hpp"

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace shnse {

namespace pt = boost::property_tree;

const char* sweep_axis_name(SweepAxis a) {
  switch (a) {
    case SweepAxis::Mu: return "mu";
    case SweepAxis::M: return "m";
    case SweepAxis::Grid: return "grid";
    default: return "none";
  }
}

const char* formulation_name(Formulation f) {
  switch (f) {
    case Formulation::Grid: return "grid";
    case Formulation::Both: return "both";
    default: return "spectral";
  }
}

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> k{
      {"grid", {"dim", "cells", "lengths"}},
      {"spectrum", {"modes", "cache_dir"}},
      {"model", {"nu", "mu", "alpha", "m0", "m", "ramp", "ramp_power", "ramp_values", "ramp_index", "nonlinear"}},
      {"time", {"dt", "T", "sample_every", "estimate_error"}},
      {"data", {"initial_gamma", "initial_scale", "forcing_band", "forcing_amplitude", "seeds"}},
      {"sweep", {"axis", "values", "formulation"}},
      {"grid_path", {"extended", "flux", "truncation", "dt"}},
      {"diagnostics", {"thetas"}},
      {"output", {"dir"}},
  };
  return k;
}

std::vector<std::string> split_list(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '[' || c == ']' || c == '\t') c = ' ';
  std::istringstream is(s);
  std::vector<std::string> out;
  for (std::string tok; is >> tok;) out.push_back(tok);
  return out;
}

double to_double(const std::string& field, const std::string& s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) throw PlanError(field + ": not a number: '" + s + "'");
  return v;
}

long long to_int(const std::string& field, const std::string& s) {
  long long v = 0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) throw PlanError(field + ": not an integer: '" + s + "'");
  return v;
}

bool to_bool(const std::string& field, const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw PlanError(field + ": expected true/false, got '" + s + "'");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + fmt_double(v[i]);
  return s;
}

class Reader {
 public:
  explicit Reader(const pt::ptree& t) : t_(t) {}

  std::optional<std::string> get(const std::string& sec, const std::string& key) const {
    auto s = t_.get_child_optional(sec);
    if (!s) return std::nullopt;
    auto v = s->get_optional<std::string>(key);
    if (!v) return std::nullopt;
    return trim(*v);
  }
  template <class F>
  void with(const std::string& sec, const std::string& key, F&& f) const {
    if (auto v = get(sec, key)) f(sec + "." + key, *v);
  }

 private:
  const pt::ptree& t_;
};

}  // namespace

std::vector<std::pair<std::string, std::string>> ExperimentPlan::echo() const {
  std::vector<std::pair<std::string, std::string>> e;
  auto add = [&](const std::string& k, const std::string& v) { e.emplace_back(k, v); };
  add("grid.dim", std::to_string(grid.dim));
  std::string cells, lengths;
  for (int a = 0; a < grid.dim; ++a) {
    cells += (a ? " " : "") + std::to_string(grid.cells[a]);
    lengths += (a ? " " : "") + fmt_double(grid.lengths[a]);
  }
  add("grid.cells", cells);
  add("grid.lengths", lengths);
  add("spectrum.modes", std::to_string(modes));
  add("spectrum.cache_dir", cache_dir);
  add("model.nu", fmt_double(nu));
  add("model.mu", fmt_double(mu));
  add("model.alpha", std::to_string(alpha));
  add("model.m0", std::to_string(m0));
  add("model.m", std::to_string(effective_m()));
  add("model.ramp", ramp_name(ramp));
  add("model.ramp_power", fmt_double(ramp.power));
  add("model.ramp_values", join(std::vector<double>(ramp.custom.data(), ramp.custom.data() + ramp.custom.size())));
  add("model.ramp_index", ramp.index == RampIndex::Mode ? "mode" : "cluster");
  add("model.nonlinear", nonlinear ? "true" : "false");
  add("time.dt", fmt_double(dt));
  add("time.T", fmt_double(T));
  add("time.sample_every", std::to_string(sample_every));
  add("time.estimate_error", estimate_error ? "true" : "false");
  add("data.initial_gamma", fmt_double(initial_gamma));
  add("data.initial_scale", fmt_double(initial_scale));
  add("data.forcing_band", std::to_string(forcing_band));
  add("data.forcing_amplitude", fmt_double(forcing_amplitude));
  std::string seeds_s;
  for (std::size_t i = 0; i < seeds.size(); ++i) seeds_s += (i ? " " : "") + std::to_string(seeds[i]);
  add("data.seeds", seeds_s);
  add("sweep.axis", sweep_axis_name(axis));
  add("sweep.values", join(values));
  add("sweep.formulation", formulation_name(formulation));
  add("grid_path.extended", grid_extended ? "true" : "false");
  add("grid_path.flux", flux_rule_name(effective_flux()));
  add("grid_path.truncation", std::to_string(grid_truncation.value_or(effective_m())));
  add("grid_path.dt", fmt_double(grid_dt > 0.0 ? grid_dt : dt));
  add("diagnostics.thetas", join(thetas));
  add("output.dir", out_dir);
  std::sort(e.begin(), e.end());
  return e;
}

void ExperimentPlan::validate() {
  if (grid.dim != 2 && grid.dim != 3) throw PlanError("grid.dim: must be 2 or 3");
  for (int a = 0; a < grid.dim; ++a) {
    if (grid.cells[a] < 8) throw PlanError("grid.cells: every axis needs at least 8 cells");
    if (!(grid.lengths[a] > 0.0)) throw PlanError("grid.lengths: must be positive");
  }
  if (modes < 1) throw PlanError("spectrum.modes: must be >= 1");
  if (!(nu > 0.0)) throw PlanError("model.nu: must be positive");
  if (!(mu >= 0.0)) throw PlanError("model.mu: must be >= 0");
  if (alpha < 2) throw PlanError("model.alpha: must be >= 2");
  if (m0 < 0 || m0 > effective_m()) throw PlanError("model.m0: need 0 <= m0 <= m");
  if (effective_m() > modes) throw PlanError("model.m: must not exceed spectrum.modes");
  if (!(dt > 0.0)) throw PlanError("time.dt: must be positive");
  if (!(T >= dt)) throw PlanError("time.T: must be >= dt");
  const double r = T / dt;
  if (std::abs(r - std::round(r)) > 1e-9 * r) throw PlanError("time.T: must be an integer multiple of time.dt");
  if (sample_every < 1 || std::lround(r) % sample_every != 0)
    throw PlanError("time.sample_every: must divide the step count");
  if (forcing_band < 0 || forcing_band > modes) throw PlanError("data.forcing_band: must lie in [0, modes]");
  if (!(forcing_amplitude >= 0.0)) throw PlanError("data.forcing_amplitude: must be >= 0");
  if (!(initial_scale >= 0.0)) throw PlanError("data.initial_scale: must be >= 0");
  if (seeds.empty()) throw PlanError("data.seeds: at least one seed required");
  {
    std::vector<std::uint64_t> s = seeds;
    std::sort(s.begin(), s.end());
    if (std::adjacent_find(s.begin(), s.end()) != s.end()) throw PlanError("data.seeds: seeds must be distinct");
  }
  if (thetas.empty()) throw PlanError("diagnostics.thetas: at least one theta required");
  if (axis == SweepAxis::None && !values.empty()) throw PlanError("sweep.values: given without sweep.axis");
  if (axis != SweepAxis::None && values.empty()) throw PlanError("sweep.values: empty for sweep.axis");
  if (!std::is_sorted(values.begin(), values.end())) {
    std::sort(values.begin(), values.end());
    warnings.push_back("sweep.values were not sorted; sorted to " + join(values));
  }
  if (std::adjacent_find(values.begin(), values.end()) != values.end())
    throw PlanError("sweep.values: duplicate entries");
  for (double v : values) {
    if (axis == SweepAxis::Mu && !(v >= 0.0)) throw PlanError("sweep.values: mu must be >= 0");
    if (axis == SweepAxis::M || axis == SweepAxis::Grid) {
      if (v != std::floor(v)) throw PlanError("sweep.values: must be integers for this axis");
      if (axis == SweepAxis::M && (v < m0 || v > modes))
        throw PlanError("sweep.values: m must lie in [m0, modes]");
      if (axis == SweepAxis::Grid && v < 8) throw PlanError("sweep.values: grid sizes must be >= 8");
    }
  }
  if (grid_truncation && (*grid_truncation < 0 || *grid_truncation > modes))
    throw PlanError("grid_path.truncation: must lie in [0, modes]");
  if (grid_dt < 0.0) throw PlanError("grid_path.dt: must be >= 0");
  if (ramp.schedule == RampSchedule::Custom && ramp.custom.size() != effective_m() - m0)
    throw PlanError("model.ramp_values: need exactly m - m0 values");
  if (out_dir.empty()) throw PlanError("output.dir: must not be empty");
}

ExperimentPlan parse_config(const std::string& text) {
  pt::ptree tree;
  std::istringstream is(text);
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw PlanError("parse error at line " + std::to_string(e.line()) + ": " + e.message());
  }
  for (const auto& [sec, body] : tree) {
    auto it = known_keys().find(sec);
    if (it == known_keys().end()) throw PlanError("unknown section [" + sec + "]");
    if (body.empty() && !body.data().empty()) throw PlanError("key '" + sec + "' outside any section");
    for (const auto& [key, _] : body)
      if (!it->second.count(key)) throw PlanError("unknown key " + sec + "." + key);
  }
  if (!tree.get_child_optional("grid")) throw PlanError("grid: section missing");
  Reader r(tree);
  ExperimentPlan p;

  if (!r.get("grid", "cells")) throw PlanError("grid.cells: missing");
  r.with("grid", "dim", [&](auto f, auto v) { p.grid.dim = static_cast<int>(to_int(f, v)); });
  r.with("grid", "cells", [&](auto f, auto v) {
    auto l = split_list(v);
    if (static_cast<int>(l.size()) != p.grid.dim) throw PlanError(f + ": need one entry per axis");
    for (int a = 0; a < p.grid.dim; ++a) p.grid.cells[a] = static_cast<int>(to_int(f, l[a]));
  });
  p.grid.lengths = {1.0, 1.0, 1.0};
  r.with("grid", "lengths", [&](auto f, auto v) {
    auto l = split_list(v);
    if (static_cast<int>(l.size()) != p.grid.dim) throw PlanError(f + ": need one entry per axis");
    for (int a = 0; a < p.grid.dim; ++a) p.grid.lengths[a] = to_double(f, l[a]);
  });
  if (p.grid.dim == 2) p.grid.cells[2] = 1;

  r.with("spectrum", "modes", [&](auto f, auto v) { p.modes = static_cast<int>(to_int(f, v)); });
  r.with("spectrum", "cache_dir", [&](auto, auto v) { p.cache_dir = v; });

  if (!r.get("model", "nu")) throw PlanError("model.nu: missing");
  r.with("model", "nu", [&](auto f, auto v) { p.nu = to_double(f, v); });
  r.with("model", "mu", [&](auto f, auto v) { p.mu = to_double(f, v); });
  r.with("model", "alpha", [&](auto f, auto v) { p.alpha = static_cast<int>(to_int(f, v)); });
  r.with("model", "m0", [&](auto f, auto v) { p.m0 = static_cast<int>(to_int(f, v)); });
  r.with("model", "m", [&](auto f, auto v) { p.m = static_cast<int>(to_int(f, v)); });
  r.with("model", "ramp", [&](auto f, auto v) {
    if (v == "linear") p.ramp.schedule = RampSchedule::Linear;
    else if (v == "power") p.ramp.schedule = RampSchedule::Power;
    else if (v == "plain") p.ramp.schedule = RampSchedule::Plain;
    else if (v == "custom") p.ramp.schedule = RampSchedule::Custom;
    else throw PlanError(f + ": expected linear|power|plain|custom");
  });
  r.with("model", "ramp_power", [&](auto f, auto v) { p.ramp.power = to_double(f, v); });
  r.with("model", "ramp_values", [&](auto f, auto v) {
    auto l = split_list(v);
    p.ramp.custom.resize(static_cast<Eigen::Index>(l.size()));
    for (std::size_t i = 0; i < l.size(); ++i) p.ramp.custom[static_cast<Eigen::Index>(i)] = to_double(f, l[i]);
  });
  r.with("model", "ramp_index", [&](auto f, auto v) {
    if (v == "mode") p.ramp.index = RampIndex::Mode;
    else if (v == "cluster") p.ramp.index = RampIndex::Cluster;
    else throw PlanError(f + ": expected mode|cluster");
  });
  r.with("model", "nonlinear", [&](auto f, auto v) { p.nonlinear = to_bool(f, v); });

  if (!r.get("time", "T")) throw PlanError("time.T: missing");
  r.with("time", "dt", [&](auto f, auto v) { p.dt = to_double(f, v); });
  r.with("time", "T", [&](auto f, auto v) { p.T = to_double(f, v); });
  r.with("time", "sample_every", [&](auto f, auto v) { p.sample_every = static_cast<int>(to_int(f, v)); });
  r.with("time", "estimate_error", [&](auto f, auto v) { p.estimate_error = to_bool(f, v); });

  r.with("data", "initial_gamma", [&](auto f, auto v) { p.initial_gamma = to_double(f, v); });
  r.with("data", "initial_scale", [&](auto f, auto v) { p.initial_scale = to_double(f, v); });
  r.with("data", "forcing_band", [&](auto f, auto v) { p.forcing_band = static_cast<int>(to_int(f, v)); });
  r.with("data", "forcing_amplitude", [&](auto f, auto v) { p.forcing_amplitude = to_double(f, v); });
  r.with("data", "seeds", [&](auto f, auto v) {
    p.seeds.clear();
    for (const auto& s : split_list(v)) {
      std::uint64_t x = 0;
      auto [q, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
      if (ec != std::errc() || q != s.data() + s.size()) throw PlanError(f + ": not an unsigned integer: '" + s + "'");
      p.seeds.push_back(x);
    }
  });

  r.with("sweep", "axis", [&](auto f, auto v) {
    if (v == "none") p.axis = SweepAxis::None;
    else if (v == "mu") p.axis = SweepAxis::Mu;
    else if (v == "m") p.axis = SweepAxis::M;
    else if (v == "grid") p.axis = SweepAxis::Grid;
    else throw PlanError(f + ": expected none|mu|m|grid");
  });
  r.with("sweep", "values", [&](auto f, auto v) {
    for (const auto& s : split_list(v)) p.values.push_back(to_double(f, s));
  });
  r.with("sweep", "formulation", [&](auto f, auto v) {
    if (v == "spectral") p.formulation = Formulation::Spectral;
    else if (v == "grid") p.formulation = Formulation::Grid;
    else if (v == "both") p.formulation = Formulation::Both;
    else throw PlanError(f + ": expected spectral|grid|both");
  });

  r.with("grid_path", "extended", [&](auto f, auto v) { p.grid_extended = to_bool(f, v); });
  r.with("grid_path", "flux", [&](auto f, auto v) {
    try {
      p.grid_flux = parse_flux_rule(v);
    } catch (const std::invalid_argument& e) {
      throw PlanError(f + ": " + e.what());
    }
  });
  r.with("grid_path", "truncation", [&](auto f, auto v) { p.grid_truncation = static_cast<int>(to_int(f, v)); });
  r.with("grid_path", "dt", [&](auto f, auto v) { p.grid_dt = to_double(f, v); });

  r.with("diagnostics", "thetas", [&](auto f, auto v) {
    p.thetas.clear();
    for (const auto& s : split_list(v)) p.thetas.push_back(to_double(f, s));
  });
  r.with("output", "dir", [&](auto, auto v) { p.out_dir = v; });

  p.validate();
  return p;
}

ExperimentPlan load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw PlanError("cannot open config file " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

}  // namespace shnse

#ifndef OCE_CONFIG_HPP
#define OCE_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "oce/hjbi.hpp"
#include "oce/loss.hpp"
#include "oce/problem.hpp"

namespace oce {

/// Invalid configuration; field() is the JSON path of the offending entry.
class ConfigError : public std::invalid_argument {
public:
  ConfigError(std::string field, const std::string& msg)
      : std::invalid_argument(field + ": " + msg), field_(std::move(field))
  {
  }
  const std::string& field() const { return field_; }

private:
  std::string field_;
};

struct Preset {
  std::string name;
  nlohmann::json params = nlohmann::json::object();
};

struct RunConfig {
  Preset drift{"shifted_control", {{"mu", 0.0}}};
  Preset terminal{"tanh", {{"scale", 1.0}}};
  double sigma = 1.0;
  double control_lo = -1.0, control_hi = 1.0;
  double horizon = 1.0;
  Preset loss{"entropic", nlohmann::json::object()};

  std::size_t n_t = 201, n_y = 201, n_z = 81;
  double y_lo = -6.0, y_hi = 6.0;
  double z_lo = 0.0, z_hi = 8.0;
  double beta_bound = 8.0;
  std::uint64_t seed = 20240601;
  std::string output_dir = "out";

  double y0 = 0.0;                     // evaluation point for oracles and simulation
  std::vector<double> z_checks{0.5, 1.0, 2.0};
  std::size_t paths = 100000, steps = 200;
  std::string suite = "full";

  nlohmann::json source; // the parsed document, echoed into manifests

  ControlProblem problem() const;
  LossSpec loss_spec() const;
  HjbiOptions hjbi_options() const;
  HjbOptions hjb_options() const;
};

namespace detail {

inline double get_number(const nlohmann::json& obj, const std::string& key, const std::string& path, double fallback)
{
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(path + "." + key, "expected a number");
  return v.get<double>();
}

inline std::size_t get_count(const nlohmann::json& obj, const std::string& key, const std::string& path,
                             std::size_t fallback)
{
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) throw ConfigError(path + "." + key, "expected a non-negative integer");
  return v.get<std::size_t>();
}

inline std::pair<double, double> get_pair(const nlohmann::json& obj, const std::string& key, const std::string& path,
                                          std::pair<double, double> fallback)
{
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    throw ConfigError(path + "." + key, "expected [lo, hi]");
  const double lo = v[0].get<double>(), hi = v[1].get<double>();
  if (!(lo <= hi)) throw ConfigError(path + "." + key, "lo must not exceed hi");
  return {lo, hi};
}

inline Preset get_preset(const nlohmann::json& obj, const std::string& key, const std::string& path, Preset fallback)
{
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_object() || !v.contains("name") || !v.at("name").is_string())
    throw ConfigError(path + "." + key, "expected an object with a \"name\" string");
  Preset p{v.at("name").get<std::string>(), v};
  p.params.erase("name");
  for (auto it = p.params.begin(); it != p.params.end(); ++it)
    if (!it->is_number()) throw ConfigError(path + "." + key + "." + it.key(), "expected a number");
  return p;
}

inline double param(const Preset& p, const std::string& key, const std::string& path, std::optional<double> fallback = {})
{
  if (p.params.contains(key)) return p.params.at(key).get<double>();
  if (fallback) return *fallback;
  throw ConfigError(path + "." + key, "missing parameter for preset \"" + p.name + "\"");
}

inline void known_keys(const nlohmann::json& obj, const std::string& path, std::initializer_list<const char*> keys)
{
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : keys) ok = ok || it.key() == k;
    if (!ok) throw ConfigError(path.empty() ? it.key() : path + "." + it.key(), "unknown key");
  }
}

inline const nlohmann::json& section(const nlohmann::json& doc, const std::string& key)
{
  static const nlohmann::json empty = nlohmann::json::object();
  if (!doc.contains(key)) return empty;
  if (!doc.at(key).is_object()) throw ConfigError(key, "expected an object");
  return doc.at(key);
}

inline DriftFn make_drift(const Preset& p, bool& affine)
{
  const std::string path = "problem.drift";
  affine = true;
  if (p.name == "shifted_control") return presets::shifted_control(param(p, "mu", path, 0.0));
  if (p.name == "constant") return presets::constant_drift(param(p, "mu", path, 0.0));
  if (p.name == "affine")
    return presets::affine(param(p, "mu", path, 0.0), param(p, "kappa", path, 0.0), param(p, "gain", path, 1.0));
  throw ConfigError(path + ".name", "unknown drift preset \"" + p.name + "\" (shifted_control, constant, affine)");
}

inline TerminalFn make_terminal(const Preset& p)
{
  const std::string path = "problem.terminal";
  if (p.name == "tanh") return presets::tanh_terminal(param(p, "scale", path, 1.0));
  if (p.name == "constant") return presets::constant(param(p, "c", path));
  if (p.name == "linear") return presets::linear(param(p, "slope", path, 1.0), param(p, "intercept", path, 0.0));
  if (p.name == "clamped_linear")
    return presets::clamped_linear(param(p, "lo", path), param(p, "hi", path), param(p, "slope", path, 1.0));
  if (p.name == "quadratic") return presets::quadratic(param(p, "a", path, 1.0));
  throw ConfigError(path + ".name",
                    "unknown terminal preset \"" + p.name + "\" (tanh, constant, linear, clamped_linear, quadratic)");
}

} // namespace detail

inline LossSpec make_loss(const Preset& loss)
{
  try {
    if (loss.name == "avar") return preset("avar", {detail::param(loss, "gamma", "loss")});
    if (!loss.params.empty()) throw ConfigError("loss", "preset \"" + loss.name + "\" takes no parameters");
    return preset(loss.name);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("loss", e.what());
  }
}

/// The "loss" entry of a document on its own (entropic when absent).
inline LossSpec parse_loss(const nlohmann::json& doc)
{
  return make_loss(detail::get_preset(doc, "loss", "", Preset{"entropic", nlohmann::json::object()}));
}

inline LossSpec RunConfig::loss_spec() const { return make_loss(loss); }

inline ControlProblem RunConfig::problem() const
{
  ControlProblem p;
  p.drift = detail::make_drift(drift, p.drift_affine_in_control);
  p.terminal = detail::make_terminal(terminal);
  p.sigma = {sigma};
  p.control_box = Box::interval(control_lo, control_hi);
  p.horizon = horizon;
  p.y_box = Box::interval(y_lo, y_hi);
  p.z_box = {z_lo, z_hi};
  p.description = "drift " + drift.name + ", terminal " + terminal.name;
  return p;
}

inline HjbiOptions RunConfig::hjbi_options() const
{
  HjbiOptions o;
  o.n_t = n_t;
  o.n_y = n_y;
  o.n_z = n_z;
  o.beta_bound = beta_bound;
  return o;
}

inline HjbOptions RunConfig::hjb_options() const
{
  HjbOptions o;
  o.n_t = n_t;
  o.n_y = n_y;
  return o;
}

/// Parses and validates a run configuration. Missing entries keep their
/// defaults; unknown keys and ill-typed values are errors naming the field.
inline RunConfig parse_config(const nlohmann::json& doc)
{
  using namespace detail;
  if (!doc.is_object()) throw ConfigError("<root>", "expected a JSON object");
  known_keys(doc, "", {"problem", "loss", "grids", "beta_bound", "seed", "output_dir", "start", "simulate", "validate"});
  RunConfig c;
  c.source = doc;

  const auto& pr = section(doc, "problem");
  known_keys(pr, "problem", {"drift", "terminal", "sigma", "control_box", "horizon"});
  c.drift = get_preset(pr, "drift", "problem", c.drift);
  c.terminal = get_preset(pr, "terminal", "problem", c.terminal);
  c.sigma = get_number(pr, "sigma", "problem", c.sigma);
  std::tie(c.control_lo, c.control_hi) = get_pair(pr, "control_box", "problem", {c.control_lo, c.control_hi});
  c.horizon = get_number(pr, "horizon", "problem", c.horizon);
  if (!(c.sigma > 0.0)) throw ConfigError("problem.sigma", "must be positive");
  if (!(c.horizon > 0.0)) throw ConfigError("problem.horizon", "must be positive");

  c.loss = get_preset(doc, "loss", "", c.loss);
  const LossSpec spec = c.loss_spec();

  const auto& gr = section(doc, "grids");
  known_keys(gr, "grids", {"n_t", "n_y", "n_z", "y_box", "z_box"});
  c.n_t = get_count(gr, "n_t", "grids", c.n_t);
  c.n_y = get_count(gr, "n_y", "grids", c.n_y);
  c.n_z = get_count(gr, "n_z", "grids", c.n_z);
  for (auto [name, n] : {std::pair{"n_t", c.n_t}, {"n_y", c.n_y}, {"n_z", c.n_z}})
    if (n < 3) throw ConfigError(std::string("grids.") + name, "need at least 3 nodes");
  std::tie(c.y_lo, c.y_hi) = get_pair(gr, "y_box", "grids", {c.y_lo, c.y_hi});
  std::tie(c.z_lo, c.z_hi) = get_pair(gr, "z_box", "grids", {c.z_lo, c.z_hi});
  if (!(c.y_lo < c.y_hi)) throw ConfigError("grids.y_box", "must have positive width");
  if (!(c.z_lo < c.z_hi)) throw ConfigError("grids.z_box", "must have positive width");
  if (!spec.in_domain(c.z_lo) || !spec.in_domain(c.z_hi))
    throw ConfigError("grids.z_box", "must lie inside dom l* = [" + std::to_string(spec.conj_domain.lo) + ", "
                                          + std::to_string(spec.conj_domain.hi) + "] for loss \"" + spec.name + "\"");

  c.beta_bound = get_number(doc, "beta_bound", "", c.beta_bound);
  if (!(c.beta_bound > 0.0)) throw ConfigError("beta_bound", "must be positive");
  if (doc.contains("seed")) {
    if (!doc.at("seed").is_number_unsigned()) throw ConfigError("seed", "expected a non-negative integer");
    c.seed = doc.at("seed").get<std::uint64_t>();
  }
  if (doc.contains("output_dir")) {
    if (!doc.at("output_dir").is_string()) throw ConfigError("output_dir", "expected a string");
    c.output_dir = doc.at("output_dir").get<std::string>();
  }

  const auto& st = section(doc, "start");
  known_keys(st, "start", {"y", "z_checks"});
  c.y0 = get_number(st, "y", "start", c.y0);
  if (!(c.y0 >= c.y_lo && c.y0 <= c.y_hi)) throw ConfigError("start.y", "outside grids.y_box");
  if (st.contains("z_checks")) {
    const auto& zs = st.at("z_checks");
    if (!zs.is_array()) throw ConfigError("start.z_checks", "expected an array of numbers");
    c.z_checks.clear();
    for (const auto& z : zs) {
      if (!z.is_number()) throw ConfigError("start.z_checks", "expected an array of numbers");
      c.z_checks.push_back(z.get<double>());
      if (!(c.z_checks.back() >= c.z_lo && c.z_checks.back() <= c.z_hi))
        throw ConfigError("start.z_checks", "entries must lie inside grids.z_box");
    }
  }

  const auto& sim = section(doc, "simulate");
  known_keys(sim, "simulate", {"paths", "steps"});
  c.paths = get_count(sim, "paths", "simulate", c.paths);
  c.steps = get_count(sim, "steps", "simulate", c.steps);
  if (c.paths < 20) throw ConfigError("simulate.paths", "need at least 20 paths");
  if (c.steps < 1) throw ConfigError("simulate.steps", "need at least one step");

  const auto& va = section(doc, "validate");
  known_keys(va, "validate", {"suite"});
  if (va.contains("suite")) {
    if (!va.at("suite").is_string()) throw ConfigError("validate.suite", "expected a string");
    c.suite = va.at("suite").get<std::string>();
    if (c.suite != "full" && c.suite != "structural" && c.suite != "oracles")
      throw ConfigError("validate.suite", "unknown suite \"" + c.suite + "\" (full, structural, oracles)");
  }

  (void)c.problem(); // preset parameters are checked here
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("--config", std::string("malformed JSON: ") + e.what());
  }
  return parse_config(doc);
}

} // namespace oce

#endif // OCE_CONFIG_HPP

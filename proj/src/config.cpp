#include "polaron/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <openssl/evp.h>

#include "polaron/errors.hpp"

namespace polaron {

const std::vector<ConfigKey>& config_schema() {
  using K = ValueKind;
  static const std::vector<ConfigKey> schema = {
      {"grid.L", "auto", K::real_or_auto, "box length; auto runs the doubling certificate"},
      {"grid.N", "auto", K::integer_or_auto, "points per axis; auto together with grid.L"},
      {"grid.start_L", "640", K::real, "first certificate stage"},
      {"grid.start_N", "32", K::integer, "first certificate stage"},
      {"grid.certify_tol", "1e-6", K::real, "relative change of the box-corrected e_P between stages"},
      {"grid.max_doublings", "3", K::integer, "certificate stages after the first"},
      {"radial.dr", "0.05", K::real, "radial step at coupling 1"},
      {"radial.R", "800", K::real, "radial domain at coupling 1"},
      {"radial.tol", "1e-13", K::real, "relative energy change"},
      {"radial.density_tol", "1e-11", K::real, "relative density change"},
      {"radial.max_iter", "500", K::integer, "self-consistency iterations"},
      {"radial.mixing", "1", K::real, "phonon mixing in (0, 1]"},
      {"radial.coupling_scale", "1", K::real, "multiplies the Coulomb coefficient"},
      {"pekar.polish", "on", K::flag, "relax the lifted state on the grid"},
      {"pekar.snapshots", "on", K::flag, "binary snapshots of psi_P and phi_P"},
      {"pekar.hessian_count", "4", K::integer, "lowest Hessian eigenvalues; 0 skips"},
      {"pekar.hessian_tol", "1e-9", K::real, "absolute eigen residual"},
      {"pekar.hessian_L", "1280", K::real, "Hessian grid"},
      {"pekar.hessian_N", "64", K::integer, "Hessian grid"},
      {"pekar.hessian_refine_N", "80", K::integer, "refined Hessian grid; 0 skips"},
      {"mass.alpha", "0,1,2,4", K::real_list, "couplings"},
      {"mass.v", "auto", K::real_list_or_auto, "velocities; auto is {0.5,1,2,4}% of 1/(2 sqrt(q))"},
      {"mass.admissibility_tol", "1e-8", K::real, "velocity residual"},
      {"mass.minimize", "off", K::flag, "constrained minimization for alpha > 0"},
      {"mass.minimize_budget", "400", K::integer, "descent iterations"},
      {"mass.minimize_L", "640", K::real, "minimization grid"},
      {"mass.minimize_N", "32", K::integer, "minimization grid"},
      {"tw.alpha", "0,1,2", K::real_list, "couplings"},
      {"dynamics.L", "640", K::real, "box length"},
      {"dynamics.N", "32", K::integer, "points per axis"},
      {"dynamics.alpha", "1", K::real, "coupling"},
      {"dynamics.initial", "stationary", K::choice, "initial state", {"stationary", "trial"}},
      {"dynamics.v", "0", K::real, "trial velocity for initial = trial"},
      {"dynamics.dt", "auto", K::real_or_auto, "time step; auto is min(1e-3, alpha^2/50)"},
      {"dynamics.T", "10", K::real, "final time"},
      {"dynamics.cadence", "100", K::integer, "steps between samples"},
      {"dynamics.radii", "100,200", K::real_list, "radiation diagnostic radii"},
      {"dynamics.mask", "off", K::flag, "absorbing layer at the box edge"},
      {"dynamics.mask_band", "0.15", K::real, "absorbing fraction of each half box"},
      {"dynamics.mask_rate", "0.05", K::real, "absorbing rate"},
      {"dynamics.snapshots", "off", K::flag, "initial and final field snapshots"},
      {"dynamics.drift_tol", "1e-8", K::real, "relative energy drift"},
      {"damping.v", "0,0.002", K::real_list, "boost velocities; 0 is the control"},
      {"damping.T", "20", K::real, "final time"},
      {"damping.cadence", "100", K::integer, "steps between samples"},
      {"damping.control_tol", "1e-8", K::real, "velocity bound for the v = 0 control"},
      {"run.seed", "20240607", K::integer, "randomized diagnostics"},
      {"run.out", "out", K::text, "output directory"},
      {"run.checks", "on", K::flag, "evaluate pass/fail checks"},
  };
  return schema;
}

namespace {

const ConfigKey& lookup(const std::string& key) {
  for (const ConfigKey& k : config_schema())
    if (k.key == key) return k;
  throw ConfigError("unknown configuration key '" + key + "'", key);
}

double parse_real(const std::string& key, const std::string& s) {
  std::string t = boost::algorithm::trim_copy(s);
  std::size_t pos = 0;
  double x = 0;
  try {
    x = std::stod(t, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (t.empty() || pos != t.size() || !std::isfinite(x))
    throw ConfigError("key '" + key + "': '" + s + "' is not a real number", key);
  return x;
}

int parse_int(const std::string& key, const std::string& s) {
  std::string t = boost::algorithm::trim_copy(s);
  std::size_t pos = 0;
  long x = 0;
  try {
    x = std::stol(t, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (t.empty() || pos != t.size()) throw ConfigError("key '" + key + "': '" + s + "' is not an integer", key);
  return int(x);
}

bool is_auto_text(const std::string& s) { return boost::algorithm::trim_copy(s) == "auto"; }

std::vector<double> parse_list(const std::string& key, const std::string& s) {
  std::vector<double> out;
  std::string t = boost::algorithm::trim_copy(s);
  if (t.empty()) return out;
  std::vector<std::string> parts;
  boost::algorithm::split(parts, t, boost::is_any_of(","));
  for (const std::string& p : parts) out.push_back(parse_real(key, p));
  return out;
}

bool parse_flag(const std::string& key, const std::string& s) {
  std::string t = boost::algorithm::to_lower_copy(boost::algorithm::trim_copy(s));
  if (t == "on" || t == "true" || t == "yes" || t == "1") return true;
  if (t == "off" || t == "false" || t == "no" || t == "0") return false;
  throw ConfigError("key '" + key + "': '" + s + "' is not on/off", key);
}

void check_value(const ConfigKey& k, const std::string& s) {
  switch (k.kind) {
    case ValueKind::real: parse_real(k.key, s); break;
    case ValueKind::integer: parse_int(k.key, s); break;
    case ValueKind::real_or_auto:
      if (!is_auto_text(s)) parse_real(k.key, s);
      break;
    case ValueKind::integer_or_auto:
      if (!is_auto_text(s)) parse_int(k.key, s);
      break;
    case ValueKind::real_list: parse_list(k.key, s); break;
    case ValueKind::real_list_or_auto:
      if (!is_auto_text(s)) parse_list(k.key, s);
      break;
    case ValueKind::flag: parse_flag(k.key, s); break;
    case ValueKind::choice:
      if (std::find(k.choices.begin(), k.choices.end(), boost::algorithm::trim_copy(s)) == k.choices.end())
        throw ConfigError("key '" + k.key + "': '" + s + "' is not one of " + boost::algorithm::join(k.choices, "|"),
                          k.key);
      break;
    case ValueKind::text:
      if (boost::algorithm::trim_copy(s).empty()) throw ConfigError("key '" + k.key + "' is empty", k.key);
      break;
  }
}

}  // namespace

RunConfig RunConfig::defaults() {
  RunConfig c;
  for (const ConfigKey& k : config_schema()) c.values_[k.key] = k.fallback;
  return c;
}

RunConfig RunConfig::from_file(const std::string& path) {
  RunConfig c = defaults();
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open configuration file " + path, "<file>");
  if (boost::algorithm::ends_with(path, ".json")) {
    nlohmann::json j;
    try {
      is >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("manifest is not valid JSON: ") + e.what(), "<file>");
    }
    if (!j.contains("config") || !j["config"].is_object())
      throw ConfigError("manifest has no config object", "config");
    for (auto& [section, body] : j["config"].items()) {
      if (!body.is_object()) throw ConfigError("config section '" + section + "' is not an object", section);
      for (auto& [name, value] : body.items()) {
        if (!value.is_string())
          throw ConfigError("key '" + section + "." + name + "' must be a string", section + "." + name);
        c.set(section + "." + name, value.get<std::string>());
      }
    }
    return c;
  }
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(is, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("line " + std::to_string(e.line()) + ": " + e.message(), "line " + std::to_string(e.line()));
  }
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw ConfigError("key '" + section + "' appears outside a section", section);
    for (const auto& [name, value] : body) c.set(section + "." + name, value.data());
  }
  return c;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const ConfigKey& k = lookup(key);
  check_value(k, value);
  std::string v = boost::algorithm::trim_copy(value);
  if (k.kind == ValueKind::real_list || (k.kind == ValueKind::real_list_or_auto && !is_auto_text(v))) {
    std::vector<std::string> parts;
    boost::algorithm::split(parts, v, boost::algorithm::is_any_of(","));
    for (auto& part : parts) boost::algorithm::trim(part);
    v = boost::algorithm::join(parts, ",");
  }
  values_[key] = v;
}

void RunConfig::set_assignment(const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not key=value", assignment);
  set(boost::algorithm::trim_copy(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

const std::string& RunConfig::str(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown configuration key '" + key + "'", key);
  return it->second;
}

double RunConfig::real(const std::string& key) const { return parse_real(key, str(key)); }
int RunConfig::integer(const std::string& key) const { return parse_int(key, str(key)); }
bool RunConfig::flag(const std::string& key) const { return parse_flag(key, str(key)); }
bool RunConfig::is_auto(const std::string& key) const { return is_auto_text(str(key)); }
std::vector<double> RunConfig::reals(const std::string& key) const { return parse_list(key, str(key)); }

void RunConfig::validate() const {
  for (const ConfigKey& k : config_schema()) check_value(k, str(k.key));
  if (!(real("radial.coupling_scale") > 0))
    throw ConfigError("key 'radial.coupling_scale' must be positive", "radial.coupling_scale");
  if (!(real("radial.dr") > 0)) throw ConfigError("key 'radial.dr' must be positive", "radial.dr");
  if (!(real("radial.R") > real("radial.dr"))) throw ConfigError("key 'radial.R' must exceed radial.dr", "radial.R");
  if (is_auto("grid.L") != is_auto("grid.N"))
    throw ConfigError("keys 'grid.L' and 'grid.N' must both be auto or both be set", "grid.N");
  if (!is_auto("grid.N") && integer("grid.N") < 8) throw ConfigError("key 'grid.N' must be at least 8", "grid.N");
  if (integer("dynamics.cadence") < 1) throw ConfigError("key 'dynamics.cadence' must be positive", "dynamics.cadence");
  if (integer("damping.cadence") < 1) throw ConfigError("key 'damping.cadence' must be positive", "damping.cadence");
  if (!(real("dynamics.T") > 0)) throw ConfigError("key 'dynamics.T' must be positive", "dynamics.T");
  if (!is_auto("dynamics.dt") && !(real("dynamics.dt") > 0))
    throw ConfigError("key 'dynamics.dt' must be positive", "dynamics.dt");
}

std::string RunConfig::canonical() const {
  std::map<std::string, std::map<std::string, std::string>> sections;
  for (const auto& [key, value] : values_) {
    if (key == "run.out") continue;
    auto dot = key.find('.');
    sections[key.substr(0, dot)][key.substr(dot + 1)] = value;
  }
  std::ostringstream os;
  for (const auto& [section, body] : sections) {
    os << '[' << section << "]\n";
    for (const auto& [name, value] : body) os << name << " = " << value << '\n';
  }
  return os.str();
}

std::string git_blob_sha1(const std::string& content) {
  std::string blob = "blob " + std::to_string(content.size());
  blob.push_back('\0');
  blob += content;
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(blob.data(), blob.size(), md, &len, EVP_sha1(), nullptr)) throw Error("SHA-1 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

std::string RunConfig::hash() const { return git_blob_sha1(canonical()); }

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [key, value] : values_) {
    auto dot = key.find('.');
    j[key.substr(0, dot)][key.substr(dot + 1)] = value;
  }
  return j;
}

}  // namespace polaron

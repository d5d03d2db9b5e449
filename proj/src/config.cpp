#include "fpedge/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "fpedge/error.hpp"

namespace fpedge {
namespace {

const ConfigKey* find_key(const std::string& name) {
  for (const auto& k : config_keys())
    if (k.name == name) return &k;
  return nullptr;
}

std::vector<double> default_params(const std::string& tag) {
  if (tag == "semicircle") return {1.0};
  if (tag == "uniform" || tag == "arcsine") return {-1.0, 1.0};
  if (tag == "point_mass") return {0.0};
  throw ConfigError("measure tag '" + tag + "' needs explicit params");
}

void apply_command_defaults(RunConfig& rc) {
  ExperimentConfig& e = rc.experiment;
  const std::string& c = rc.command;
  auto both = [&](const std::string& tag) {
    e.measure1 = {tag, default_params(tag), {}};
    e.measure2 = e.measure1;
  };
  if (c == "convolve" || c == "edge") {
    both("semicircle");
    e.t = 0.0;
  } else if (c == "sample") {
    both("uniform");
    e.n = 300;
    e.n_samples = 10;
  } else if (c == "verify-tw") {
    both("point_mass");
    e.t = 1.0;
    e.n = 400;
    e.n_samples = 2000;
    e.ks_threshold = 0.05;
  } else if (c == "verify-local-law") {
    both("uniform");
    e.sizes = {250, 500, 1000};
    e.n_samples = 20;
  } else if (c == "verify-rigidity") {
    both("point_mass");
    e.t = 1.0;
    e.n = 1000;
    e.top_k = 100;
    e.n_samples = 50;
  } else if (c == "verify-dbm") {
    both("uniform");
    e.n = 300;
    e.chi = 0.1;
    e.n_samples = 1000;
    e.ks_threshold = 0.08;
  }
}

double as_number(const nlohmann::json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError("config key '" + key + "' expects a number");
  return v.get<double>();
}

long long as_integer(const nlohmann::json& v, const std::string& key) {
  if (v.is_number_integer()) return v.get<long long>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::floor(d) == d && std::abs(d) < 9e15) return static_cast<long long>(d);
  }
  throw ConfigError("config key '" + key + "' expects an integer");
}

std::size_t as_count(const nlohmann::json& v, const std::string& key) {
  const long long x = as_integer(v, key);
  if (x < 0) throw ConfigError("config key '" + key + "' must be nonnegative");
  return static_cast<std::size_t>(x);
}

std::vector<double> as_numbers(const nlohmann::json& v, const std::string& key) {
  if (v.is_number()) return {v.get<double>()};
  if (!v.is_array()) throw ConfigError("config key '" + key + "' expects an array of numbers");
  std::vector<double> out;
  for (const auto& x : v) out.push_back(as_number(x, key));
  return out;
}

std::vector<std::size_t> as_counts(const nlohmann::json& v, const std::string& key) {
  if (!v.is_array()) return {as_count(v, key)};
  std::vector<std::size_t> out;
  for (const auto& x : v) out.push_back(as_count(x, key));
  return out;
}

std::string as_string(const nlohmann::json& v, const std::string& key) {
  if (!v.is_string()) throw ConfigError("config key '" + key + "' expects a string");
  return v.get<std::string>();
}

void flatten_into(const nlohmann::json& j, const std::string& prefix, nlohmann::json& out) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (it->is_object())
      flatten_into(*it, key, out);
    else
      out[key] = *it;
  }
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys{
      {"command", KeyType::string, "command to run"},
      {"output_dir", KeyType::string, "directory for CSV and JSON outputs"},
      {"seed", KeyType::integer, "master random seed"},
      {"workers", KeyType::integer, "worker threads for Monte Carlo loops"},
      {"measure1.tag", KeyType::string, "semicircle | uniform | arcsine | point_mass | atoms | grid"},
      {"measure1.params", KeyType::number_array, "family parameters, atom locations or grid nodes"},
      {"measure1.extra", KeyType::number_array, "atom weights or grid density values"},
      {"measure2.tag", KeyType::string, "as measure1.tag"},
      {"measure2.params", KeyType::number_array, "as measure1.params"},
      {"measure2.extra", KeyType::number_array, "as measure1.extra"},
      {"t", KeyType::number, "variance of the semicircle component"},
      {"n", KeyType::integer, "matrix dimension"},
      {"n_samples", KeyType::integer, "Monte Carlo sample count"},
      {"sizes", KeyType::integer_array, "matrix dimensions for the local law experiment"},
      {"tol", KeyType::number, "subordination solver tolerance"},
      {"max_iter", KeyType::integer, "subordination solver iteration cap"},
      {"grid.lo", KeyType::number, "density grid lower end"},
      {"grid.hi", KeyType::number, "density grid upper end"},
      {"grid.points", KeyType::integer, "density grid size"},
      {"eta", KeyType::number_array, "decreasing imaginary parts for Stieltjes inversion"},
      {"ks_threshold", KeyType::number, "pass threshold for KS distances"},
      {"eta_exponent", KeyType::number, "local law probe uses eta = n^-eta_exponent"},
      {"chi", KeyType::number, "flow time t0 = n^(-1/3 + chi)"},
      {"top_k", KeyType::integer, "eigenvalues entering the rigidity statistic"},
      {"rigidity_threshold", KeyType::number, "pass threshold for the rigidity percentile"},
      {"theory", KeyType::string, "empirical (atoms of A, B) | limit (measure1, measure2)"},
      {"tw.order", KeyType::integer, "Gauss-Legendre nodes of the Fredholm discretization"},
      {"tw.cap", KeyType::number, "length of the truncated integration interval"},
      {"tw.lo", KeyType::number, "tabulation start"},
      {"tw.hi", KeyType::number, "tabulation end"},
      {"tw.step", KeyType::number, "tabulation step"},
      {"sample.k", KeyType::integer, "leading eigenvalues written per sample"},
      {"decompose.n", KeyType::integer, "unitary dimension for decompose-check"},
      {"decompose.pairs", KeyType::integer, "random (U, i) pairs for decompose-check"},
  };
  return keys;
}

const std::vector<std::pair<std::string, std::string>>& commands() {
  static const std::vector<std::pair<std::string, std::string>> list{
      {"convolve", "density of mu1 [+] mu2 [+] sc(t) on a grid, plus the edge report"},
      {"edge", "upper edge, gamma and subordination values at the edge"},
      {"tabulate-tw", "table of the GUE Tracy-Widom CDF"},
      {"sample", "leading eigenvalues of A + U B U* + sqrt(t) W"},
      {"verify-tw", "rescaled largest eigenvalue against Tracy-Widom (one-sample KS)"},
      {"verify-local-law", "resolvent entries against subordination predictions over several n"},
      {"verify-rigidity", "top eigenvalues against classical locations"},
      {"verify-dbm", "rescaled largest eigenvalue before and after a short matrix flow (two-sample KS)"},
      {"decompose-check", "algebraic identities of the partial randomness decomposition"},
  };
  return list;
}

nlohmann::json flatten(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config root must be an object");
  nlohmann::json out = nlohmann::json::object();
  flatten_into(j, "", out);
  return out;
}

nlohmann::json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file '" + path + "': " + e.what());
  }
  return flatten(j);
}

nlohmann::json parse_value(const ConfigKey& key, const std::string& text) {
  auto number = [&](const std::string& s) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != s.size()) throw ConfigError("--" + key.name + ": '" + s + "' is not a number");
    return v;
  };
  auto integer = [&](const std::string& s) {
    std::size_t pos = 0;
    long long v = 0;
    try {
      v = std::stoll(s, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != s.size()) throw ConfigError("--" + key.name + ": '" + s + "' is not an integer");
    return v;
  };
  auto split = [&](const std::string& s) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item.erase(0, item.find_first_not_of(" \t"));
      item.erase(item.find_last_not_of(" \t") + 1);
      if (!item.empty()) parts.push_back(item);
    }
    return parts;
  };
  switch (key.type) {
    case KeyType::string:
      return text;
    case KeyType::integer:
      return integer(text);
    case KeyType::number:
      return number(text);
    case KeyType::number_array: {
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& p : split(text)) arr.push_back(number(p));
      return arr;
    }
    case KeyType::integer_array: {
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& p : split(text)) arr.push_back(integer(p));
      return arr;
    }
  }
  return nullptr;
}

RunConfig resolve_config(const nlohmann::json& flat) {
  if (!flat.is_object()) throw ConfigError("config must be an object");
  for (auto it = flat.begin(); it != flat.end(); ++it)
    if (!find_key(it.key())) throw ConfigError("unknown config key '" + it.key() + "'");

  RunConfig rc;
  if (!flat.contains("command")) throw ConfigError("no command given");
  rc.command = as_string(flat.at("command"), "command");
  const auto& cmds = commands();
  if (std::none_of(cmds.begin(), cmds.end(), [&](const auto& c) { return c.first == rc.command; }))
    throw ConfigError("unknown command '" + rc.command + "'");
  apply_command_defaults(rc);
  ExperimentConfig& e = rc.experiment;

  auto get = [&](const char* key) -> const nlohmann::json* {
    auto it = flat.find(key);
    return it == flat.end() ? nullptr : &*it;
  };

  if (auto v = get("output_dir")) rc.output_dir = as_string(*v, "output_dir");
  if (auto v = get("seed")) {
    const long long s = as_integer(*v, "seed");
    if (s < 0) throw ConfigError("seed must be nonnegative");
    e.seed = static_cast<std::uint64_t>(s);
  }
  if (auto v = get("workers")) {
    const std::size_t w = as_count(*v, "workers");
    if (w < 1 || w > 1024) throw ConfigError("workers must lie in [1, 1024]");
    e.workers = static_cast<unsigned>(w);
  }
  for (int which = 1; which <= 2; ++which) {
    MeasureSpec& m = which == 1 ? e.measure1 : e.measure2;
    const std::string p = "measure" + std::to_string(which) + ".";
    const auto tag = get((p + "tag").c_str());
    const auto params = get((p + "params").c_str());
    const auto extra = get((p + "extra").c_str());
    if (tag) {
      m.tag = as_string(*tag, p + "tag");
      if (!params) m.params = default_params(m.tag);
      m.extra.clear();
    }
    if (params) m.params = as_numbers(*params, p + "params");
    if (extra) m.extra = as_numbers(*extra, p + "extra");
  }
  if (auto v = get("t")) e.t = as_number(*v, "t");
  if (auto v = get("n")) e.n = as_count(*v, "n");
  if (auto v = get("n_samples")) e.n_samples = as_count(*v, "n_samples");
  if (auto v = get("sizes")) e.sizes = as_counts(*v, "sizes");
  if (auto v = get("tol")) rc.tol = as_number(*v, "tol");
  if (auto v = get("max_iter")) {
    const long long m = as_integer(*v, "max_iter");
    if (m < 1 || m > std::numeric_limits<int>::max()) throw ConfigError("max_iter out of range");
    rc.max_iter = static_cast<int>(m);
  }
  if (auto v = get("grid.lo")) rc.grid_lo = as_number(*v, "grid.lo");
  if (auto v = get("grid.hi")) rc.grid_hi = as_number(*v, "grid.hi");
  if (auto v = get("grid.points")) rc.grid_points = as_count(*v, "grid.points");
  if (auto v = get("eta")) rc.eta = as_numbers(*v, "eta");
  if (auto v = get("ks_threshold")) e.ks_threshold = as_number(*v, "ks_threshold");
  if (auto v = get("eta_exponent")) e.eta_exponent = as_number(*v, "eta_exponent");
  if (auto v = get("chi")) e.chi = as_number(*v, "chi");
  if (auto v = get("top_k")) e.top_k = as_count(*v, "top_k");
  if (auto v = get("rigidity_threshold")) e.rigidity_threshold = as_number(*v, "rigidity_threshold");
  if (auto v = get("theory")) e.theory = as_string(*v, "theory");
  if (auto v = get("tw.order")) {
    const long long o = as_integer(*v, "tw.order");
    if (o < 20 || o > 400) throw ConfigError("tw.order must lie in [20, 400]");
    e.tw_order = static_cast<int>(o);
  }
  if (auto v = get("tw.cap")) e.tw_cap = as_number(*v, "tw.cap");
  if (auto v = get("tw.lo")) rc.tw_lo = as_number(*v, "tw.lo");
  if (auto v = get("tw.hi")) rc.tw_hi = as_number(*v, "tw.hi");
  if (auto v = get("tw.step")) rc.tw_step = as_number(*v, "tw.step");
  if (auto v = get("sample.k")) rc.sample_k = as_count(*v, "sample.k");
  if (auto v = get("decompose.n")) rc.decompose_n = as_count(*v, "decompose.n");
  if (auto v = get("decompose.pairs")) rc.decompose_pairs = as_count(*v, "decompose.pairs");

  validate(e);
  if (!(rc.tol >= 1e-14 && rc.tol < 1.0)) throw ConfigError("tol must lie in [1e-14, 1)");
  if (rc.grid_points < 2) throw ConfigError("grid.points must be at least 2");
  if (rc.grid_lo && rc.grid_hi && !(*rc.grid_hi > *rc.grid_lo)) throw ConfigError("grid.hi must exceed grid.lo");
  if (rc.eta.empty()) throw ConfigError("eta must not be empty");
  for (std::size_t k = 0; k < rc.eta.size(); ++k) {
    if (!(rc.eta[k] > 0.0)) throw ConfigError("eta values must be positive");
    if (k && !(rc.eta[k] < rc.eta[k - 1])) throw ConfigError("eta values must decrease");
  }
  if (!(rc.tw_lo >= -12.0 && rc.tw_hi <= 8.0 && rc.tw_hi >= rc.tw_lo))
    throw ConfigError("tabulation range must lie within [-12, 8]");
  if (!(rc.tw_step > 0.0)) throw ConfigError("tw.step must be positive");
  if (rc.sample_k < 1) throw ConfigError("sample.k must be at least 1");
  if (rc.decompose_n < 1) throw ConfigError("decompose.n must be at least 1");
  if (rc.decompose_pairs < 1) throw ConfigError("decompose.pairs must be at least 1");
  return rc;
}

std::string usage_text() {
  std::ostringstream os;
  os << "Commands:\n";
  for (const auto& [name, help] : commands()) os << "  " << name << std::string(20 - std::min<std::size_t>(19, name.size()), ' ') << help << '\n';
  os << "\nConfig keys (JSON file via --config, each overridable as --key=value; arrays comma separated):\n";
  for (const auto& k : config_keys())
    os << "  " << k.name << std::string(22 - std::min<std::size_t>(21, k.name.size()), ' ') << k.help << '\n';
  return os.str();
}

}  // namespace fpedge

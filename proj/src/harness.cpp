#include "tel/harness.hpp"

#include <openssl/evp.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

#include "tel/entropy.hpp"
#include "tel/resistance.hpp"
#include "tel/spanning.hpp"

namespace tel {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kFamilies = {"Z",     "Z2",    "regular_tree", "spherical_tree", "pgw", "heavy_tail_Z",
                                            "random_weight_Z", "torus", "cycle", "complete", "path", "random_regular"};
const std::vector<std::string> kConvergeFamilies = {"torus", "cycle", "complete", "path", "random_regular"};
const std::vector<std::string> kMethods = {"series", "resistance", "closed_form", "spectral"};
const std::vector<std::string> kCouplings = {"weight_scaling", "z_in_z2", "z_in_tree", "tree_in_tree", "loop",
                                             "random_Z"};

bool contains(const std::vector<std::string>& list, const std::string& x) {
  return std::find(list.begin(), list.end(), x) != list.end();
}

std::string join(const std::vector<std::string>& list) {
  std::string out;
  for (const auto& x : list) out += (out.empty() ? "" : ", ") + x;
  return out;
}

const ConfigKey* find_key(const std::string& name) {
  for (const auto& k : config_schema()) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

const char* type_name(ConfigType t) {
  switch (t) {
    case ConfigType::string: return "a string";
    case ConfigType::integer: return "an integer";
    case ConfigType::real: return "a number";
    case ConfigType::boolean: return "true or false";
    case ConfigType::int_list: return "a list of integers";
    case ConfigType::real_list: return "a list of numbers";
  }
  return "?";
}

// Checks the JSON type against the schema; reals are stored as doubles so
// that `1` and `1.0` hash alike.
std::optional<json> conform(ConfigType t, const json& v) {
  switch (t) {
    case ConfigType::string:
      if (v.is_string()) return std::optional<json>(v);
      break;
    case ConfigType::integer:
      if (v.is_number_integer()) return std::optional<json>(v);
      break;
    case ConfigType::real:
      if (v.is_number()) return json(v.get<double>());
      break;
    case ConfigType::boolean:
      if (v.is_boolean()) return std::optional<json>(v);
      break;
    case ConfigType::int_list:
      if (v.is_array() && std::all_of(v.begin(), v.end(), [](const json& x) { return x.is_number_integer(); })) {
        return std::optional<json>(v);
      }
      break;
    case ConfigType::real_list:
      if (v.is_array() && std::all_of(v.begin(), v.end(), [](const json& x) { return x.is_number(); })) {
        json out = json::array();
        for (const auto& x : v) out.push_back(x.get<double>());
        return out;
      }
      break;
  }
  return std::nullopt;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

// A '#' outside a quoted string starts a comment.
std::string strip_comment(const std::string& line) {
  bool quoted = false, escaped = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (escaped) escaped = false;
      else if (c == '\\') escaped = true;
      else if (c == '"') quoted = false;
    } else if (c == '"') {
      quoted = true;
    } else if (c == '#') {
      return line.substr(0, i);
    }
  }
  return line;
}

std::string sha1_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha1(), nullptr) != 1) {
    throw std::runtime_error("SHA-1 digest failed");
  }
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

std::string git_blob_hash(const std::string& content) {
  return sha1_hex("blob " + std::to_string(content.size()) + '\0' + content);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---- building inputs ------------------------------------------------------------

json distribution_descriptor(const ExperimentConfig& c) {
  const auto seed = static_cast<std::uint64_t>(c.get_or<std::int64_t>("seed", 0));
  if (c.has("graph")) {
    return {{"family", "graph_file"}, {"params", {{"path", c.at("graph")}}}, {"seed", seed}};
  }
  const std::string family = c.at("family").get<std::string>();
  json params = json::object();
  for (const char* key : {"n", "mean", "weight", "conditioning", "branching", "root_loop", "lo", "hi", "boost",
                          "extra_edge_prob", "extra_weight"}) {
    if (c.has(key)) params[key] = c.at(key);
  }
  if (c.has("degree")) params[family == "random_regular" ? "d" : "degree"] = c.at("degree");
  return {{"family", family}, {"params", params}, {"seed", seed}};
}

DistributionPtr build_distribution(const ExperimentConfig& c) {
  return distribution_from_descriptor(distribution_descriptor(c));
}

WeightedMultigraph converge_member(const ExperimentConfig& c, int n) {
  const std::string family = c.at("family").get<std::string>();
  if (family == "torus") return families::torus(n);
  if (family == "cycle") return families::cycle(n);
  if (family == "complete") return families::complete(n);
  if (family == "path") return families::path(n);
  const auto seed = static_cast<std::uint64_t>(c.get_or<std::int64_t>("seed", 0));
  return families::random_regular(c.at("degree").get<int>(), n, derive_seed(seed, static_cast<std::uint64_t>(n)));
}

std::vector<double> s_grid(const ExperimentConfig& c, double lo, double hi, int points) {
  return log_grid(c.get_or("s_min", lo), c.get_or("s_max", hi), c.get_or("s_points", points));
}

ResistanceOptions resistance_options(const ExperimentConfig& c, double tol) {
  ResistanceOptions o;
  o.tol = c.get_or("tol", tol);
  o.max_radius = c.get_or("max_radius", o.max_radius);
  o.solver = c.get_or<std::string>("solver", "direct") == "cg" ? SolverKind::conjugate_gradient : SolverKind::direct;
  return o;
}

CoupledPair build_coupling(const ExperimentConfig& c) {
  const std::string name = c.at("coupling").get<std::string>();
  if (name == "weight_scaling") return coupled_weight_scaling(build_distribution(c), c.at("factor").get<double>());
  if (name == "z_in_z2") return coupled_z_in_z2();
  if (name == "z_in_tree") return coupled_z_in_tree(c.get_or("degree", 3));
  if (name == "tree_in_tree") return coupled_tree_in_tree(c.at("degree").get<int>(), c.at("degree_high").get<int>());
  if (name == "loop") return loop_counterexample_pair(c.get_or("degree", 20));
  RandomZParams low, high;
  high.boost = c.get_or("boost", 0.5);
  high.extra_edge_prob = c.get_or("extra_edge_prob", 0.0);
  high.extra_weight = c.get_or("extra_weight", 1.0);
  return coupled_random_Z(low, high, static_cast<std::uint64_t>(c.get_or<std::int64_t>("seed", 0)));
}

// ---- commands -------------------------------------------------------------------

struct Outcome {
  json outputs;
  std::optional<int> peak_radius;
};

Outcome run_tau(const ExperimentConfig& c) {
  const RootedGraph g = load_graph(c.at("graph").get<std::string>());
  json out = {{"vertices", g.vertex_count()}, {"edges", g.graph.edge_count()}};
  try {
    TauOptions o;
    o.exact = c.get_or("exact", false);
    const TreeCount t = tau(g.graph, o);
    out["log_tau"] = t.log_value;
    if (t.exact) out["exact"] = t.exact->get_str();
  } catch (const DisconnectedGraph&) {
    out["log_tau"] = "-inf";
    if (c.get_or("exact", false)) out["exact"] = "0";
  }
  return {out, std::nullopt};
}

Outcome run_entropy(const ExperimentConfig& c, int threads) {
  const DistributionPtr dist = build_distribution(c);
  const std::string method = c.get_or<std::string>("method", "series");
  SamplingOptions sampling;
  sampling.samples = static_cast<std::uint64_t>(c.get_or("samples", 1));
  sampling.threads = threads;
  EntropyEstimate est;
  std::optional<int> peak;
  if (method == "series") {
    SeriesEstimateOptions o;
    o.sampling = sampling;
    const int K = c.get_or("K", 256);
    est = entropy_series(*dist, K, o);
    peak = (K + 1) / 2 + 1;
  } else if (method == "resistance") {
    ResistanceEstimateOptions o;
    o.sampling = sampling;
    o.s_min = c.get_or("s_min", o.s_min);
    o.s_max = c.get_or("s_max", o.s_max);
    o.max_radius = c.get_or("max_radius", o.max_radius);
    o.solver = resistance_options(c, 1e-4).solver;
    est = entropy_resistance(*dist, c.get_or("tol", 1e-4), o);
  } else if (method == "closed_form") {
    const int K = c.get_or("K", 1024);
    est = entropy_resistance_closed_form(*dist, c.at("degree").get<int>(), K, c.get_or("tol", 1e-4));
    peak = (K + 1) / 2 + 1;
  } else {
    peak = c.get_or("radius", 32);
    est = entropy_spectral(*dist, *peak, sampling);
  }
  if (!peak && est.diagnostics.contains("max_radius")) peak = est.diagnostics["max_radius"].get<int>();
  return {est.to_json(), peak};
}

Outcome run_resistance_curve(const ExperimentConfig& c) {
  const DistributionPtr dist = build_distribution(c);
  const auto index = static_cast<std::uint64_t>(c.get_or("index", 0));
  const auto grid = s_grid(c, 1e-4, 1e4, 48);
  const ResistanceOptions o = resistance_options(c, 1e-10);
  const ResistanceCurve curve = resistance_curve(*dist->sample(index), grid, o);
  json points = json::array();
  int peak = 0;
  double min_step = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < curve.samples.size(); ++i) {
    const auto& v = curve.samples[i];
    points.push_back({{"s", v.s}, {"R", v.value}, {"radius", v.radius_used}, {"gap", v.cauchy_gap}});
    peak = std::max(peak, v.radius_used);
    if (i > 0) min_step = std::min(min_step, v.s - curve.samples[i - 1].s);
  }
  const int mono = curve.first_monotonicity_violation(2.0 * o.tol);
  const int conv = curve.first_convexity_violation(std::isfinite(min_step) ? 4.0 * o.tol / min_step : 0.0);
  json out = {{"sample_index", index}, {"points", points}};
  out["monotonicity_violation"] = mono < 0 ? json(nullptr) : json(mono);
  out["convexity_violation"] = conv < 0 ? json(nullptr) : json(conv);
  return {out, peak};
}

Outcome run_converge(const ExperimentConfig& c) {
  const auto sizes = c.at("sizes").get<std::vector<int>>();
  std::vector<WeightedMultigraph> graphs;
  for (int n : sizes) graphs.push_back(converge_member(c, n));
  const EntropyEstimate est = entropy_finite_limit(graphs);
  json rows = json::array();
  bool increasing = true;
  const auto& seq = est.diagnostics.at("sequence");
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    json row = {{"n", sizes[i]}, {"vertices", seq[i]["n"]}, {"value", seq[i]["value"]}};
    if (seq[i].contains("gap")) row["gap"] = seq[i]["gap"];
    if (i > 0 && !(seq[i]["value"].get<double>() > seq[i - 1]["value"].get<double>())) increasing = false;
    rows.push_back(row);
  }
  return {{{"sequence", rows}, {"increasing", increasing}, {"estimate", est.to_json()}}, std::nullopt};
}

Outcome run_identities(const ExperimentConfig& c) {
  return {identity_checks(c.get_or("count", 25), c.get_or("tol", 1e-8)).to_json(), std::nullopt};
}

Outcome run_domination(const ExperimentConfig& c) {
  const CoupledPair pair = build_coupling(c);
  const auto index = static_cast<std::uint64_t>(c.get_or("index", 0));
  const int radius = c.get_or("radius", 4);
  const DominationCheck check = verify_domination(pair.witness(index, radius));
  json out = {{"coupling", pair.label},
              {"sample_index", index},
              {"witness_radius", radius},
              {"witness", {{"holds", check.holds}, {"diagnostic", check.diagnostic}}}};
  if (!check.holds) return {out, std::nullopt};
  const auto grid = s_grid(c, 1e-2, 1e2, 13);
  const RayleighReport report = rayleigh_check(pair, index, grid, resistance_options(c, 1e-10), radius);
  json points = json::array();
  for (const auto& p : report.points) {
    points.push_back({{"s", p.s},
                      {"R_high", p.r_large},
                      {"R_low", p.r_small},
                      {"allowance", p.allowance},
                      {"margin", p.margin}});
  }
  out["rayleigh"] = {{"holds", report.holds}, {"points", points}};
  return {out, radius};
}

Outcome run_spectral(const ExperimentConfig& c, int threads) {
  const DistributionPtr dist = build_distribution(c);
  SamplingOptions sampling;
  sampling.samples = static_cast<std::uint64_t>(c.get_or("samples", 1));
  sampling.threads = threads;
  const int radius = c.get_or("radius", 32);
  const SpectralMeasureApprox mu = expected_spectral_measure(*dist, radius, sampling);
  json atoms = json::array();
  for (const auto& a : mu.atoms) atoms.push_back({{"lambda", a.lambda}, {"mass", a.mass}});
  json moments = json::array();
  for (int j = 1; j <= 4; ++j) moments.push_back(mu.moment(j));
  const EntropyEstimate est = entropy_spectral(*dist, radius, sampling);
  return {{{"atoms", atoms}, {"total_mass", mu.total_mass}, {"moments", moments}, {"entropy", est.to_json()}},
          radius};
}

Outcome dispatch(const ExperimentConfig& c, int threads) {
  const std::string command = c.at("command").get<std::string>();
  if (command == "tau") return run_tau(c);
  if (command == "entropy") return run_entropy(c, threads);
  if (command == "resistance-curve") return run_resistance_curve(c);
  if (command == "converge") return run_converge(c);
  if (command == "identities") return run_identities(c);
  if (command == "domination") return run_domination(c);
  return run_spectral(c, threads);
}

}  // namespace

const std::vector<ConfigKey>& config_schema() {
  static const std::vector<ConfigKey> schema = {
      {"command", ConfigType::string, "one of " + join(command_names())},
      {"family", ConfigType::string, "distribution family: " + join(kFamilies)},
      {"graph", ConfigType::string, "graph file (uniformly rooted), instead of a family"},
      {"degree", ConfigType::integer, "tree degree, or d for random_regular and the couplings"},
      {"degree_high", ConfigType::integer, "larger degree for tree_in_tree"},
      {"n", ConfigType::integer, "size of a finite family member"},
      {"mean", ConfigType::real, "PGW offspring mean"},
      {"conditioning", ConfigType::string, "PGW conditioning: none or survival_attempted"},
      {"weight", ConfigType::real, "uniform edge weight"},
      {"branching", ConfigType::int_list, "spherical tree offspring per level"},
      {"root_loop", ConfigType::real, "loop weight at the root of a spherical tree"},
      {"lo", ConfigType::real, "random_weight_Z lower weight"},
      {"hi", ConfigType::real, "random_weight_Z upper weight"},
      {"boost", ConfigType::real, "random_weight_Z boost"},
      {"extra_edge_prob", ConfigType::real, "random_weight_Z parallel edge probability"},
      {"extra_weight", ConfigType::real, "random_weight_Z parallel edge weight"},
      {"factor", ConfigType::real, "weight_scaling factor (> 1)"},
      {"coupling", ConfigType::string, "domination coupling: " + join(kCouplings)},
      {"method", ConfigType::string, "entropy method: " + join(kMethods)},
      {"K", ConfigType::integer, "number of return probabilities"},
      {"samples", ConfigType::integer, "Monte Carlo samples"},
      {"tol", ConfigType::real, "tolerance"},
      {"radius", ConfigType::integer, "ball radius"},
      {"max_radius", ConfigType::integer, "largest exhaustion radius"},
      {"s_min", ConfigType::real, "smallest s"},
      {"s_max", ConfigType::real, "largest s"},
      {"s_points", ConfigType::integer, "number of s grid points"},
      {"solver", ConfigType::string, "direct or cg"},
      {"sizes", ConfigType::int_list, "family sizes for converge"},
      {"exact", ConfigType::boolean, "exact spanning-tree count"},
      {"count", ConfigType::integer, "number of identity checks"},
      {"index", ConfigType::integer, "sample index"},
      {"seed", ConfigType::integer, "master seed"},
      {"output", ConfigType::string, "result path", false},
      {"threads", ConfigType::integer, "worker threads", false},
  };
  return schema;
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"tau",      "entropy",    "resistance-curve", "converge",
                                                 "identities", "domination", "spectral"};
  return names;
}

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error([&] {
        std::string msg = "invalid config:";
        for (const auto& p : problems) msg += "\n  " + p;
        return msg;
      }()),
      problems_(std::move(problems)) {}

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  ExperimentConfig c;
  std::vector<std::string> problems;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string body = trim(strip_comment(line));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      problems.push_back("line " + std::to_string(number) + ": expected key = value");
      continue;
    }
    const std::string key = trim(body.substr(0, eq));
    const std::string raw = trim(body.substr(eq + 1));
    const ConfigKey* k = find_key(key);
    if (!k) {
      problems.push_back("line " + std::to_string(number) + ": unknown key '" + key + "'");
      continue;
    }
    if (c.has(key)) {
      problems.push_back("line " + std::to_string(number) + ": duplicate key '" + key + "'");
      continue;
    }
    const json value = json::parse(raw, nullptr, false);
    if (value.is_discarded()) {
      problems.push_back("line " + std::to_string(number) + ": cannot read the value of '" + key + "'");
      continue;
    }
    const auto conformed = conform(k->type, value);
    if (!conformed) {
      problems.push_back("line " + std::to_string(number) + ": '" + key + "' must be " + type_name(k->type));
      continue;
    }
    c.values_[key] = *conformed;
  }
  if (!problems.empty()) throw ConfigError(problems);
  return c;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot open config file " + path.string()});
  std::ostringstream os;
  os << in.rdbuf();
  return parse(os.str());
}

void ExperimentConfig::set_from_text(const std::string& key, const std::string& text) {
  const ConfigKey* k = find_key(key);
  if (!k) throw ConfigError({"unknown key '" + key + "'"});
  json value;
  if (k->type == ConfigType::string) {
    value = text;
  } else if (k->type == ConfigType::int_list || k->type == ConfigType::real_list) {
    std::string body = trim(text);
    if (body.empty() || body.front() != '[') body = "[" + body + "]";
    value = json::parse(body, nullptr, false);
  } else {
    value = json::parse(text, nullptr, false);
  }
  const auto conformed = value.is_discarded() ? std::nullopt : conform(k->type, value);
  if (!conformed) throw ConfigError({"'" + key + "' must be " + type_name(k->type) + ", got '" + text + "'"});
  values_[key] = *conformed;
}

void ExperimentConfig::merge(const ExperimentConfig& overrides) {
  for (const auto& [k, v] : overrides.values_) values_[k] = v;
}

std::string ExperimentConfig::serialize() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v.dump() + "\n";
  return out;
}

json ExperimentConfig::to_json() const {
  json out = json::object();
  for (const auto& [k, v] : values_) out[k] = v;
  return out;
}

std::vector<std::string> ExperimentConfig::problems() const {
  std::vector<std::string> p;
  for (const auto& [k, v] : values_) {
    const ConfigKey* key = find_key(k);
    if (!key) p.push_back("unknown key '" + k + "'");
    else if (!conform(key->type, v)) p.push_back("'" + k + "' must be " + type_name(key->type));
  }
  if (!p.empty()) return p;

  auto positive_int = [&](const char* k, int min = 1) {
    if (has(k) && at(k).get<long long>() < min) p.push_back(std::string("'") + k + "' must be at least " + std::to_string(min));
  };
  auto positive_real = [&](const char* k) {
    if (has(k) && !(at(k).get<double>() > 0.0 && std::isfinite(at(k).get<double>()))) {
      p.push_back(std::string("'") + k + "' must be positive and finite");
    }
  };
  auto one_of = [&](const char* k, const std::vector<std::string>& allowed) {
    if (has(k) && !contains(allowed, at(k).get<std::string>())) {
      p.push_back(std::string("'") + k + "' must be one of " + join(allowed) + ", got '" + at(k).get<std::string>() + "'");
    }
  };
  for (const char* k : {"K", "samples", "radius", "max_radius", "count", "threads", "n"}) positive_int(k);
  positive_int("s_points", 2);
  positive_int("degree", 2);
  positive_int("degree_high", 2);
  positive_int("seed", 0);
  positive_int("index", 0);
  for (const char* k : {"tol", "s_min", "s_max", "mean", "weight", "lo", "hi", "extra_weight", "factor"}) {
    positive_real(k);
  }
  if (has("s_min") && has("s_max") && !(at("s_max").get<double>() > at("s_min").get<double>())) {
    p.push_back("'s_max' must exceed 's_min'");
  }
  if (has("lo") && has("hi") && at("hi").get<double>() < at("lo").get<double>()) p.push_back("'hi' must be at least 'lo'");
  if (has("extra_edge_prob")) {
    const double q = at("extra_edge_prob").get<double>();
    if (!(q >= 0.0 && q <= 1.0)) p.push_back("'extra_edge_prob' must lie in [0, 1]");
  }
  if (has("boost") && !(at("boost").get<double>() >= 0.0)) p.push_back("'boost' must be non-negative");
  if (has("root_loop") && !(at("root_loop").get<double>() >= 0.0)) p.push_back("'root_loop' must be non-negative");
  if (has("branching")) {
    const auto b = at("branching").get<std::vector<long long>>();
    if (b.empty() || std::any_of(b.begin(), b.end(), [](long long x) { return x < 1; })) {
      p.push_back("'branching' must be a non-empty list of positive integers");
    }
  }
  one_of("method", kMethods);
  one_of("coupling", kCouplings);
  one_of("solver", {"direct", "cg"});
  one_of("conditioning", {"none", "survival_attempted"});
  if (has("graph") && !fs::exists(at("graph").get<std::string>())) {
    p.push_back("graph file '" + at("graph").get<std::string>() + "' does not exist");
  }

  if (!has("command")) {
    p.push_back("'command' is required");
    return p;
  }
  const std::string command = at("command").get<std::string>();
  if (!contains(command_names(), command)) {
    p.push_back("'command' must be one of " + join(command_names()) + ", got '" + command + "'");
    return p;
  }

  const std::string family = has("family") ? at("family").get<std::string>() : "";
  auto need = [&](const char* k, const std::string& why) {
    if (!has(k)) p.push_back(std::string("'") + k + "' is required " + why);
  };
  auto need_distribution = [&] {
    if (has("graph") && has("family")) p.push_back("give either 'graph' or 'family', not both");
    if (!has("graph") && !has("family")) p.push_back("'family' or 'graph' is required for " + command);
    if (!has("family")) return;
    one_of("family", kFamilies);
    const std::string why = "for family " + family;
    if (family == "regular_tree") need("degree", why);
    if (family == "spherical_tree") need("branching", why);
    if (family == "pgw") need("mean", why);
    if (contains(kConvergeFamilies, family) && command != "converge") need("n", why);
    if (family == "random_regular") need("degree", why);
  };

  if (command == "tau") {
    need("graph", "for tau");
  } else if (command == "entropy") {
    need_distribution();
    const std::string method = get_or<std::string>("method", "series");
    if (method == "closed_form") {
      if (family != "regular_tree") p.push_back("method closed_form needs family regular_tree");
    }
  } else if (command == "resistance-curve" || command == "spectral") {
    need_distribution();
  } else if (command == "converge") {
    need("family", "for converge");
    if (has("family") && !contains(kConvergeFamilies, family)) {
      p.push_back("converge family must be one of " + join(kConvergeFamilies));
    }
    if (family == "random_regular") need("degree", "for family random_regular");
    need("sizes", "for converge");
    if (has("sizes")) {
      const auto s = at("sizes").get<std::vector<long long>>();
      if (s.empty()) p.push_back("'sizes' must not be empty");
      for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] < 3) p.push_back("'sizes' entries must be at least 3");
        if (i > 0 && s[i] <= s[i - 1]) p.push_back("'sizes' must increase");
      }
    }
  } else if (command == "domination") {
    need("coupling", "for domination");
    const std::string coupling = get_or<std::string>("coupling", "");
    if (coupling == "weight_scaling") {
      need_distribution();
      need("factor", "for weight_scaling");
      if (has("factor") && !(at("factor").get<double>() > 1.0)) p.push_back("'factor' must exceed 1");
    }
    if (coupling == "tree_in_tree") {
      need("degree", "for tree_in_tree");
      need("degree_high", "for tree_in_tree");
      if (has("degree") && has("degree_high") && at("degree_high").get<int>() <= at("degree").get<int>()) {
        p.push_back("'degree_high' must exceed 'degree'");
      }
    }
  }
  return p;
}

void ExperimentConfig::validate() const {
  auto p = problems();
  if (!p.empty()) throw ConfigError(std::move(p));
}

std::string input_hash(const ExperimentConfig& config) {
  ExperimentConfig hashed;
  for (const auto& key : config_schema()) {
    if (key.hashed && config.has(key.name)) hashed.set(key.name, config.at(key.name));
  }
  std::string text = hashed.serialize();
  if (config.has("graph")) text += "graph-content = " + git_blob_hash(read_file(config.at("graph").get<std::string>())) + "\n";
  return git_blob_hash(text);
}

fs::path default_cache_dir() {
  if (const char* dir = std::getenv("TEL_CACHE_DIR"); dir && *dir) return dir;
  if (const char* xdg = std::getenv("XDG_CACHE_HOME"); xdg && *xdg) return fs::path(xdg) / "tel";
  if (const char* home = std::getenv("HOME"); home && *home) return fs::path(home) / ".cache" / "tel";
  return fs::temp_directory_path() / "tel-cache";
}

void write_atomically(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

json run(const ExperimentConfig& config, const RunOptions& options) {
  config.validate();
  const auto started = std::chrono::steady_clock::now();
  const std::string hash = input_hash(config);
  const std::string command = config.at("command").get<std::string>();

  json record = {{"schema", 1}, {"command", command}, {"config", config.to_json()}, {"input_hash", hash}};
  std::optional<fs::path> cache_file;
  if (options.cache_dir) cache_file = *options.cache_dir / (hash + ".json");

  bool hit = false;
  std::optional<int> peak;
  if (cache_file && !options.force && fs::exists(*cache_file)) {
    const json cached = json::parse(read_file(*cache_file), nullptr, false);
    if (!cached.is_discarded() && cached.contains("outputs") && cached.value("input_hash", "") == hash) {
      record["outputs"] = cached["outputs"];
      if (cached.contains("diagnostics") && cached["diagnostics"].contains("peak_radius")) {
        const auto& pr = cached["diagnostics"]["peak_radius"];
        if (pr.is_number_integer()) peak = pr.get<int>();
      }
      hit = true;
    }
  }
  if (!hit) {
    Outcome o = dispatch(config, std::max(1, options.threads));
    record["outputs"] = std::move(o.outputs);
    peak = o.peak_radius;
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  record["diagnostics"] = {{"wall_seconds", seconds},
                           {"peak_radius", peak ? json(*peak) : json(nullptr)},
                           {"cache", cache_file ? (hit ? "hit" : "miss") : "off"},
                           {"threads", options.threads}};
  record["timestamp"] = utc_timestamp();
  if (cache_file && !hit) write_atomically(*cache_file, record.dump(2) + "\n");
  return record;
}

std::string emit_plotdata(const json& record) {
  const std::string command = record.value("command", "");
  const json& out = record.at("outputs");
  std::ostringstream os;
  os.precision(17);
  if (command == "resistance-curve") {
    os << "# s: killing rate, R: root resistance to the wired boundary, radius: exhaustion radius, gap: last "
          "Cauchy gap\n";
    os << "s,R,radius,gap\n";
    for (const auto& p : out.at("points")) {
      os << p["s"].get<double>() << ',' << p["R"].get<double>() << ',' << p["radius"].get<int>() << ','
         << p["gap"].get<double>() << '\n';
    }
    return os.str();
  }
  if (command == "converge") {
    os << "# n: family size, value: log(tree count) per vertex, gap: change from the previous size\n";
    os << "n,value,gap\n";
    for (const auto& r : out.at("sequence")) {
      os << r["n"].get<int>() << ',' << r["value"].get<double>() << ',';
      if (r.contains("gap")) os << r["gap"].get<double>();
      os << '\n';
    }
    return os.str();
  }
  if (command == "spectral") {
    os << "# lambda: eigenvalue of the local operator, mass: expected spectral weight at the root\n";
    os << "lambda,mass\n";
    for (const auto& a : out.at("atoms")) os << a["lambda"].get<double>() << ',' << a["mass"].get<double>() << '\n';
    return os.str();
  }
  if (command == "identities") {
    os << "# lambda: test value, log_error and positive_error: absolute quadrature errors\n";
    os << "lambda,log_error,positive_error\n";
    for (const auto& c : out.at("checks")) {
      os << c["lambda"].get<double>() << ',' << c["log_error"].get<double>() << ','
         << c["positive_error"].get<double>() << '\n';
    }
    return os.str();
  }
  throw NoPlotData("a " + command + " record holds no curve or sequence to plot");
}

}  // namespace tel

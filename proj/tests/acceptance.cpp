// Runs the acceptance criteria and prints one PASS/FAIL line for each.
// `acceptance 3 7` runs a subset.

#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "support.hpp"
#include "tel/entropy.hpp"
#include "tel/harness.hpp"
#include "tel/resistance.hpp"
#include "tel/spanning.hpp"

using namespace tel;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string title;
  double budget_seconds;
  std::function<Verdict()> check;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double value_of(const EntropyEstimate& e) { return e.value.finite(); }
double bar_of(const EntropyEstimate& e) { return e.error_bar.value_or(0.0); }

// ---- 1 ----------------------------------------------------------------------------

Verdict matrix_tree_oracle() {
  std::mt19937_64 rng(20240601);
  std::uniform_int_distribution<int> nv(1, 7);
  int mismatches = 0, loops = 0, parallels = 0;
  for (int t = 0; t < 200; ++t) {
    const int n = nv(rng);
    std::uniform_int_distribution<int> ne(std::max(n - 1, 1), 12);
    const auto g = tel::testing::random_multigraph(rng, n, ne(rng));
    std::set<std::pair<VertexId, VertexId>> seen;
    for (const Edge& e : g.edges()) {
      loops += e.is_loop();
      if (!e.is_loop()) parallels += !seen.insert(std::minmax(e.u, e.v)).second;
    }
    TauOptions o;
    o.exact = true;
    if (*tau(g, o).exact != tau_bruteforce(g)) ++mismatches;
  }
  return {mismatches == 0 && loops > 0 && parallels > 0,
          fmt("%d mismatches over 200 graphs (%d loops, %d parallel edges in the set)", mismatches, loops, parallels)};
}

// ---- 2 ----------------------------------------------------------------------------

Verdict integral_identities() {
  const IdentityReport rep = identity_checks(25, 1e-8);
  double worst = 0.0;
  for (const auto& c : rep.checks) worst = std::max({worst, c.log_error, c.positive_error});
  return {rep.passed && rep.checks.size() == 25, fmt("25 values of lambda, worst error %.2e", worst)};
}

// ---- 3 ----------------------------------------------------------------------------

Verdict line_has_zero_entropy() {
  const auto z = lattice_generator(Lattice::Z);
  const EntropyEstimate series = entropy_series(*z, 1024);
  const EntropyEstimate res = entropy_resistance(*z, 1e-5);
  const auto src = z->sample(0);
  double worst = 0.0;
  for (double s : log_grid(1e-3, 1e3, 20)) {
    worst = std::max(worst, std::abs(resistance(*src, s).value - 1.0 / std::sqrt(s * s + 4.0 * s)));
  }
  const bool ok = std::abs(value_of(series)) <= 1e-4 && std::abs(value_of(res)) <= 1e-4 && worst <= 1e-8;
  return {ok, fmt("series %.3e, resistance %.3e, closed-form gap %.2e over 20 points", value_of(series),
                  value_of(res), worst)};
}

// ---- 4 ----------------------------------------------------------------------------

Verdict torus_convergence() {
  std::vector<double> values;
  for (int n : {8, 16, 32, 64}) values.push_back(tau(families::torus(n)).log_value / (n * n));
  bool increasing = true;
  for (std::size_t i = 1; i < values.size(); ++i) increasing = increasing && values[i] > values[i - 1];
  ResistanceEstimateOptions o;
  o.s_min = 1e-3;
  const EntropyEstimate z2 = entropy_resistance(*lattice_generator(Lattice::Z2), 1e-3, o);
  const double gap = std::abs(values.back() - value_of(z2));
  const double catalan = 0.915965594177219015;
  return {increasing && gap <= 0.01,
          fmt("torus %.5f %.5f %.5f %.5f, Z2 resistance %.6f (+-%.1e), gap %.4f, 4G/pi %.6f", values[0], values[1],
              values[2], values[3], value_of(z2), bar_of(z2), gap, 4.0 * catalan / M_PI)};
}

// ---- 5 ----------------------------------------------------------------------------

Verdict regular_tree_cross_validation() {
  bool ok = true;
  std::string detail;
  for (int d : {3, 4}) {
    const auto tree = lattice_generator(Lattice::regular_tree, d);
    const double series = value_of(entropy_series(*tree, 1024));
    const double res = value_of(entropy_resistance(*tree, 1e-4));
    const double cf = value_of(entropy_resistance_closed_form(*tree, d, 1024, 1e-4));
    const double spread = std::max({series, res, cf}) - std::min({series, res, cf});
    const double finite = tau(families::random_regular(d, 2000, 777 + d)).log_value / 2000.0;
    const double finite_gap = std::max({std::abs(finite - series), std::abs(finite - res), std::abs(finite - cf)});
    ok = ok && spread <= 5e-3 && finite_gap <= 0.02;
    detail += fmt("d=%d: series %.6f resistance %.6f closed form %.6f, random graph %.5f (gap %.4f); ", d, series,
                  res, cf, finite, finite_gap);
  }
  return {ok, detail};
}

// ---- 6 ----------------------------------------------------------------------------

struct CouplingCase {
  CoupledPair pair;
  bool strict;
  std::uint64_t index;
  bool random;
};

std::vector<CouplingCase> coupling_cases() {
  std::vector<CouplingCase> out;
  const std::vector<DistributionPtr> fixed = {lattice_generator(Lattice::Z), lattice_generator(Lattice::regular_tree, 3),
                                              lattice_generator(Lattice::regular_tree, 4),
                                              lattice_generator(Lattice::regular_tree, 5)};
  for (const auto& base : fixed) {
    for (double f : {1.25, 1.5, 2.0, 3.0}) out.push_back({coupled_weight_scaling(base, f), true, 0, false});
  }
  RandomZParams plain;
  for (std::uint64_t s = 1; s <= 4; ++s) {
    out.push_back({coupled_weight_scaling(random_weight_Z(plain, s), s % 2 ? 1.5 : 2.0), true, s, true});
  }
  for (std::uint64_t s = 5; s <= 20; ++s) {
    RandomZParams high;
    if (s <= 10 || s > 16) high.boost = 0.5;
    if (s > 10) high.extra_edge_prob = 0.5;
    out.push_back({coupled_random_Z(plain, high, s), true, s, true});
  }
  out.push_back({coupled_z_in_z2(), true, 0, false});
  for (int d : {3, 4, 5, 6, 7}) out.push_back({coupled_z_in_tree(d), true, 0, false});
  for (auto [lo, hi] : std::vector<std::pair<int, int>>{{3, 4}, {3, 5}, {4, 5}, {4, 6}, {5, 7}}) {
    out.push_back({coupled_tree_in_tree(lo, hi), true, 0, false});
  }
  for (int d : {5, 10, 20}) out.push_back({loop_counterexample_pair(d), false, 0, false});
  return out;
}

Verdict rayleigh_domination() {
  const auto cases = coupling_cases();
  const auto grid = log_grid(1e-2, 1e2, 9);
  std::map<std::string, EntropyEstimate> memo;
  auto estimate = [&](const RootedDistribution& d, bool random) -> const EntropyEstimate& {
    const std::string key = d.descriptor().dump();
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    ResistanceEstimateOptions o;
    o.sampling.samples = random ? 32 : 1;
    if (d.descriptor()["family"] == "Z2") o.s_min = 1e-3;
    return memo.emplace(key, entropy_resistance(d, 1e-3, o)).first->second;
  };
  int rayleigh_fail = 0, witness_fail = 0, order_fail = 0, strict = 0;
  double tightest = std::numeric_limits<double>::infinity();
  std::string first_problem;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& c = cases[i];
    for (int r : {2, 4}) {
      if (!verify_domination(c.pair.witness(c.index, r))) {
        ++witness_fail;
        if (first_problem.empty()) first_problem = c.pair.label + ": witness";
      }
    }
    if (!rayleigh_check(c.pair, c.index, grid).holds) {
      ++rayleigh_fail;
      if (first_problem.empty()) first_problem = c.pair.label + ": Rayleigh";
    }
    if (!c.strict) continue;
    ++strict;
    const EntropyEstimate& high = estimate(*c.pair.high, c.random);
    const EntropyEstimate& low = estimate(*c.pair.low, c.random);
    const double margin = (value_of(high) - bar_of(high)) - (value_of(low) + bar_of(low));
    tightest = std::min(tightest, margin);
    if (!(margin > 0.0)) {
      ++order_fail;
      if (first_problem.empty()) {
        first_problem = fmt("%s: %.4f+-%.4f vs %.4f+-%.4f", c.pair.label.c_str(), value_of(high), bar_of(high),
                            value_of(low), bar_of(low));
      }
    }
  }
  return {cases.size() == 50 && rayleigh_fail == 0 && witness_fail == 0 && order_fail == 0,
          fmt("%zu couplings: %d witness failures, %d Rayleigh failures; %d strict, %d misordered, tightest margin "
              "%.4f%s%s",
              cases.size(), witness_fail, rayleigh_fail, strict, order_fail, tightest,
              first_problem.empty() ? "" : "; first problem ", first_problem.c_str())};
}

// ---- 7 ----------------------------------------------------------------------------

Verdict nonnegativity_sweep() {
  std::vector<WeightedMultigraph> rr;
  for (int n : {250, 500, 1000, 2000}) rr.push_back(families::random_regular(3, n, 4242 + n));
  const EntropyEstimate regular = entropy_finite_limit(rr);

  SeriesEstimateOptions so;
  so.sampling.samples = 200;
  const EntropyEstimate pgw = entropy_series(*pgw_sampler(2.0, PgwConditioning::survival_attempted, 11, 12), 24, so);

  ResistanceEstimateOptions z2o;
  z2o.s_min = 1e-3;
  const EntropyEstimate z = entropy_resistance(*lattice_generator(Lattice::Z), 1e-5);
  const EntropyEstimate z2 = entropy_resistance(*lattice_generator(Lattice::Z2), 1e-3, z2o);
  const EntropyEstimate t3 = entropy_resistance(*lattice_generator(Lattice::regular_tree, 3), 1e-4);

  bool ok = true;
  std::string detail;
  for (auto [name, e] : std::vector<std::pair<const char*, const EntropyEstimate*>>{
           {"random 3-regular", &regular}, {"PGW(2)", &pgw}, {"Z", &z}, {"Z2", &z2}, {"3-regular tree", &t3}}) {
    const bool good = !e->value.is_neg_inf() && value_of(*e) >= -bar_of(*e);
    ok = ok && good;
    detail += fmt("%s %.5f+-%.1e%s; ", name, e->value.is_neg_inf() ? -INFINITY : value_of(*e), bar_of(*e),
                  good ? "" : " (negative)");
  }
  return {ok, detail};
}

// ---- 8 ----------------------------------------------------------------------------

Verdict heavy_tail_divergence() {
  const std::uint64_t seed = 7;
  const auto h = heavy_tail_Z(seed);
  SeriesEstimateOptions so;
  so.sampling.samples = 200;
  const EntropyEstimate series = entropy_series(*h, 1024, so);
  const TruncatedSweep sweep = truncated_series_sweep(*h, 1000, 8, 1024);

  const int N = 100000;
  bool band = true;
  std::string tail;
  for (std::uint64_t m : {4u, 9u, 16u}) {
    int hits = 0;
    for (int i = 0; i < N; ++i) hits += heavy_tail_exponent(seed + 1, static_cast<std::uint64_t>(i), 1) >= m;
    const double p = 1.0 / std::sqrt(double(m));
    const double phat = double(hits) / N;
    const double z = (phat - p) / std::sqrt(p * (1.0 - p) / N);
    band = band && std::abs(z) <= 3.0;
    tail += fmt("P[X>=%d] %.4f (z %.2f) ", int(m), phat, z);
  }
  const bool ok = series.value.is_neg_inf() && sweep.decreasing && !sweep.stabilizing && band;
  return {ok, fmt("series %s (%d of 200 samples flagged), sweep %.4f -> %.4f, decrement slope %.3f; ",
                  series.value.is_neg_inf() ? "-inf" : "finite",
                  series.diagnostics.value("divergent_samples", 0), sweep.values.front(), sweep.values.back(),
                  sweep.decrement_slope) +
                  tail};
}

// ---- 9 ----------------------------------------------------------------------------

Verdict loop_counterexample() {
  const CoupledPair p = loop_counterexample_pair(20);
  bool dominated = true;
  for (int r = 1; r <= 3; ++r) dominated = dominated && verify_domination(p.witness(0, r)).holds;
  // orbit sizes 20·19^(r−1) of the lumped ball stay finite in double up to r ≈ 240
  const EntropyEstimate high = entropy_series(*p.high, 400);
  const EntropyEstimate low = entropy_series(*p.low, 400);
  const double margin = (value_of(low) - bar_of(low)) - (value_of(high) + bar_of(high));
  return {dominated && margin > 0.0,
          fmt("with loop %.6f+-%.1e, without %.6f+-%.1e, margin %.4f, domination %s", value_of(high), bar_of(high),
              value_of(low), bar_of(low), margin, dominated ? "verified" : "NOT verified")};
}

// ---- 10 ---------------------------------------------------------------------------

Verdict spectral_sanity() {
  const SpectralMeasureApprox z = expected_spectral_measure(*lattice_generator(Lattice::Z), 512);
  const SpectralMeasureApprox z2 = expected_spectral_measure(*lattice_generator(Lattice::Z2), 40);
  const EntropyEstimate e = entropy_spectral(*lattice_generator(Lattice::Z), 512);
  const double gz = std::abs(z.moment(1) - 2.0), gz2 = std::abs(z2.moment(1) - 4.0);
  const bool ok = gz <= 1e-6 && gz2 <= 1e-6 && std::abs(value_of(e)) <= 0.02 && e.diagnostics.contains("bias");
  return {ok, fmt("first moments off by %.1e (Z) and %.1e (Z2); spectral h(Z) %.5f, bias note: %s", gz, gz2,
                  value_of(e), e.diagnostics.value("bias", std::string("missing")).c_str())};
}

// ---- 11 ---------------------------------------------------------------------------

Verdict reproducibility() {
  const fs::path dir = fs::temp_directory_path() / ("tel-acceptance-" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "k4.txt") << "graph 4 6 root=0\n0 1 1\n0 2 1\n0 3 1\n1 2 1\n1 3 1\n2 3 1\n";

  const std::vector<std::string> configs = {
      "command = \"tau\"\ngraph = \"" + (dir / "k4.txt").string() + "\"\nexact = true\n",
      "command = \"entropy\"\nfamily = \"pgw\"\nmean = 2.0\nconditioning = \"survival_attempted\"\nK = 24\n"
      "samples = 60\nseed = 5\n",
      "command = \"entropy\"\nmethod = \"resistance\"\nfamily = \"random_weight_Z\"\nsamples = 6\nseed = 3\n"
      "tol = 1e-3\n",
      "command = \"entropy\"\nmethod = \"closed_form\"\nfamily = \"regular_tree\"\ndegree = 3\n",
      "command = \"converge\"\nfamily = \"random_regular\"\ndegree = 3\nsizes = [50, 100, 200]\nseed = 8\n",
      "command = \"identities\"\n",
      "command = \"resistance-curve\"\nfamily = \"heavy_tail_Z\"\nseed = 2\ns_points = 6\n",
      "command = \"domination\"\ncoupling = \"random_Z\"\nboost = 0.3\nseed = 4\ns_points = 4\n",
      "command = \"spectral\"\nfamily = \"pgw\"\nmean = 1.5\nradius = 6\nsamples = 20\nseed = 1\n",
  };
  int mismatches = 0;
  std::string first;
  for (const auto& text : configs) {
    const ExperimentConfig c = ExperimentConfig::parse(text);
    RunOptions cached;
    cached.cache_dir = dir / "cache";
    RunOptions forced = cached;
    forced.force = true;
    forced.threads = 3;
    const auto a = run(c, cached);
    const auto b = run(c, forced);
    const auto hit = run(c, cached);
    const auto again = run(ExperimentConfig::parse(c.serialize()), RunOptions{});
    const std::string ref = a["outputs"].dump();
    const bool same = b["outputs"].dump() == ref && hit["outputs"].dump() == ref && again["outputs"].dump() == ref &&
                      a["input_hash"] == again["input_hash"] && hit["diagnostics"]["cache"] == "hit";
    if (!same) {
      ++mismatches;
      if (first.empty()) first = c.at("command").get<std::string>();
    }
  }
  fs::remove_all(dir);
  return {mismatches == 0, fmt("%zu configs, each run fresh, forced with 3 threads, from cache and re-parsed: "
                               "%d differ in outputs%s%s",
                               configs.size(), mismatches, first.empty() ? "" : ", first ", first.c_str())};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "matrix-tree oracle equivalence", 10, matrix_tree_oracle},
      {2, "integral identities", 5, integral_identities},
      {3, "integer line has zero entropy", 60, line_has_zero_entropy},
      {4, "torus convergence", 600, torus_convergence},
      {5, "regular tree cross-validation", 300, regular_tree_cross_validation},
      {6, "Rayleigh monotonicity and domination", 300, rayleigh_domination},
      {7, "non-negativity sweep", 600, nonnegativity_sweep},
      {8, "heavy-tail divergence", 180, heavy_tail_divergence},
      {9, "root loop counterexample sign", 120, loop_counterexample},
      {10, "spectral measure sanity", 300, spectral_sanity},
      {11, "reproducibility", 600, reproducibility},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.contains(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (seconds > c.budget_seconds) {
      v.pass = false;
      v.detail += fmt(" [over the %.0f s budget]", c.budget_seconds);
    }
    failed += !v.pass;
    std::cout << (v.pass ? "PASS" : "FAIL") << "  criterion " << c.id << " (" << c.title << ", "
              << fmt("%.1f s", seconds) << "): " << v.detail << std::endl;
  }
  std::cout << (failed == 0 ? "all criteria passed" : fmt("%d criteria failed", failed)) << std::endl;
  return failed == 0 ? 0 : 1;
}

#include "socising/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <sstream>

#include "json.hpp"
#include "socising/coupling.hpp"
#include "socising/fk.hpp"
#include "socising/ising.hpp"
#include "socising/lattice.hpp"
#include "socising/parallel.hpp"
#include "socising/rng.hpp"
#include "socising/soc.hpp"
#include "socising/surgery.hpp"

namespace socising::experiments {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------- config

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"soc-run",      "soc-compare", "fk-sample",
                                                 "coupling-verify", "duality-verify", "surgery-demo",
                                                 "enumerate",    "fss-freq",    "tail-fit"};
  return names;
}

const std::vector<ConfigKey>& config_schema() {
  static const std::vector<ConfigKey> schema = {
      {"command", "", "experiment to run (soc-run, soc-compare, fk-sample, coupling-verify, duality-verify, "
                      "surgery-demo, enumerate, fss-freq, tail-fit)"},
      {"n", "16", "box side, or a comma list of sides"},
      {"a", "1.99", "feedback exponent in T_n = m^2 / n^(2a)"},
      {"T", "Tc", "temperature list for coupling-verify; Tc is the critical temperature"},
      {"p", "pc", "edge parameter list; pc is p_c(q). Single-p commands use the first entry"},
      {"q", "2", "cluster weight"},
      {"bc", "wired", "FK boundary condition: wired or free"},
      {"tau", "32", "sweeps between temperature refreshes"},
      {"total", "1000", "total sweeps of a dynamics run"},
      {"burn_in", "0", "dynamics: sweeps excluded from summaries; samplers: steps before the first sample"},
      {"seed", "1", "master seed (64-bit)"},
      {"out", "soc-ising-out", "output directory"},
      {"snapshot_every", "0", "dynamics: record |M_n| of a coupled FK configuration every this many sweeps (0 = off)"},
      {"samples", "200", "samples per box size"},
      {"chains", "1", "independent chains per box size"},
      {"thin", "10", "sampler steps between recorded samples"},
      {"sampler", "sw", "FK sampler: sw (Swendsen-Wang, q = 2) or heat-bath (single bond)"},
      {"refresh", "instantaneous", "temperature refresh rule: instantaneous or block-average"},
      {"epsilon", "0.5", "enumerate: distance from T_c in the deviation bounds"},
      {"K", "1", "surgery budget constant in |H| <= K n^(a/2)"},
      {"delta", "0.1", "relative slack of the finite-size-scaling events"},
      {"b_fraction", "0.8", "surgery-demo: b = floor(b_fraction |M_n|), parity-corrected to n^2"},
      {"p_source", "fixed-point", "fss-freq edge parameter: fixed-point, scaling or explicit"},
      {"scaling_K", "0.1", "fss-freq with p_source = scaling: p_n = p_c (1 + scaling_K n^(8a-16))"},
      {"parallel", "openmp", "cell scheduling: openmp or serial (results are identical)"},
  };
  return schema;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) out.push_back(trim(item));
  return out;
}

template <class T>
bool parse_number(const std::string& s, T& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if constexpr (std::is_unsigned_v<T>) {
    if (!s.empty() && s.front() == '-') return false;
  }
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && !s.empty();
}

bool one_of(const std::string& v, std::initializer_list<const char*> options) {
  return std::any_of(options.begin(), options.end(), [&](const char* o) { return v == o; });
}

}  // namespace

ExperimentConfig::ExperimentConfig() {
  for (const auto& k : config_schema()) values_[k.name] = k.default_value;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError(key, "unknown config key '" + key + "'");
  it->second = trim(value);
}

const std::string& ExperimentConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError(key, "unknown config key '" + key + "'");
  return it->second;
}

void ExperimentConfig::merge_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ConfigError("", "config line " + std::to_string(line_no) + ": expected 'key = value'");
    set(trim(body.substr(0, eq)), body.substr(eq + 1));
  }
}

void ExperimentConfig::merge_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot read config file '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  merge_text(buffer.str());
}

long ExperimentConfig::get_int(const std::string& key) const {
  long v = 0;
  if (!parse_number(get(key), v)) throw ConfigError(key, "config key '" + key + "': expected an integer");
  return v;
}

std::uint64_t ExperimentConfig::get_u64(const std::string& key) const {
  std::uint64_t v = 0;
  if (!parse_number(get(key), v))
    throw ConfigError(key, "config key '" + key + "': expected an unsigned 64-bit integer");
  return v;
}

double ExperimentConfig::get_real(const std::string& key) const {
  double v = 0.0;
  if (!parse_number(get(key), v) || !std::isfinite(v))
    throw ConfigError(key, "config key '" + key + "': expected a finite real");
  return v;
}

std::vector<int> ExperimentConfig::get_int_list(const std::string& key) const {
  std::vector<int> out;
  for (const auto& item : split_list(get(key))) {
    int v = 0;
    if (!parse_number(item, v)) throw ConfigError(key, "config key '" + key + "': bad list entry '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError(key, "config key '" + key + "': empty list");
  return out;
}

std::vector<double> ExperimentConfig::get_real_list(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : split_list(get(key))) {
    double v = 0.0;
    if (item == "Tc") {
      v = critical_temperature();
    } else if (item == "pc") {
      v = critical_p(get_real("q"));
    } else if (!parse_number(item, v) || !std::isfinite(v)) {
      throw ConfigError(key, "config key '" + key + "': bad list entry '" + item + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError(key, "config key '" + key + "': empty list");
  return out;
}

void ExperimentConfig::validate() const {
  auto require = [](bool ok, const std::string& key, const std::string& what) {
    if (!ok) throw ConfigError(key, "config key '" + key + "': " + what);
  };
  const std::string& command = get("command");
  require(!command.empty(), "command", "a command is required");
  require(std::find(command_names().begin(), command_names().end(), command) != command_names().end(), "command",
          "unknown command '" + command + "'");

  for (int n : get_int_list("n")) require(n >= 1, "n", "box sides must be >= 1");
  const double a = get_real("a");
  require(a > 0.0, "a", "must be > 0");
  const double q = get_real("q");
  require(q >= 1.0, "q", "must be >= 1");
  for (double t : get_real_list("T")) require(t >= 0.0, "T", "temperatures must be >= 0");
  for (double p : get_real_list("p")) require(p >= 0.0 && p <= 1.0, "p", "must lie in [0, 1]");
  require(one_of(get("bc"), {"wired", "free"}), "bc", "expected wired or free");
  require(get_int("tau") >= 1, "tau", "must be >= 1");
  require(get_int("total") >= 0, "total", "must be >= 0");
  require(get_int("burn_in") >= 0, "burn_in", "must be >= 0");
  get_u64("seed");
  require(!get("out").empty(), "out", "must not be empty");
  require(get_int("snapshot_every") >= 0, "snapshot_every", "must be >= 0");
  require(get_int("samples") >= 1, "samples", "must be >= 1");
  require(get_int("chains") >= 1, "chains", "must be >= 1");
  require(get_int("thin") >= 1, "thin", "must be >= 1");
  require(one_of(get("sampler"), {"sw", "heat-bath"}), "sampler", "expected sw or heat-bath");
  require(one_of(get("refresh"), {"instantaneous", "block-average"}), "refresh",
          "expected instantaneous or block-average");
  require(get_real("epsilon") > 0.0, "epsilon", "must be > 0");
  require(get_real("K") > 0.0, "K", "must be > 0");
  const double delta = get_real("delta");
  require(delta > 0.0 && delta < 1.0, "delta", "must lie in (0, 1)");
  const double frac = get_real("b_fraction");
  require(frac >= 0.0 && frac <= 1.0, "b_fraction", "must lie in [0, 1]");
  require(one_of(get("p_source"), {"fixed-point", "scaling", "explicit"}), "p_source",
          "expected fixed-point, scaling or explicit");
  require(get_real("scaling_K") > 0.0, "scaling_K", "must be > 0");
  require(one_of(get("parallel"), {"openmp", "serial"}), "parallel", "expected openmp or serial");

  const bool fk_sampling = one_of(command, {"fk-sample", "surgery-demo", "fss-freq", "tail-fit"});
  if (fk_sampling && get("sampler") == "sw") require(q == 2.0, "q", "the sw sampler needs q = 2");
  if (command == "coupling-verify") require(q == 2.0, "q", "the Ising coupling needs q = 2");
  if (one_of(command, {"surgery-demo", "fss-freq"})) {
    require(get("bc") == "wired", "bc", command + " needs wired boundary");
    require(a > 31.0 / 16.0 && a < 2.0, "a", command + " needs a in (31/16, 2)");
  }
  if (command == "surgery-demo")
    for (int n : get_int_list("n")) require(n >= 12, "n", "surgery needs n >= 12");
  if (command == "fss-freq") require(get_int("samples") >= 100, "samples", "fss-freq needs >= 100 samples per n");
  if (command == "duality-verify")
    for (int n : get_int_list("n")) require(n >= 2, "n", "duality needs n >= 2");
}

std::string ExperimentConfig::to_text() const {
  std::string out;
  for (const auto& k : config_schema()) {
    out += "# " + k.description + "\n";
    out += k.name + " = " + values_.at(k.name) + "\n";
  }
  return out;
}

std::string ExperimentConfig::to_json() const {
  json j = json::object();
  for (const auto& k : config_schema()) j[k.name] = values_.at(k.name);
  return j.dump();
}

// ---------------------------------------------------------------- helpers

Interval wilson_interval(std::size_t successes, std::size_t trials) {
  if (trials == 0) return {0.0, 1.0};
  const double z = 1.959963984540054;
  const double n = static_cast<double>(trials);
  const double phat = static_cast<double>(successes) / n;
  const double denom = 1.0 + z * z / n;
  const double centre = (phat + z * z / (2.0 * n)) / denom;
  const double half = z * std::sqrt(phat * (1.0 - phat) / n + z * z / (4.0 * n * n)) / denom;
  return {successes == 0 ? 0.0 : std::max(0.0, centre - half),
          successes == trials ? 1.0 : std::min(1.0, centre + half)};
}

std::string format_real(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

std::string serialize_spins(const SpinConfig& sigma, double temperature, std::optional<double> a,
                            std::uint64_t seed) {
  json j;
  j["n"] = sigma.geometry().side();
  if (a) j["a"] = *a;
  j["T"] = temperature;
  j["seed"] = seed;
  j["vertex_order"] = "lexicographic";
  auto spins = json::array();
  for (auto s : sigma.spins()) spins.push_back(static_cast<int>(s));
  j["spins"] = std::move(spins);
  return j.dump();
}

SpinConfig deserialize_spins(std::string_view text) {
  const json j = json::parse(text);
  const auto g = build_box(j.at("n").get<int>());
  std::vector<std::int8_t> spins;
  for (const auto& s : j.at("spins")) spins.push_back(static_cast<std::int8_t>(s.get<int>()));
  return SpinConfig::from_spins(g, std::move(spins));
}

std::string serialize_bonds(const BondConfig& omega, const FKParams& params, std::uint64_t seed) {
  std::string bits;
  bits.reserve(omega.bonds().size());
  for (auto b : omega.bonds()) bits += b ? '1' : '0';
  json j = {{"n", omega.geometry().side()},
            {"p", params.p},
            {"q", params.q},
            {"bc", params.bc == BoundaryCondition::wired ? "wired" : "free"},
            {"seed", seed},
            {"edge_order", "lexicographic"},
            {"bonds", bits}};
  return j.dump();
}

BondConfig deserialize_bonds(std::string_view text) {
  const json j = json::parse(text);
  BondConfig omega(build_box(j.at("n").get<int>()));
  const auto bits = j.at("bonds").get<std::string>();
  if (bits.size() != omega.geometry().edge_count())
    throw std::invalid_argument("deserialize_bonds: expected " + std::to_string(omega.geometry().edge_count()) +
                                " bonds, got " + std::to_string(bits.size()));
  for (EdgeId e = 0; e < bits.size(); ++e) {
    if (bits[e] != '0' && bits[e] != '1') throw std::invalid_argument("deserialize_bonds: bonds must be 0 or 1");
    omega.set(e, bits[e] == '1');
  }
  return omega;
}

namespace {

using Row = std::vector<std::string>;

std::string cell(double x) { return format_real(x); }
std::string cell(bool x) { return x ? "1" : "0"; }
std::string cell(const std::string& s) { return s; }
template <class T>
  requires std::is_integral_v<T>
std::string cell(T x) {
  return std::to_string(x);
}

template <class... Ts>
Row row(const Ts&... xs) {
  return Row{cell(xs)...};
}

struct Table {
  std::vector<std::string> columns;
  std::vector<Row> rows;
};

struct CommandOutput {
  Table table;
  json summary = json::object();
  json metadata_extra = json::object();
  std::vector<std::pair<std::string, std::string>> extra_files;  // name, contents
};

// Welford accumulation, always fed in a fixed order.
struct Moments {
  std::size_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;
  void add(double x) {
    ++count;
    const double d = x - mean;
    mean += d / static_cast<double>(count);
    m2 += d * (x - mean);
  }
  double variance() const { return count > 1 ? m2 / static_cast<double>(count - 1) : 0.0; }
  json to_json() const {
    return {{"count", count}, {"mean", mean}, {"variance", variance()}, {"std", std::sqrt(variance())}};
  }
};

std::uint64_t stream_id(std::size_t cell_index, std::size_t chain) {
  return (static_cast<std::uint64_t>(cell_index) << 32) | static_cast<std::uint64_t>(chain);
}

parallel::Mode mode_of(const ExperimentConfig& c) {
  return c.get("parallel") == "serial" ? parallel::Mode::serial : parallel::Mode::openmp;
}

// Runs task(i) for every cell; exceptions are carried out of the parallel
// region and the first one (by cell index) is rethrown.
template <class Result, class Task>
std::vector<Result> run_cells(std::size_t count, Task&& task, parallel::Mode mode) {
  struct Slot {
    Result value{};
    std::exception_ptr error;
  };
  auto slots = parallel::ensemble<Slot>(
      count,
      [&](std::size_t i) {
        Slot s;
        try {
          s.value = task(i);
        } catch (...) {
          s.error = std::current_exception();
        }
        return s;
      },
      mode);
  std::vector<Result> out;
  out.reserve(count);
  for (auto& s : slots) {
    if (s.error) std::rethrow_exception(s.error);
    out.push_back(std::move(s.value));
  }
  return out;
}

// Samples per chain when `total` samples are spread over `chains`.
std::size_t chain_quota(std::size_t total, std::size_t chains, std::size_t chain) {
  return total / chains + (chain < total % chains ? 1 : 0);
}

FKParams fk_params(const ExperimentConfig& c, double p) {
  FKParams f;
  f.p = p;
  f.q = c.get_real("q");
  f.bc = c.get("bc") == "free" ? BoundaryCondition::free : BoundaryCondition::wired;
  f.validate();
  return f;
}

// One Markov step of the configured FK sampler.
void sampler_step(const std::string& sampler, BondConfig& omega, const FKParams& params, RngStream& rng) {
  if (sampler == "sw")
    swendsen_wang_step(omega, params, rng);
  else
    single_bond_heat_bath_sweep(omega, params, rng);
}

// burn_in steps, then `count` samples `thin` steps apart; visit(index, ω).
void sample_fk(const GeometryPtr& g, const FKParams& params, const ExperimentConfig& c, std::size_t count,
               RngStream& rng, const std::function<void(std::size_t, const BondConfig&)>& visit) {
  const std::string sampler = c.get("sampler");
  const auto burn_in = static_cast<std::size_t>(c.get_int("burn_in"));
  const auto thin = static_cast<std::size_t>(c.get_int("thin"));
  BondConfig omega(g);
  for (std::size_t s = 0; s < burn_in; ++s) sampler_step(sampler, omega, params, rng);
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t s = 0; s < thin; ++s) sampler_step(sampler, omega, params, rng);
    visit(i, omega);
  }
}

double max_abs_difference(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::logic_error("distribution sizes differ");
  double m = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - y[i]));
  return m;
}

double total_variation(const std::vector<double>& x, const std::vector<double>& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += std::abs(x[i] - y[i]);
  return 0.5 * s;
}

json deviation_side_json(const DeviationSide& s) {
  return {{"lhs", s.lhs},
          {"rhs", s.rhs},
          {"sup_value", s.sup_value},
          {"argmax_temperature", s.argmax_temperature},
          {"empty_range", s.empty_range},
          {"holds", s.holds()}};
}

// ---------------------------------------------------------------- dynamics

const std::vector<std::string> kTrajectoryColumns = {"variant", "n",    "chain", "stream", "step",
                                                     "T",       "m",    "flips", "floor_used", "M_n"};

struct TrajectoryCell {
  int n = 0;
  std::size_t chain = 0;
  std::uint64_t stream = 0;
  SocTrajectory trajectory;
  std::map<std::size_t, std::size_t> snapshots;  // sweep ↦ |M_n|
  std::string final_state;                       // serialized σ after the last sweep
};

// A sweep hook that records |M_n| of an FK configuration drawn from σ
// through the coupling at p = 1 - e^{-2/T}.
SweepHook snapshot_hook(std::size_t every, RngStream& rng, std::map<std::size_t, std::size_t>& out) {
  if (every == 0) return {};
  return [every, &rng, &out](std::size_t sweep, const SpinConfig& sigma, double t) {
    if (sweep % every != 0) return;
    const BondConfig omega = es_ising_to_fk(sigma, t_to_p(t), rng);
    out[sweep] = boundary_connected_count(omega.geometry(), omega.bonds());
  };
}

void append_trajectory_rows(const TrajectoryCell& c, Table& table) {
  for (const auto& r : c.trajectory.records) {
    auto snap = c.snapshots.find(r.step);
    table.rows.push_back(row(c.trajectory.variant, c.n, c.chain, c.stream, r.step, r.temperature, r.magnetization,
                             r.flips, r.floor_used,
                             snap == c.snapshots.end() ? std::string() : std::to_string(snap->second)));
  }
}

// Pools the post-burn-in records of several chains.
json pooled_summary(const std::vector<const TrajectoryCell*>& cells, double a) {
  Moments t, m, mn;
  std::size_t floors = 0;
  int n = 0;
  std::string variant;
  for (const auto* c : cells) {
    n = c->n;
    variant = c->trajectory.variant;
    for (const auto& r : c->trajectory.records) {
      if (r.step <= c->trajectory.burn_in) continue;
      t.add(r.temperature);
      m.add(static_cast<double>(r.magnetization));
      if (r.floor_used) ++floors;
      if (auto s = c->snapshots.find(r.step); s != c->snapshots.end()) mn.add(static_cast<double>(s->second));
    }
  }
  json j = {{"variant", variant},
            {"n", n},
            {"chains", cells.size()},
            {"records", t.count},
            {"mean_T", t.mean},
            {"std_T", std::sqrt(t.variance())},
            {"var_T", t.variance()},
            {"mean_m", m.mean},
            {"floor_count", floors},
            {"T_cap", std::pow(static_cast<double>(n), 4.0 - 2.0 * a)},
            {"T_c", critical_temperature()}};
  if (mn.count > 0) j["M_n"] = mn.to_json();
  return j;
}

CommandOutput run_dynamics(const ExperimentConfig& c, bool compare) {
  const auto ns = c.get_int_list("n");
  const double a = c.get_real("a");
  const auto chains = static_cast<std::size_t>(c.get_int("chains"));
  const auto total = static_cast<std::size_t>(c.get_int("total"));
  const auto burn_in = static_cast<std::size_t>(c.get_int("burn_in"));
  const auto snapshot_every = static_cast<std::size_t>(c.get_int("snapshot_every"));
  const std::uint64_t seed = c.get_u64("seed");
  const std::size_t variants = compare ? 3 : 1;

  TwoTimescaleOptions base;
  base.tau = static_cast<std::size_t>(c.get_int("tau"));
  base.total = total;
  base.burn_in = burn_in;
  base.refresh = c.get("refresh") == "block-average" ? RefreshRule::block_average : RefreshRule::instantaneous;

  const std::size_t groups = ns.size() * variants;
  auto cells = run_cells<TrajectoryCell>(
      groups * chains,
      [&](std::size_t i) {
        const std::size_t group = i / chains;
        TrajectoryCell out;
        out.n = ns[group / variants];
        out.chain = i % chains;
        out.stream = stream_id(group, out.chain);
        RngStream rng(seed, out.stream);
        RngStream snap_rng = rng.split(1);
        const auto geometry = build_box(out.n);
        auto snap = snapshot_hook(snapshot_every, snap_rng, out.snapshots);
        SweepHook hook = [&](std::size_t sweep, const SpinConfig& sigma, double t) {
          if (snap) snap(sweep, sigma, t);
          if (sweep == total) out.final_state = serialize_spins(sigma, t, a, seed);
        };
        const std::size_t variant = group % variants;
        if (variant == 0) {
          TwoTimescaleOptions opt = base;
          opt.on_sweep = hook;
          out.trajectory = two_timescale_dynamics(geometry, a, opt, rng);
        } else {
          out.trajectory = naive_mu_prime_dynamics(geometry, a, total, variant == 1, rng, hook);
          out.trajectory.burn_in = burn_in;
        }
        return out;
      },
      mode_of(c));

  CommandOutput out;
  out.table.columns = kTrajectoryColumns;
  json per = json::array();
  std::string finals;
  for (std::size_t group = 0; group < groups; ++group) {
    std::vector<const TrajectoryCell*> members;
    for (std::size_t k = 0; k < chains; ++k) {
      const auto& cell_k = cells[group * chains + k];
      append_trajectory_rows(cell_k, out.table);
      if (!cell_k.final_state.empty()) finals += cell_k.final_state + "\n";
      members.push_back(&cell_k);
    }
    per.push_back(pooled_summary(members, a));
  }
  out.summary["cells"] = per;
  out.summary["refresh"] = c.get("refresh");
  out.summary["temperature_floor"] = kTemperatureFloor;
  if (!finals.empty()) out.extra_files.emplace_back("final_configs.jsonl", std::move(finals));
  return out;
}

// ---------------------------------------------------------------- FK

CommandOutput run_fk_sample(const ExperimentConfig& c) {
  const auto ns = c.get_int_list("n");
  const auto chains = static_cast<std::size_t>(c.get_int("chains"));
  const auto samples = static_cast<std::size_t>(c.get_int("samples"));
  const FKParams params = fk_params(c, c.get_real_list("p").front());
  const std::uint64_t seed = c.get_u64("seed");

  struct SampleCell {
    std::vector<Row> rows;
    std::string last;  // serialized final sample
  };
  auto cells = run_cells<SampleCell>(
      ns.size() * chains,
      [&](std::size_t i) {
        const int n = ns[i / chains];
        const std::size_t chain = i % chains;
        RngStream rng(seed, stream_id(i / chains, chain));
        const auto g = build_box(n);
        SampleCell out;
        const std::size_t quota = chain_quota(samples, chains, chain);
        sample_fk(g, params, c, quota, rng, [&](std::size_t s, const BondConfig& w) {
          const auto d = decompose(w);
          out.rows.push_back(row(n, chain, s, w.open_count(), d.boundary_connected.size(), d.k0, d.k1,
                                 d.sum_sq_interior, d.max_interior, d.unit_count_halfgrid));
          if (s + 1 == quota) out.last = serialize_bonds(w, params, seed);
        });
        return out;
      },
      mode_of(c));

  CommandOutput out;
  out.table.columns = {"n", "chain", "sample", "open_edges", "M_n", "k0", "k1", "sum_sq_interior", "max_interior",
                       "U_n"};
  json per = json::array();
  std::string finals;
  for (std::size_t ni = 0; ni < ns.size(); ++ni) {
    Moments open, m, k0, k1, sq, mx;
    for (std::size_t k = 0; k < chains; ++k) {
      if (!cells[ni * chains + k].last.empty()) finals += cells[ni * chains + k].last + "\n";
      for (const auto& r : cells[ni * chains + k].rows) {
        out.table.rows.push_back(r);
        open.add(std::stod(r[3]));
        m.add(std::stod(r[4]));
        k0.add(std::stod(r[5]));
        k1.add(std::stod(r[6]));
        sq.add(std::stod(r[7]));
        mx.add(std::stod(r[8]));
      }
    }
    per.push_back({{"n", ns[ni]},
                   {"open_edges", open.to_json()},
                   {"M_n", m.to_json()},
                   {"k0", k0.to_json()},
                   {"k1", k1.to_json()},
                   {"sum_sq_interior", sq.to_json()},
                   {"max_interior", mx.to_json()}});
  }
  out.summary["p"] = params.p;
  out.summary["q"] = params.q;
  out.summary["bc"] = c.get("bc");
  out.summary["sampler"] = c.get("sampler");
  out.summary["cells"] = per;
  out.extra_files.emplace_back("final_configs.jsonl", std::move(finals));
  return out;
}

// ---------------------------------------------------------------- exact checks

constexpr double kExactTolerance = 1e-10;

CommandOutput run_coupling_verify(const ExperimentConfig& c) {
  CommandOutput out;
  out.table.columns = {"n", "T", "p", "max_abs_error", "total_variation"};
  double worst = 0.0;
  for (int n : c.get_int_list("n")) {
    const auto g = build_box(n);
    for (double t : c.get_real_list("T")) {
      const double p = t_to_p(t);
      const auto fk = exact_fk_distribution(g, FKParams{p, 2.0, BoundaryCondition::wired});
      const auto pushed = es_pushforward(fk);
      const auto ising = exact_ising_distribution(g, IsingParams(t));
      const double err = max_abs_difference(pushed, ising.probability);
      worst = std::max(worst, err);
      out.table.rows.push_back(row(n, t, p, err, total_variation(pushed, ising.probability)));
    }
  }
  out.summary["max_abs_error"] = worst;
  out.summary["tolerance"] = kExactTolerance;
  out.summary["pass"] = worst <= kExactTolerance;
  return out;
}

CommandOutput run_duality_verify(const ExperimentConfig& c) {
  CommandOutput out;
  out.table.columns = {"n", "q", "p", "p_star", "p_star_star", "max_abs_error"};
  const double q = c.get_real("q");
  double worst = 0.0, worst_involution = 0.0;
  for (int n : c.get_int_list("n")) {
    const auto g = build_box(n);
    const auto dual_g = build_box(n - 1);
    for (double p : c.get_real_list("p")) {
      const auto fk = exact_fk_distribution(g, FKParams{p, q, BoundaryCondition::wired});
      const auto pushed = dual_pushforward(fk);
      const double p_star = dual_parameter(p, q);
      const double p_star_star = dual_parameter(p_star, q);
      const auto target = exact_fk_distribution(dual_g, FKParams{p_star, q, BoundaryCondition::free});
      const double err = max_abs_difference(pushed, target.probability);
      worst = std::max(worst, err);
      worst_involution = std::max(worst_involution, std::abs(p_star_star - p));
      out.table.rows.push_back(row(n, q, p, p_star, p_star_star, err));
    }
  }
  out.summary["max_abs_error"] = worst;
  out.summary["max_involution_error"] = worst_involution;
  out.summary["tolerance"] = kExactTolerance;
  out.summary["pass"] = worst <= kExactTolerance && worst_involution <= 1e-12;
  return out;
}

CommandOutput run_enumerate(const ExperimentConfig& c) {
  CommandOutput out;
  out.table.columns = {"n", "mask", "m", "H", "T_n", "mu_n"};
  const double a = c.get_real("a");
  const double eps = c.get_real("epsilon");
  json per = json::array();
  for (int n : c.get_int_list("n")) {
    const auto g = build_box(n);
    const auto mu = exact_mu_n(g, a);
    double total = 0.0;
    for (std::size_t i = 0; i < mu.table.size(); ++i) {
      out.table.rows.push_back(
          row(n, i, mu.table.magnetization[i], mu.table.energy[i], mu.temperature[i], mu.probability[i]));
      total += mu.probability[i];
    }
    const auto dev = deviation_bound_check(g, a, eps);
    json b_terms = json::object();
    for (const auto& [b, v] : mu.b_terms) b_terms[std::to_string(b)] = v;
    per.push_back({{"n", n},
                   {"configurations", mu.table.size()},
                   {"z_direct", mu.z_direct},
                   {"z_via_b", mu.z_via_b},
                   {"z_abs_difference", std::abs(mu.z_direct - mu.z_via_b)},
                   {"probability_sum", total},
                   {"b_terms", b_terms},
                   {"deviation",
                    {{"epsilon", eps},
                     {"z_n", dev.z_n},
                     {"supercritical", deviation_side_json(dev.supercritical)},
                     {"subcritical", deviation_side_json(dev.subcritical)},
                     {"holds", dev.holds()}}}});
  }
  out.summary["a"] = a;
  out.summary["cells"] = per;
  return out;
}

// ---------------------------------------------------------------- surgery

// Closing edges only splits clusters, so an interior cluster of ω survives
// iff the ω_H cluster of any of its vertices has the same size.
bool interior_clusters_untouched(const ClusterDecomposition& before, const ClusterDecomposition& after) {
  for (std::uint32_t cl : before.interior_clusters) {
    const VertexId rep = before.members(cl).front();
    if (after.cluster_size_at(rep) != before.size[cl] || after.in_boundary_cluster(rep)) return false;
  }
  return true;
}

bool is_precondition_stage(const std::string& stage) { return one_of(stage, {"target", "H0", "H1", "parity"}); }

struct SurgeryCell {
  std::vector<Row> rows;
  std::size_t attempts = 0;
  std::size_t passing = 0;
  std::size_t successes = 0;
  std::size_t target_hits = 0;
  bool all_untouched = true;
  bool c0_bound_all = true;
  bool s_all = true;
  double max_ratio = 0.0;
  double max_h2_ratio = 0.0;  // |H2| / √|C_v|
  std::size_t max_h = 0;
  std::string example;
};

// Attempts per chain before giving up on collecting passing samples.
constexpr std::size_t kSurgeryAttemptFactor = 10;

CommandOutput run_surgery_demo(const ExperimentConfig& c) {
  const auto ns = c.get_int_list("n");
  const double a = c.get_real("a");
  const auto chains = static_cast<std::size_t>(c.get_int("chains"));
  const auto samples = static_cast<std::size_t>(c.get_int("samples"));
  const FKParams params = fk_params(c, c.get_real_list("p").front());
  const double frac = c.get_real("b_fraction");
  const std::uint64_t seed = c.get_u64("seed");
  const std::string sampler = c.get("sampler");
  const auto thin = static_cast<std::size_t>(c.get_int("thin"));
  const auto burn_in = static_cast<std::size_t>(c.get_int("burn_in"));

  auto cells = run_cells<SurgeryCell>(
      ns.size() * chains,
      [&](std::size_t i) {
        const int n = ns[i / chains];
        const std::size_t chain = i % chains;
        const std::size_t quota = chain_quota(samples, chains, chain);
        RngStream rng(seed, stream_id(i / chains, chain));
        const auto g = build_box(n);
        const long n2 = static_cast<long>(n) * n;
        const EventParams ev = make_event_params(n, a, c.get_real("K"), c.get_real("delta"), 0, params.p);
        const double scale = std::sqrt(ev.n_pow_a());
        SurgeryCell out;
        BondConfig omega(g);
        for (std::size_t s = 0; s < burn_in; ++s) sampler_step(sampler, omega, params, rng);
        while (out.passing < quota && out.attempts < kSurgeryAttemptFactor * std::max<std::size_t>(quota, 1)) {
          for (std::size_t s = 0; s < thin; ++s) sampler_step(sampler, omega, params, rng);
          const auto d = decompose(omega);
          const long m = static_cast<long>(d.boundary_connected.size());
          long b = static_cast<long>(std::floor(frac * static_cast<double>(m)));
          if ((b - n2) % 2 != 0) b = b > 0 ? b - 1 : 1;
          EventParams evb = ev;
          evb.b = b;
          const SurgeryResult r = surgery(omega, b, evb);
          const bool pre_ok = !is_precondition_stage(r.failed_stage);
          const bool hit = r.m_after == r.target;
          bool untouched = false, c0_ok = false;
          double ratio = static_cast<double>(r.H.size()) / scale;
          if (r.success) {
            const auto da = decompose(apply_surgery(omega, r));
            untouched = interior_clusters_untouched(d, da);
            c0_ok = r.disconnected.size() <= r.H.size() + 1;
          }
          out.rows.push_back(row(n, chain, out.attempts, m, b, r.target, r.m_after, pre_ok, r.success,
                                 r.failed_stage, r.H0.size(), r.H1.size(), r.H2.size(), r.H.size(),
                                 r.disconnected.size(), r.parity_unit_added, untouched, c0_ok, ratio, r.s_holds(),
                                 event_G_n(d, evb)));
          ++out.attempts;
          if (!pre_ok) continue;
          ++out.passing;
          if (hit) ++out.target_hits;
          if (!r.success) continue;
          ++out.successes;
          out.all_untouched = out.all_untouched && untouched;
          out.c0_bound_all = out.c0_bound_all && c0_ok;
          out.s_all = out.s_all && r.s_holds();
          out.max_ratio = std::max(out.max_ratio, ratio);
          out.max_h = std::max(out.max_h, r.H.size());
          if (r.c_v_size > 0)
            out.max_h2_ratio =
                std::max(out.max_h2_ratio, static_cast<double>(r.H2.size()) / std::sqrt(static_cast<double>(r.c_v_size)));
          if (out.example.empty() && !r.H.empty()) out.example = to_json(r);
        }
        return out;
      },
      mode_of(c));

  CommandOutput out;
  out.table.columns = {"n",         "chain",  "attempt", "M_n",     "b",          "target",
                       "M_n_after", "precondition_ok",   "success", "failed_stage", "H0", "H1",
                       "H2",        "H",      "C0",      "parity_unit", "interior_untouched", "c0_bound_ok",
                       "H_over_n_half_a", "S_n", "G_n"};
  json per = json::array();
  for (std::size_t ni = 0; ni < ns.size(); ++ni) {
    SurgeryCell agg;
    std::string example;
    for (std::size_t k = 0; k < chains; ++k) {
      const auto& cc = cells[ni * chains + k];
      for (const auto& r : cc.rows) out.table.rows.push_back(r);
      agg.attempts += cc.attempts;
      agg.passing += cc.passing;
      agg.successes += cc.successes;
      agg.target_hits += cc.target_hits;
      agg.all_untouched = agg.all_untouched && cc.all_untouched;
      agg.c0_bound_all = agg.c0_bound_all && cc.c0_bound_all;
      agg.s_all = agg.s_all && cc.s_all;
      agg.max_ratio = std::max(agg.max_ratio, cc.max_ratio);
      agg.max_h2_ratio = std::max(agg.max_h2_ratio, cc.max_h2_ratio);
      agg.max_h = std::max(agg.max_h, cc.max_h);
      if (example.empty()) example = cc.example;
    }
    // Mean ratio straight from the rows, so it is recomputable.
    Moments ratio;
    for (const auto& r : out.table.rows)
      if (r[0] == std::to_string(ns[ni]) && r[8] == "1") ratio.add(std::stod(r[18]));
    const int n = ns[ni];
    per.push_back({{"n", n},
                   {"attempts", agg.attempts},
                   {"passing_preconditions", agg.passing},
                   {"successes", agg.successes},
                   {"success_rate", agg.passing ? static_cast<double>(agg.successes) / agg.passing : 0.0},
                   {"target_hit_rate", agg.passing ? static_cast<double>(agg.target_hits) / agg.passing : 0.0},
                   {"interior_untouched_all", agg.all_untouched},
                   {"c0_bound_all", agg.c0_bound_all},
                   {"S_n_all", agg.s_all},
                   {"K_fit", agg.max_ratio},
                   {"H_over_n_half_a", ratio.to_json()},
                   {"max_H", agg.max_h},
                   {"max_H2_over_sqrt_Cv", agg.max_h2_ratio},
                   {"closing_price_log10_at_max_H",
                    static_cast<double>(agg.max_h) * std::log10(edge_closing_price(n, params.p, 1))},
                   {"example", example.empty() ? json(nullptr) : json::parse(example)}});
  }
  out.summary["p"] = params.p;
  out.summary["a"] = a;
  out.summary["b_fraction"] = frac;
  out.summary["cells"] = per;
  return out;
}

// ---------------------------------------------------------------- FSS

double fss_p(const ExperimentConfig& c, int n, std::size_t index, std::size_t count) {
  const std::string source = c.get("p_source");
  const double a = c.get_real("a");
  if (source == "fixed-point") {
    try {
      return fixed_point(BigInt(n), a).p_n.convert_to<double>();
    } catch (const std::domain_error& e) {
      throw std::domain_error(std::string(e.what()) + " (n = " + std::to_string(n) +
                              "; use p_source = scaling or explicit at this size)");
    }
  }
  if (source == "scaling") {
    const double s = 16.0 - 8.0 * a;
    return std::min(1.0, critical_p(2.0) * (1.0 + c.get_real("scaling_K") * std::pow(static_cast<double>(n), -s)));
  }
  const auto ps = c.get_real_list("p");
  return ps.size() == count ? ps[index] : ps.front();
}

CommandOutput run_fss_freq(const ExperimentConfig& c) {
  const auto ns = c.get_int_list("n");
  const double a = c.get_real("a");
  const auto chains = static_cast<std::size_t>(c.get_int("chains"));
  const auto samples = static_cast<std::size_t>(c.get_int("samples"));
  const std::uint64_t seed = c.get_u64("seed");
  std::vector<double> p_of(ns.size());
  for (std::size_t i = 0; i < ns.size(); ++i) {
    p_of[i] = fss_p(c, ns[i], i, ns.size());
    if (p_of[i] < critical_p(2.0))
      throw std::domain_error("fss-freq: p_n = " + format_real(p_of[i]) + " is below p_c at n = " +
                              std::to_string(ns[i]));
  }

  auto cells = run_cells<std::vector<Row>>(
      ns.size() * chains,
      [&](std::size_t i) {
        const std::size_t ni = i / chains;
        const int n = ns[ni];
        const std::size_t chain = i % chains;
        RngStream rng(seed, stream_id(ni, chain));
        const auto g = build_box(n);
        const EventParams ev = make_event_params(n, a, c.get_real("K"), c.get_real("delta"), 0, p_of[ni]);
        const double na = ev.n_pow_a();
        std::vector<Row> rows;
        sample_fk(g, fk_params(c, p_of[ni]), c, chain_quota(samples, chains, chain), rng,
                  [&](std::size_t s, const BondConfig& w) {
                    const auto d = decompose(w);
                    const auto m = d.boundary_connected.size();
                    const auto m_in = d.boundary_connected_in_sub_box(ev.n1);
                    rows.push_back(row(n, chain, s, m, m_in, d.max_interior, d.unit_interior_count(),
                                       event_F_n(d, ev), event_G_n(d, ev), condition_1(d, ev), condition_2(d, ev),
                                       condition_3(d, ev), static_cast<double>(m) / na,
                                       static_cast<double>(m_in) / na));
                  });
        return rows;
      },
      mode_of(c));

  CommandOutput out;
  out.table.columns = {"n",      "chain",       "sample",      "M_n",         "M_n_inner",  "max_interior", "units",
                       "F_n",    "G_n",         "condition_1", "condition_2", "condition_3", "M_n_over_n_a",
                       "M_n_inner_over_n_a"};
  const std::vector<std::pair<std::string, std::size_t>> events = {
      {"F_n", 7}, {"G_n", 8}, {"condition_1", 9}, {"condition_2", 10}, {"condition_3", 11}};
  json per = json::array();
  for (std::size_t ni = 0; ni < ns.size(); ++ni) {
    std::vector<std::size_t> hits(events.size(), 0);
    std::size_t count = 0;
    Moments ratio, ratio_in;
    bool m_bounded = true;
    const long n2 = static_cast<long>(ns[ni]) * ns[ni];
    for (std::size_t k = 0; k < chains; ++k)
      for (const auto& r : cells[ni * chains + k]) {
        out.table.rows.push_back(r);
        ++count;
        for (std::size_t e = 0; e < events.size(); ++e) hits[e] += r[events[e].second] == "1";
        ratio.add(std::stod(r[12]));
        ratio_in.add(std::stod(r[13]));
        m_bounded = m_bounded && std::stol(r[3]) <= n2;
      }
    json freq = json::object();
    for (std::size_t e = 0; e < events.size(); ++e) {
      const auto ci = wilson_interval(hits[e], count);
      freq[events[e].first] = {{"frequency", static_cast<double>(hits[e]) / static_cast<double>(count)},
                               {"ci_low", ci.low},
                               {"ci_high", ci.high}};
    }
    per.push_back({{"n", ns[ni]},
                   {"p_n", p_of[ni]},
                   {"samples", count},
                   {"events", freq},
                   {"M_n_over_n_a", ratio.to_json()},
                   {"M_n_inner_over_n_a", ratio_in.to_json()},
                   {"thresholds", {{"M_n_over_n_a_max", 4.0}, {"M_n_inner_over_n_a_min", 2.0}}},
                   {"M_n_at_most_n2", m_bounded}});
  }
  out.summary["a"] = a;
  out.summary["p_source"] = c.get("p_source");
  out.summary["interval"] = "wilson-95";
  out.summary["cells"] = per;
  return out;
}

// ---------------------------------------------------------------- tail fit

CommandOutput run_tail_fit(const ExperimentConfig& c) {
  const auto ns = c.get_int_list("n");
  const auto chains = static_cast<std::size_t>(c.get_int("chains"));
  const auto samples = static_cast<std::size_t>(c.get_int("samples"));
  const FKParams params = fk_params(c, c.get_real_list("p").front());
  const std::uint64_t seed = c.get_u64("seed");

  auto cells = run_cells<std::vector<std::uint32_t>>(
      ns.size() * chains,
      [&](std::size_t i) {
        const int n = ns[i / chains];
        const std::size_t chain = i % chains;
        RngStream rng(seed, stream_id(i / chains, chain));
        const auto g = build_box(n);
        const VertexId origin = *g->vertex_at({0, 0});
        std::vector<std::uint32_t> sizes;
        sample_fk(g, params, c, chain_quota(samples, chains, chain), rng, [&](std::size_t, const BondConfig& w) {
          sizes.push_back(decompose(w).cluster_size_at(origin));
        });
        return sizes;
      },
      mode_of(c));

  CommandOutput out;
  out.table.columns = {"n", "chain", "sample", "cluster_size"};
  std::string tail_csv = "n,k,tail\n";
  json per = json::array();
  for (std::size_t ni = 0; ni < ns.size(); ++ni) {
    const int n = ns[ni];
    std::vector<std::uint32_t> pooled;
    for (std::size_t k = 0; k < chains; ++k) {
      const auto& sizes = cells[ni * chains + k];
      for (std::size_t s = 0; s < sizes.size(); ++s) out.table.rows.push_back(row(n, k, s, sizes[s]));
      pooled.insert(pooled.end(), sizes.begin(), sizes.end());
    }
    const auto stats = tail_statistics_from_sizes(pooled, static_cast<std::size_t>(n) * n, seed);
    for (std::size_t k = 1; k <= stats.tail.size(); ++k) {
      if (stats.tail[k - 1] == 0.0) break;
      tail_csv += std::to_string(n) + "," + std::to_string(k) + "," + format_real(stats.tail[k - 1]) + "\n";
    }
    per.push_back({{"n", n},
                   {"samples", stats.samples},
                   {"psi", stats.psi},
                   {"ci_low", stats.ci_low},
                   {"ci_high", stats.ci_high},
                   {"fit_k_max", stats.fit_k_max},
                   {"degenerate", stats.degenerate},
                   {"note", stats.note},
                   {"ci_excludes_zero", !stats.degenerate && stats.ci_low > 0.0}});
  }
  out.summary["p"] = params.p;
  out.summary["q"] = params.q;
  out.summary["bc"] = c.get("bc");
  out.summary["cells"] = per;
  out.metadata_extra["tail_fit"] = {{"min_hits", TailStatistics::kMinHits},
                                    {"bootstrap_resamples", TailStatistics::kBootstrapResamples},
                                    {"min_samples", TailStatistics::kMinSamples},
                                    {"vertex", "origin (0, 0)"}};
  out.extra_files.emplace_back("tail.csv", std::move(tail_csv));
  return out;
}

CommandOutput dispatch(const ExperimentConfig& c) {
  const std::string& cmd = c.get("command");
  if (cmd == "soc-run") return run_dynamics(c, false);
  if (cmd == "soc-compare") return run_dynamics(c, true);
  if (cmd == "fk-sample") return run_fk_sample(c);
  if (cmd == "coupling-verify") return run_coupling_verify(c);
  if (cmd == "duality-verify") return run_duality_verify(c);
  if (cmd == "surgery-demo") return run_surgery_demo(c);
  if (cmd == "enumerate") return run_enumerate(c);
  if (cmd == "fss-freq") return run_fss_freq(c);
  if (cmd == "tail-fit") return run_tail_fit(c);
  throw ConfigError("command", "unknown command '" + cmd + "'");
}

std::string to_csv(const Table& t) {
  std::string s;
  auto line = [&s](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) s += ',';
      s += cells[i];
    }
    s += '\n';
  };
  line(t.columns);
  for (const auto& r : t.rows) line(r);
  return s;
}

void write_file(const fs::path& path, const std::string& contents) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  f << contents;
  f.close();
  if (!f) throw std::runtime_error("failed writing '" + path.string() + "'");
}

}  // namespace

RunOutcome run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  CommandOutput out = dispatch(config);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  json metadata = {{"program", "soc-ising"},
                   {"version", SOCISING_VERSION},
                   {"command", config.get("command")},
                   {"rng", {{"algorithm", std::string(RngStream::algorithm)},
                            {"seed", config.get_u64("seed")},
                            {"stream_id", "(cell << 32) | chain"}}},
                   {"csv_schema_version", kCsvSchemaVersion},
                   {"columns", out.table.columns},
                   {"geometry", {{"n", config.get_int_list("n")},
                                 {"vertex_order", "lexicographic"},
                                 {"edge_order", "lexicographic"}}},
                   {"config", json::parse(config.to_json())}};
  for (auto& [k, v] : out.metadata_extra.items()) metadata[k] = v;
  out.summary["rows"] = out.table.rows.size();
  out.summary["wall_time_seconds"] = wall;

  RunOutcome outcome;
  outcome.directory = config.get("out");
  outcome.row_count = out.table.rows.size();
  outcome.summary_json = out.summary.dump(2) + "\n";

  std::vector<std::pair<fs::path, std::string>> files = {
      {outcome.directory / "metadata.json", metadata.dump(2) + "\n"},
      {outcome.directory / "rows.csv", to_csv(out.table)},
      {outcome.directory / "summary.json", outcome.summary_json}};
  for (auto& [name, contents] : out.extra_files) files.emplace_back(outcome.directory / name, std::move(contents));

  const bool dir_existed = fs::exists(outcome.directory);
  std::vector<fs::path> written;
  try {
    fs::create_directories(outcome.directory);
    for (const auto& [path, contents] : files) {
      written.push_back(path);
      write_file(path, contents);
    }
  } catch (...) {
    std::error_code ec;
    for (const auto& p : written) fs::remove(p, ec);
    if (!dir_existed) fs::remove(outcome.directory, ec);
    throw;
  }
  return outcome;
}

}  // namespace socising::experiments

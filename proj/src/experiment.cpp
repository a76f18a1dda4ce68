// SPDX-License-Identifier: Apache-2.0
#include "dnflow/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "dnflow/diagnostics.hpp"
#include "dnflow/error.hpp"
#include "dnflow/minimizing_movements.hpp"
#include "dnflow/snapshot.hpp"
#include "dnflow/spectral_flow.hpp"
#include "dnflow/viscosity_checks.hpp"

namespace dnflow {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// config reading ---------------------------------------------------------------

[[noreturn]] void config_fail(const std::string& key, const std::string& what) {
  fail(ErrorKind::ConfigError, key + ": " + what);
}

// A JSON object whose keys are consumed one by one; finish() rejects leftovers.
class Table {
 public:
  Table(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) config_fail(display(), "expected a table");
  }

  bool has(const std::string& key) const { return j_.contains(key); }
  std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

  const json& raw(const std::string& k) {
    seen_.insert(k);
    return j_.at(k);
  }

  double number(const std::string& k, std::optional<double> fallback = std::nullopt) {
    if (!has(k)) {
      if (!fallback) config_fail(key(k), "missing");
      return *fallback;
    }
    const json& v = raw(k);
    if (!v.is_number()) config_fail(key(k), "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) config_fail(key(k), "must be finite");
    return x;
  }

  long long integer(const std::string& k, std::optional<long long> fallback = std::nullopt) {
    if (!has(k)) {
      if (!fallback) config_fail(key(k), "missing");
      return *fallback;
    }
    const json& v = raw(k);
    if (!v.is_number_integer()) config_fail(key(k), "expected an integer");
    return v.get<long long>();
  }

  std::string string(const std::string& k, std::optional<std::string> fallback = std::nullopt) {
    if (!has(k)) {
      if (!fallback) config_fail(key(k), "missing");
      return *fallback;
    }
    const json& v = raw(k);
    if (!v.is_string()) config_fail(key(k), "expected a string");
    return v.get<std::string>();
  }

  bool boolean(const std::string& k, bool fallback) {
    if (!has(k)) return fallback;
    const json& v = raw(k);
    if (!v.is_boolean()) config_fail(key(k), "expected true or false");
    return v.get<bool>();
  }

  std::vector<double> numbers(const std::string& k) {
    const json& v = raw(k);
    if (!v.is_array()) config_fail(key(k), "expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) config_fail(key(k), "expected an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  std::vector<long long> integers(const std::string& k) {
    const json& v = raw(k);
    if (!v.is_array()) config_fail(key(k), "expected an array of integers");
    std::vector<long long> out;
    for (const auto& e : v) {
      if (!e.is_number_integer()) config_fail(key(k), "expected an array of integers");
      out.push_back(e.get<long long>());
    }
    return out;
  }

  Table table(const std::string& k) { return Table(raw(k), key(k)); }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) config_fail(key(it.key()), "unknown key");
  }

 private:
  std::string display() const { return path_.empty() ? "config" : path_; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

DissipationSpec parse_psi(Table t, int m) {
  const std::string kind = t.string("kind", "ppower");
  DissipationSpec spec;
  if (kind == "ppower") {
    const double p = t.number("p");
    if (!(p > 1.0)) config_fail(t.key("p"), "must be > 1");
    const double eps = t.number("eps", 0.0);
    if (!(eps >= 0.0)) config_fail(t.key("eps"), "must be >= 0");
    if (p < 2.0 && eps == 0.0) config_fail(t.key("eps"), "must be > 0 when p < 2");
    spec = DissipationSpec::ppower(m, p, eps);
  } else if (kind == "quadratic") {
    const json& rows = t.raw("A");
    if (!rows.is_array() || static_cast<int>(rows.size()) != m)
      config_fail(t.key("A"), "expected an m x m array");
    Eigen::MatrixXd A(m, m);
    for (int i = 0; i < m; ++i) {
      if (!rows[i].is_array() || static_cast<int>(rows[i].size()) != m)
        config_fail(t.key("A"), "expected an m x m array");
      for (int j = 0; j < m; ++j) {
        if (!rows[i][j].is_number()) config_fail(t.key("A"), "entries must be numbers");
        A(i, j) = rows[i][j].get<double>();
      }
    }
    try {
      spec = DissipationSpec::quadratic(A);
    } catch (const Error& e) {
      config_fail(t.key("A"), e.what());
    }
  } else if (kind == "identity") {
    spec = DissipationSpec::identity(m);
  } else {
    config_fail(t.key("kind"), "expected ppower, quadratic or identity");
  }
  t.finish();
  return spec;
}

EnergySpec parse_F(Table t, int m, int n) {
  const std::string kind = t.string("kind", "ppower");
  EnergySpec spec;
  if (kind == "ppower") {
    const double p = t.number("p");
    if (!(p > 1.0)) config_fail(t.key("p"), "must be > 1");
    const double eps = t.number("eps", 0.0);
    if (!(eps >= 0.0)) config_fail(t.key("eps"), "must be >= 0");
    if (p < 2.0 && eps == 0.0) config_fail(t.key("eps"), "must be > 0 when p < 2");
    spec = EnergySpec::ppower_norm(m, n, p, eps);
  } else if (kind == "quadratic") {
    const double theta = t.number("theta", 1.0);
    if (!(theta > 0.0)) config_fail(t.key("theta"), "must be > 0");
    spec = EnergySpec::quadratic_frobenius(m, n, theta);
  } else {
    config_fail(t.key("kind"), "expected ppower or quadratic");
  }
  t.finish();
  return spec;
}

const std::set<std::string> kCommands{"evolve", "groundstate", "verify", "refine"};
const std::set<std::string> kDatumNames{"zero", "sine_eigenvector", "bump", "random_seeded",
                                        "product_sine_2d"};

bool common_ppower(const DissipationSpec& d, const EnergySpec& e) {
  return d.is_ppower() && e.is_ppower() && d.exponent() == e.exponent();
}

// output helpers -----------------------------------------------------------------

std::string number_or_empty(const std::optional<double>& x) {
  return x ? format_double(*x) : std::string();
}

unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("DNFLOW_NUM_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ConfigError:
    case ErrorKind::UnknownDatum:
      return kExitConfig;
    case ErrorKind::NonConvergence:
    case ErrorKind::ZeroCollapse:
      return kExitNonConvergence;
    case ErrorKind::IoError:
      return kExitIo;
    default:
      return kExitSolver;
  }
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_json(const fs::path& path, const json& j) { write_text_atomic(path, j.dump(2) + "\n"); }

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::IoError, "cannot create output directory " + dir.string() + ": " + ec.message());
}

json series_json(const SeriesReport& s) {
  return {{"monotone_violation", s.monotone_violation}, {"slack", s.slack}, {"pass", s.pass}};
}

// commands -----------------------------------------------------------------------

class Runner {
 public:
  Runner(ExperimentConfig cfg, const RunOptions& opt) : cfg_(std::move(cfg)), opt_(opt) {
    if (opt.seed) cfg_.seed = *opt.seed;
    if (opt.out_dir) cfg_.output_dir = *opt.out_dir;
    threads_ = resolve_threads(opt.threads);
  }

  const fs::path& out() const { return cfg_.output_dir; }

  int run(const std::string& command) {
    ensure_dir(out());
    std::error_code ec;
    fs::remove(out() / "error.json", ec);
    summary_ = {{"command", command}, {"seed", cfg_.seed}};
    if (cfg_.timestamp) summary_["timestamp"] = utc_timestamp();
    int code = kExitOk;
    if (command == "evolve") code = evolve_cmd(false);
    else if (command == "verify") code = evolve_cmd(true);
    else if (command == "groundstate") code = groundstate_cmd();
    else code = refine_cmd();
    summary_["exit_code"] = code;
    write_json(out() / "summary.json", summary_);
    return code;
  }

 private:
  VectorField initial() const {
    if (!cfg_.initial.snapshot.empty()) return read_snapshot(cfg_.initial.snapshot);
    return builtin_initial(cfg_.initial.name, cfg_.initial.params, cfg_.grid, cfg_.m, cfg_.seed);
  }

  StepConfig step_config() const {
    StepConfig sc;
    sc.residual_tol = cfg_.residual_tol;
    sc.max_iter = cfg_.max_iter;
    sc.eps_schedule = cfg_.eps_schedule;
    return sc;
  }

  void log(const std::string& line) const {
    if (!opt_.quiet) std::cerr << line << "\n";
  }

  std::optional<double> upsilon_h() const {
    if (cfg_.upsilon) return cfg_.upsilon;
    if (!cfg_.upsilon_auto) return std::nullopt;
    const auto gs = direct_rayleigh_minimize(cfg_.grid, cfg_.psi.exponent(), cfg_.m, cfg_.seed);
    return gs.upsilon;
  }

  bool wants(const std::string& column) const {
    return std::find(cfg_.series.begin(), cfg_.series.end(), column) != cfg_.series.end();
  }

  int evolve_cmd(bool verify) {
    const VectorField g = initial();
    Trajectory traj = evolve(g, cfg_.psi, cfg_.F, cfg_.T, cfg_.N, step_config());
    log("evolved " + std::to_string(traj.steps()) + " steps, tau = " + format_double(traj.tau));
    const auto ups = upsilon_h();
    std::optional<double> rate;
    if (ups) rate = discrete_upsilon(traj.tau, *ups);
    write_series(traj, rate);

    write_snapshot(out() / "final.csv", traj.fields.back());
    if (cfg_.snapshot_every > 0)
      for (int k = 0; k <= traj.steps(); k += cfg_.snapshot_every)
        write_snapshot(out() / ("snapshot_" + std::to_string(k) + ".csv"), traj.fields[k]);

    int max_iter = 0;
    for (const auto& s : traj.stats) max_iter = std::max(max_iter, s.iterations);
    summary_["steps"] = traj.steps();
    summary_["T"] = cfg_.T;
    summary_["tau"] = traj.tau;
    summary_["residual_tol"] = traj.residual_tol;
    summary_["max_newton_iterations"] = max_iter;
    summary_["final_energy"] = stored_energy(traj.fields.back(), traj.energy);
    if (ups) {
      summary_["upsilon_h"] = *ups;
      summary_["upsilon_discrete"] = *rate;
    }
    if (!verify) return kExitOk;

    bool all = true;
    json checks;
    const EnergyReport er = energy_series(traj);
    checks["energy_inequality"] = {{"max_step_defect", er.max_step_defect},
                                   {"max_identity_defect", er.max_identity_defect},
                                   {"pass", er.pass}};
    all = all && er.pass;
    if (traj.steps() >= 2) {
      const auto ds = dissipation_series(traj);
      checks["dissipation_monotone"] = series_json(ds);
      all = all && ds.pass;
    }
    if (cfg_.m == 1) {
      const auto mp = max_principle_check(traj);
      checks["max_principle"] = series_json(mp);
      all = all && mp.pass;
    }
    if (common_ppower(cfg_.psi, cfg_.F)) {
      const double p = cfg_.psi.exponent();
      if (lp_norm(g, p) > 0.0) {
        const auto rs = rayleigh_series(traj, p);
        checks["rayleigh_monotone"] = series_json(rs);
        all = all && rs.pass;
      }
      if (traj.steps() >= 3) {
        const auto cv = energy_convexity_check(traj, p);
        checks["energy_convexity"] = series_json(cv);
        all = all && cv.pass;
      }
      if (rate) {
        const auto sr = scaled_energy_report(traj, *rate);
        checks["decay_bound"] = {{"violation", sr.decay_bound_violation}, {"pass", sr.decay_bound_pass}};
        checks["scaled_energy_monotone"] = series_json(sr.series);
        all = all && sr.decay_bound_pass && sr.series.pass;
      }
    }
    summary_["checks"] = checks;
    summary_["pass"] = all;
    log(all ? "all checks passed" : "some checks failed");
    return all ? kExitOk : kExitCheckFailed;
  }

  void write_series(const Trajectory& traj, std::optional<double> rate) const {
    const bool ppower = common_ppower(traj.dissipation, traj.energy);
    const double pF = traj.energy.exponent();
    SeriesTable table;
    table.header = series_columns();
    const EnergyReport er = energy_series(traj);
    for (int k = 0; k <= traj.steps(); ++k) {
      const VectorField& v = traj.fields[k];
      std::vector<std::optional<double>> row(table.header.size());
      row[0] = k;
      row[1] = traj.time(k);
      if (wants("energy")) row[2] = er.series.values[k];
      if (wants("cumulative_dissipation")) row[3] = er.cumulative_dissipation[k];
      if (wants("dissipation_potential") && k >= 1) {
        const VectorField w = traj.velocity(k);
        std::vector<double> x(traj.m);
        double s = 0.0;
        for (int i = 0; i < w.node_count(); ++i) {
          for (int c = 0; c < traj.m; ++c) x[c] = w(c, i);
          s += dissipation_potential(traj.dissipation, x);
        }
        row[4] = s * traj.grid.cell_volume();
      }
      if (wants("sup_norm")) row[5] = v.sup_norm();
      if (wants("rayleigh") && lp_norm(v, pF) > 0.0) row[6] = rayleigh_quotient(v, pF);
      if (wants("scaled_energy") && ppower && rate)
        row[7] = std::exp(pF * *rate * traj.time(k)) * std::pow(w1p_seminorm(v, pF), pF);
      table.rows.push_back(std::move(row));
    }
    write_text_atomic(out() / "series.csv", series_to_string(table));
  }

  int groundstate_cmd() {
    const double p = cfg_.psi.exponent();
    const VectorField g = initial();
    FlowConfig fc;
    if (cfg_.psi.eps() > 0.0) fc.eps = cfg_.psi.eps();
    fc.eps_schedule = cfg_.eps_schedule;
    fc.step_max_iter = cfg_.max_iter;
    const GroundStateReport flow = ground_state_via_flow(g, p, fc);
    log("flow: Lambda = " + format_double(flow.lambda_estimate) + " after " +
        std::to_string(flow.iterations) + " sweeps");
    const GroundStateReport direct = direct_rayleigh_minimize(cfg_.grid, p, cfg_.m, cfg_.seed);
    log("direct: Lambda = " + format_double(direct.lambda_estimate));

    write_snapshot(out() / "profile.csv", flow.profile);
    write_snapshot(out() / "profile_direct.csv", direct.profile);
    SeriesTable hist;
    hist.header = {"sweep", "rayleigh"};
    for (std::size_t i = 0; i < flow.rayleigh_history.size(); ++i)
      hist.rows.push_back({static_cast<double>(i), flow.rayleigh_history[i]});
    write_text_atomic(out() / "rayleigh.csv", series_to_string(hist));

    summary_["p"] = p;
    summary_["m"] = cfg_.m;
    summary_["lambda_estimate"] = flow.lambda_estimate;
    summary_["upsilon"] = flow.upsilon;
    summary_["sweeps"] = flow.iterations;
    summary_["converged"] = flow.converged;
    summary_["el_residual"] = el_residual(flow.profile, flow.lambda_estimate, p);
    summary_["lambda_direct"] = direct.lambda_estimate;
    summary_["direct_iterations"] = direct.iterations;
    summary_["direct_converged"] = direct.converged;
    summary_["relative_gap"] =
        std::abs(flow.lambda_estimate - direct.lambda_estimate) / direct.lambda_estimate;
    return kExitOk;
  }

  int refine_cmd() {
    const VectorField g = initial();
    const RefinementReport rep =
        refinement_study(g, cfg_.psi, cfg_.F, cfg_.T, cfg_.N_list, step_config(), threads_);
    SeriesTable table;
    table.header = {"N", "N_next", "sup_distance", "contraction_ratio"};
    for (std::size_t j = 0; j < rep.pairwise_sup_distances.size(); ++j) {
      std::vector<std::optional<double>> row{static_cast<double>(rep.N_list[j]),
                                             static_cast<double>(rep.N_list[j + 1]),
                                             rep.pairwise_sup_distances[j], std::nullopt};
      if (j >= 1) row[3] = rep.contraction_ratios[j - 1];
      table.rows.push_back(std::move(row));
    }
    write_text_atomic(out() / "refine.csv", series_to_string(table));
    summary_["N_list"] = rep.N_list;
    summary_["sup_distances"] = rep.pairwise_sup_distances;
    summary_["contraction_ratios"] = rep.contraction_ratios;
    summary_["pass"] = rep.pass;
    log(rep.pass ? "distances nonincreasing" : "distances increased along the chain");
    return kExitOk;
  }

  ExperimentConfig cfg_;
  RunOptions opt_;
  unsigned threads_ = 1;
  json summary_;
};

std::optional<fs::path> output_dir_hint(const fs::path& config_path) {
  try {
    std::ifstream in(config_path);
    const json j = json::parse(in);
    return fs::path(j.at("output").at("directory").get<std::string>());
  } catch (...) {
    return std::nullopt;
  }
}

int report_failure(const Error& e, const std::optional<fs::path>& dir) {
  const int code = exit_code_for(e.kind());
  const json rec = {{"error", std::string(to_string(e.kind()))}, {"message", e.what()},
                    {"exit_code", code}};
  std::cerr << rec.dump() << "\n";
  if (dir) {
    try {
      ensure_dir(*dir);
      write_json(*dir / "error.json", rec);
    } catch (const Error&) {
      return kExitIo;
    }
  }
  return code;
}

}  // namespace

// parsing --------------------------------------------------------------------------

ExperimentConfig parse_config(const std::string& json_text, const fs::path& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::ConfigError, std::string("config: not valid JSON: ") + e.what());
  }
  Table top(doc, "");
  ExperimentConfig cfg;
  if (top.has("command")) {
    cfg.command = top.string("command");
    if (!kCommands.count(cfg.command))
      config_fail("command", "expected evolve, groundstate, verify or refine");
  }
  {
    const long long seed = top.integer("seed", 0);
    if (seed < 0) config_fail("seed", "must be >= 0");
    cfg.seed = static_cast<std::uint64_t>(seed);
  }

  Table grid = top.table("grid");
  const long long dim = grid.integer("dim");
  if (dim != 1 && dim != 2) config_fail("grid.dim", "must be 1 or 2");
  const auto lengths = grid.numbers("lengths");
  const auto interior = grid.integers("interior");
  if (static_cast<long long>(lengths.size()) != dim) config_fail("grid.lengths", "needs one entry per axis");
  if (static_cast<long long>(interior.size()) != dim) config_fail("grid.interior", "needs one entry per axis");
  for (double l : lengths)
    if (!(l > 0.0) || !std::isfinite(l)) config_fail("grid.lengths", "entries must be > 0");
  std::vector<int> counts;
  for (long long n : interior) {
    if (n < 1 || n > 100000) config_fail("grid.interior", "entries must lie in [1, 100000]");
    counts.push_back(static_cast<int>(n));
  }
  grid.finish();
  cfg.grid = Grid(lengths, counts);

  const long long m = top.integer("m", 1);
  if (m < 1 || m > 16) config_fail("m", "must lie in [1, 16]");
  cfg.m = static_cast<int>(m);
  cfg.psi = parse_psi(top.table("psi"), cfg.m);
  cfg.F = parse_F(top.table("F"), cfg.m, static_cast<int>(dim));

  if (top.has("run")) {
    Table run = top.table("run");
    cfg.T = run.number("T", 1.0);
    if (!(cfg.T > 0.0)) config_fail("run.T", "must be > 0");
    const long long N = run.integer("N", 0);
    if (N < 0 || N > 10000000) config_fail("run.N", "must lie in [1, 10^7]");
    cfg.N = static_cast<int>(N);
    if (run.has("N_list")) {
      for (long long n : run.integers("N_list")) {
        if (n < 1 || n > 10000000) config_fail("run.N_list", "entries must lie in [1, 10^7]");
        cfg.N_list.push_back(static_cast<int>(n));
      }
    }
    cfg.residual_tol = run.number("residual_tol", 0.0);
    if (cfg.residual_tol < 0.0) config_fail("run.residual_tol", "must be >= 0 (0 selects the default)");
    const long long it = run.integer("max_iter", 200);
    if (it < 1 || it > 100000) config_fail("run.max_iter", "must lie in [1, 100000]");
    cfg.max_iter = static_cast<int>(it);
    if (run.has("eps_schedule")) {
      cfg.eps_schedule = run.numbers("eps_schedule");
      for (std::size_t i = 0; i < cfg.eps_schedule.size(); ++i)
        if (!(cfg.eps_schedule[i] > 0.0) || (i > 0 && cfg.eps_schedule[i] > cfg.eps_schedule[i - 1]))
          config_fail("run.eps_schedule", "must be positive and nonincreasing");
    }
    if (run.has("upsilon")) {
      const json& u = run.raw("upsilon");
      if (u.is_string() && u.get<std::string>() == "auto") cfg.upsilon_auto = true;
      else if (u.is_number() && u.get<double>() > 0.0) cfg.upsilon = u.get<double>();
      else config_fail("run.upsilon", "expected a positive number or \"auto\"");
      if (!common_ppower(cfg.psi, cfg.F))
        config_fail("run.upsilon", "needs p-power psi and F with a common p");
    }
    run.finish();
  }

  if (top.has("initial")) {
    Table init = top.table("initial");
    if (init.has("snapshot")) {
      if (init.has("name")) config_fail("initial", "give either name or snapshot");
      fs::path p = init.string("snapshot");
      if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
      if (!fs::exists(p)) config_fail("initial.snapshot", "file not found: " + p.string());
      cfg.initial.snapshot = p;
    } else {
      cfg.initial.name = init.string("name");
      if (!kDatumNames.count(cfg.initial.name))
        fail(ErrorKind::UnknownDatum, "initial.name: unknown datum '" + cfg.initial.name + "'");
      if (init.has("params")) {
        const json& params = init.raw("params");
        if (!params.is_object()) config_fail("initial.params", "expected a table");
        for (auto it = params.begin(); it != params.end(); ++it) {
          if (!it.value().is_number()) config_fail("initial.params." + it.key(), "expected a number");
          if (it.key() == "seed") config_fail("initial.params.seed", "use the top-level seed");
          cfg.initial.params[it.key()] = it.value().get<double>();
        }
      }
    }
    init.finish();
  } else {
    cfg.initial.name = "sine_eigenvector";
  }

  cfg.series = {series_columns().begin() + 2, series_columns().end()};
  if (top.has("output")) {
    Table output = top.table("output");
    cfg.output_dir = output.string("directory", "out");
    if (output.has("series")) {
      cfg.series.clear();
      const json& s = output.raw("series");
      if (!s.is_array()) config_fail("output.series", "expected an array of column names");
      for (const auto& e : s) {
        const auto& cols = series_columns();
        if (!e.is_string() || std::find(cols.begin() + 2, cols.end(), e.get<std::string>()) == cols.end())
          config_fail("output.series", "unknown column");
        cfg.series.push_back(e.get<std::string>());
      }
    }
    const long long every = output.integer("snapshot_every", 0);
    if (every < 0) config_fail("output.snapshot_every", "must be >= 0");
    cfg.snapshot_every = static_cast<int>(every);
    cfg.timestamp = output.boolean("timestamp", false);
    output.finish();
  }
  top.finish();

  // command-specific requirements
  if (cfg.command == "evolve" || cfg.command == "verify") {
    if (cfg.N < 1) config_fail("run.N", "required, >= 1");
  }
  if (cfg.command == "refine") {
    if (cfg.m != 1) config_fail("m", "refine is defined for m = 1 only");
    if (cfg.N_list.size() < 3) config_fail("run.N_list", "needs a doubling chain of >= 3 entries");
    for (std::size_t i = 1; i < cfg.N_list.size(); ++i)
      if (cfg.N_list[i] != 2 * cfg.N_list[i - 1]) config_fail("run.N_list", "must be a doubling chain");
  }
  if (cfg.command == "groundstate" && !common_ppower(cfg.psi, cfg.F))
    config_fail("F.p", "groundstate needs p-power psi and F with a common p");

  // Build the datum once so that bad parameters surface as config errors.
  if (!cfg.initial.name.empty()) {
    try {
      (void)builtin_initial(cfg.initial.name, cfg.initial.params, cfg.grid, cfg.m, cfg.seed);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::UnknownDatum) throw;
      config_fail("initial.params", e.what());
    }
  } else {
    VectorField snap;
    try {
      snap = read_snapshot(cfg.initial.snapshot);
    } catch (const Error& e) {
      config_fail("initial.snapshot", e.what());
    }
    if (!(snap.grid() == cfg.grid) || snap.m() != cfg.m)
      config_fail("initial.snapshot", "grid or component count differs from the config");
  }
  return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

// initial data ---------------------------------------------------------------------

VectorField builtin_initial(const std::string& name, const std::map<std::string, double>& params,
                            const Grid& grid, int m, std::uint64_t seed) {
  if (!kDatumNames.count(name)) fail(ErrorKind::UnknownDatum, "unknown initial datum '" + name + "'");
  if (m < 1) fail(ErrorKind::InvalidArgument, "component count m must be >= 1");
  std::set<std::string> allowed;
  if (name == "sine_eigenvector") allowed = {"amplitude", "mode"};
  if (name == "product_sine_2d") allowed = {"amplitude", "k0", "k1"};
  if (name == "bump") allowed = {"amplitude", "radius", "center0", "center1"};
  if (name == "random_seeded") allowed = {"lo", "hi", "seed"};
  for (const auto& [k, v] : params) {
    if (!allowed.count(k)) fail(ErrorKind::InvalidArgument, "datum '" + name + "' has no parameter '" + k + "'");
    if (!std::isfinite(v)) fail(ErrorKind::InvalidArgument, "parameter '" + k + "' must be finite");
  }
  auto param = [&](const std::string& k, double fallback) {
    auto it = params.find(k);
    return it == params.end() ? fallback : it->second;
  };
  auto positive_int = [&](const std::string& k) {
    const double v = param(k, 1.0);
    if (v < 1.0 || v != std::floor(v)) fail(ErrorKind::InvalidArgument, "parameter '" + k + "' must be a positive integer");
    return v;
  };

  const int nodes = grid.node_count();
  std::vector<double> values(static_cast<std::size_t>(m) * nodes, 0.0);
  constexpr double pi = std::numbers::pi;
  if (name == "random_seeded") {
    const double lo = param("lo", -1.0), hi = param("hi", 1.0);
    if (!(lo < hi)) fail(ErrorKind::InvalidArgument, "random_seeded needs lo < hi");
    const double s = param("seed", static_cast<double>(seed));
    if (s < 0.0 || s != std::floor(s)) fail(ErrorKind::InvalidArgument, "parameter 'seed' must be a nonnegative integer");
    std::mt19937_64 rng(params.count("seed") ? static_cast<std::uint64_t>(s) : seed);
    for (double& v : values) v = lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
    return VectorField(grid, m, std::move(values));
  }
  if (name == "zero") return VectorField(grid, m, std::move(values));

  std::vector<double> base(nodes);
  const double amplitude = param("amplitude", 1.0);
  if (name == "sine_eigenvector") {
    const double mode = positive_int("mode");
    for (int i = 0; i < nodes; ++i) {
      double v = amplitude;
      for (int a = 0; a < grid.dim(); ++a) v *= std::sin(mode * pi * grid.node_coordinate(i, a) / grid.length(a));
      base[i] = v;
    }
  } else if (name == "product_sine_2d") {
    if (grid.dim() != 2) fail(ErrorKind::InvalidArgument, "product_sine_2d needs a 2D grid");
    const double k0 = positive_int("k0"), k1 = positive_int("k1");
    for (int i = 0; i < nodes; ++i)
      base[i] = amplitude * std::sin(k0 * pi * grid.node_coordinate(i, 0) / grid.length(0)) *
                std::sin(k1 * pi * grid.node_coordinate(i, 1) / grid.length(1));
  } else {  // bump
    const double radius = param("radius", 0.25);
    if (!(radius > 0.0)) fail(ErrorKind::InvalidArgument, "bump radius must be > 0");
    const double c[2] = {param("center0", 0.5), param("center1", 0.5)};
    for (int i = 0; i < nodes; ++i) {
      double r2 = 0.0;
      for (int a = 0; a < grid.dim(); ++a) {
        const double y = (grid.node_coordinate(i, a) / grid.length(a) - c[a]) / radius;
        r2 += y * y;
      }
      base[i] = r2 < 1.0 ? amplitude * (1.0 - r2) * (1.0 - r2) : 0.0;
    }
  }
  for (int comp = 0; comp < m; ++comp)
    for (int i = 0; i < nodes; ++i) values[static_cast<std::size_t>(comp) * nodes + i] = base[i] / (comp + 1);
  return VectorField(grid, m, std::move(values));
}

// series CSV -----------------------------------------------------------------------

const std::vector<std::string>& series_columns() {
  static const std::vector<std::string> cols{"step",      "time",     "energy",
                                             "cumulative_dissipation", "dissipation_potential",
                                             "sup_norm",  "rayleigh", "scaled_energy"};
  return cols;
}

std::string series_to_string(const SeriesTable& table) {
  std::string out;
  for (std::size_t i = 0; i < table.header.size(); ++i) out += (i ? "," : "") + table.header[i];
  out += "\n";
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size())
      fail(ErrorKind::InvalidArgument, "series row width differs from the header");
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (row[i] && !std::isfinite(*row[i]))
        fail(ErrorKind::InvalidArgument, "series value is not finite");
      if (i) out += ",";
      out += number_or_empty(row[i]);
    }
    out += "\n";
  }
  return out;
}

SeriesTable series_from_string(const std::string& text) {
  SeriesTable table;
  std::istringstream in(text);
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const auto pos = s.find(',', start);
      cells.push_back(s.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
      if (pos == std::string::npos) break;
      start = pos + 1;
    }
    return cells;
  };
  if (!std::getline(in, line) || line.empty()) fail(ErrorKind::IoError, "series CSV: missing header");
  table.header = split(line);
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != table.header.size())
      fail(ErrorKind::IoError, "series CSV line " + std::to_string(line_no) + ": wrong number of cells");
    std::vector<std::optional<double>> row;
    for (const auto& c : cells) {
      if (c.empty()) {
        row.emplace_back();
        continue;
      }
      char* end = nullptr;
      const double v = std::strtod(c.c_str(), &end);
      if (end != c.c_str() + c.size() || !std::isfinite(v))
        fail(ErrorKind::IoError, "series CSV line " + std::to_string(line_no) + ": bad number '" + c + "'");
      row.emplace_back(v);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

// entry points ---------------------------------------------------------------------

int run_experiment(const std::string& command, ExperimentConfig config, const RunOptions& options) {
  std::optional<fs::path> dir = options.out_dir ? options.out_dir : std::optional<fs::path>(config.output_dir);
  try {
    if (!kCommands.count(command)) config_fail("command", "unknown command '" + command + "'");
    if (!config.command.empty() && config.command != command)
      config_fail("command", "config is for '" + config.command + "', not '" + command + "'");
    if (command == "evolve" || command == "verify") {
      if (config.N < 1) config_fail("run.N", "required, >= 1");
    } else if (command == "refine") {
      if (config.m != 1) config_fail("m", "refine is defined for m = 1 only");
      if (config.N_list.size() < 3) config_fail("run.N_list", "needs a doubling chain of >= 3 entries");
    } else if (!common_ppower(config.psi, config.F)) {
      config_fail("F.p", "groundstate needs p-power psi and F with a common p");
    }
    Runner runner(std::move(config), options);
    return runner.run(command);
  } catch (const Error& e) {
    return report_failure(e, dir);
  } catch (const std::exception& e) {
    return report_failure(Error(ErrorKind::InvalidArgument, e.what()), dir);
  }
}

int run_experiment(const std::string& command, const fs::path& config_path, const RunOptions& options) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(config_path);
  } catch (const Error& e) {
    std::optional<fs::path> dir = options.out_dir ? options.out_dir : output_dir_hint(config_path);
    return report_failure(e, dir);
  }
  return run_experiment(command, std::move(cfg), options);
}

}  // namespace dnflow

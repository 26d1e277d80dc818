#include "habitret/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <ostream>
#include <sstream>
#include <vector>

#include "habitret/analytics.hpp"
#include "habitret/dual.hpp"
#include "habitret/lifecycle.hpp"
#include "habitret/montecarlo.hpp"
#include "habitret/policy.hpp"

namespace habitret::cli {

using json = nlohmann::json;

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string format_number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

namespace {

std::string exact(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

std::string RunManifest::canonical() const {
  std::ostringstream os;
  os << "version=" << kVersion << '\n' << "command=" << command << '\n';
  for (const auto& f : param_fields()) os << f.name << '=' << exact(params.*f.member) << '\n';
  os << "tau=" << exact(tau) << '\n'
     << "grid_step=" << exact(grid_step) << '\n'
     << "paths=" << paths << '\n'
     << "dt=" << exact(dt) << '\n'
     << "seed=" << seed << '\n'
     << "record=" << record << '\n'
     << "scheme=" << scheme << '\n'
     << "only=" << only << '\n'
     << "dy=" << exact(dy) << '\n'
     << "dtau=" << exact(dtau) << '\n';
  return os.str();
}

std::string RunManifest::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical())));
  return buf;
}

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Settings {
  std::string preset;
  std::string config;
  double tau = std::numeric_limits<double>::quiet_NaN();
  double grid_step = 0.5;
  std::size_t paths = 10000;
  double dt = 1.0 / 50.0;
  std::uint64_t seed = 20240611;
  std::string out;
  std::size_t record = 10;
  std::string scheme = "milstein";
  std::string only;
  double dy = 0.01;
  double dtau = 1.0;
};

struct Options {
  CLI::Option* preset = nullptr;
  CLI::Option* paths = nullptr;
};

Options add_common(CLI::App* sub, Settings& s) {
  Options o;
  o.preset = sub->add_option("--preset", s.preset, "Named parameter preset (baseline)")->envname("HABITRET_PRESET");
  sub->add_option("--config", s.config, "Parameter file of `key = value` lines")->envname("HABITRET_CONFIG");
  sub->add_option("--tau", s.tau, "Retirement time in years (default tau_st)")->envname("HABITRET_TAU");
  sub->add_option("--grid-step", s.grid_step, "Step of tau and time grids, years")
      ->envname("HABITRET_GRID_STEP")
      ->check(CLI::PositiveNumber);
  sub->add_option("--out", s.out, "Output directory")->envname("HABITRET_OUT");
  return o;
}

void add_mc(CLI::App* sub, Settings& s, Options& o) {
  o.paths = sub->add_option("--paths", s.paths, "Number of simulated paths")->envname("HABITRET_PATHS");
  sub->add_option("--dt", s.dt, "Simulation step, years")->envname("HABITRET_DT")->check(CLI::PositiveNumber);
  sub->add_option("--seed", s.seed, "Random seed")->envname("HABITRET_SEED");
  sub->add_option("--scheme", s.scheme, "Wealth scheme: milstein or euler")
      ->envname("HABITRET_SCHEME")
      ->check(CLI::IsMember({"milstein", "euler"}));
}

ModelParams resolve_params(const Settings& s, const Options& o) {
  ModelParams p;
  if (s.config.empty()) {
    p = preset_params(s.preset.empty() ? "baseline" : s.preset);
  } else if (o.preset->count() > 0) {
    const ModelParams base = preset_params(s.preset);
    p = load_params_file(s.config, &base);
  } else {
    p = load_params_file(s.config);
  }
  p.validate();
  return p;
}

double resolve_tau(const Settings& s, const ModelParams& p) {
  const double tau = std::isnan(s.tau) ? p.tau_st : s.tau;
  if (tau < p.tau_min || tau > p.tau_max) throw UsageError("--tau must lie in [tau_min, tau_max]");
  return tau;
}

json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json params_json(const ModelParams& p) {
  json j = json::object();
  for (const auto& f : param_fields()) j[std::string(f.name)] = p.*f.member;
  return j;
}

json manifest_json(const RunManifest& m) {
  return {{"command", m.command}, {"hash", m.hash()}, {"version", std::string(kVersion)}, {"params", params_json(m.params)}};
}

std::filesystem::path out_dir(const RunManifest& m) {
  const std::filesystem::path dir = m.out_dir.empty() ? "." : m.out_dir;
  std::filesystem::create_directories(dir);
  return dir;
}

class Csv {
public:
  explicit Csv(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  void row(std::vector<std::string> cells) { rows_.push_back(std::move(cells)); }
  void row(const std::vector<double>& values) {
    std::vector<std::string> cells;
    for (double v : values) cells.push_back(format_number(v));
    rows_.push_back(std::move(cells));
  }

  void write(const std::filesystem::path& path, const RunManifest& m) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << "# habitret " << kVersion << " manifest=" << m.hash() << ' ' << m.command << '\n';
    emit(f, columns_);
    for (const auto& r : rows_) emit(f, r);
  }

private:
  static void emit(std::ostream& os, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
    os << '\n';
  }
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

void emit_json(const json& j, const RunManifest& m, std::ostream& out) {
  const std::string text = j.dump(2) + "\n";
  out << text;
  if (!m.out_dir.empty()) {
    std::ofstream f(out_dir(m) / (m.command + ".json"), std::ios::binary);
    f << text;
  }
}

// ---------------------------------------------------------------------------

int cmd_solve(const RunManifest& m, std::ostream& out) {
  const DualSolution d = solve_nu(m.params, m.tau);
  json j = {{"A", d.A},
            {"z", d.z},
            {"z_closed", compute_z_closed(m.params, m.tau)},
            {"budget", d.budget},
            {"floor_budget", d.floor_budget},
            {"nu", number(d.nu)},
            {"nu_infinite", d.nu_infinite},
            {"q_star", number(d.tangency.q_star)},
            {"tangency_degenerate", d.tangency.degenerate},
            {"residual", d.residual},
            {"tau", d.tau},
            {"theta", m.params.theta()},
            {"manifest", manifest_json(m)}};
  emit_json(j, m, out);
  return 0;
}

int cmd_curves(const RunManifest& m, std::ostream&) {
  const ModelParams& p = m.params;
  const auto grid = TimeGrid::with_step(p.T, m.grid_step, standard_breakpoints(p, m.tau));
  const std::pair<CurveKind, const char*> kinds[] = {{CurveKind::F, "1"},
                                                     {CurveKind::N, "1"},
                                                     {CurveKind::O, "years"},
                                                     {CurveKind::discount, "1"},
                                                     {CurveKind::benefit, "currency"}};
  const auto dir = out_dir(m);
  for (const auto& [kind, unit] : kinds) {
    const auto curve = tabulate(kind, p, m.tau, grid);
    Csv csv({"t [years]", std::string(curve_name(kind)) + " [" + unit + "]"});
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double t = grid[i];
      const bool jump = (kind == CurveKind::F || kind == CurveKind::N) && t == m.tau && t > 0.0 && t < p.T;
      if (jump) {
        const double left = compute_F(p, m.tau, t, Side::left);
        csv.row({t, kind == CurveKind::F ? left : 1.0 + left});
      }
      csv.row({t, curve.values[i]});
    }
    csv.write(dir / ("curves_" + std::string(curve_name(kind)) + ".csv"), m);
  }
  return 0;
}

int cmd_retire(const RunManifest& m, std::ostream& out) {
  const auto rep = optimize_tau(m.params, m.grid_step);
  json table = json::array();
  for (std::size_t i = 0; i < rep.tau_grid.size(); ++i)
    table.push_back({{"tau", rep.tau_grid[i]}, {"V", number(rep.V_values[i])}, {"A", rep.A_values[i]}});
  json j = {{"tau_star", rep.tau_star},
            {"V_star", rep.V_star},
            {"boundary", rep.boundary},
            {"table", table},
            {"manifest", manifest_json(m)}};
  emit_json(j, m, out);
  return 0;
}

int cmd_statics(const RunManifest& m, const Settings& s, std::ostream&) {
  const auto table = comparative_statics_table(m.params, s.dy, s.dtau, m.grid_step);
  Csv csv({"parameter", "sign", "mixed_difference [utility/(unit*years)]", "tau_star [years]"});
  for (const auto& r : table)
    csv.row(std::vector<std::string>{r.parameter, std::string(to_string(r.sign)), format_number(r.mixed),
                                     format_number(r.tau_star)});
  csv.write(out_dir(m) / "statics.csv", m);
  return 0;
}

// Wide CE table: one column per variant, rows on the union grid, left and
// right rows at each variant's tau.
struct CeColumn {
  std::string name;
  CertaintyEquivalent ce;
};

void write_ce(const std::filesystem::path& path, const RunManifest& m, const std::vector<CeColumn>& cols,
              std::vector<double> CertaintyEquivalent::*field, const std::string& quantity) {
  std::vector<std::pair<double, Side>> rows;
  for (const auto& c : cols)
    for (std::size_t i = 0; i < c.ce.t.size(); ++i) rows.emplace_back(c.ce.t[i], c.ce.side[i]);
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return a.first < b.first || (a.first == b.first && a.second == Side::left && b.second == Side::right);
  });
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  std::vector<std::string> header{"t [years]"};
  for (const auto& c : cols) header.push_back(quantity + " " + c.name + " [currency/year]");
  Csv csv(header);
  for (const auto& [t, side] : rows) {
    std::vector<double> r{t};
    for (const auto& c : cols) {
      auto i = c.ce.find(t, side);
      if (i == CertaintyEquivalent::npos) i = c.ce.find(t, Side::right);
      r.push_back(i == CertaintyEquivalent::npos ? std::nan("") : (c.ce.*field)[i]);
    }
    csv.row(r);
  }
  csv.write(path, m);
}

template <class Mutate>
std::vector<CeColumn> ce_sweep(const ModelParams& base, double tau, double step, const std::vector<double>& values,
                               const std::vector<std::string>& labels, Mutate&& mutate,
                               std::vector<double> extra_taus = {}) {
  std::vector<CeColumn> cols(values.size());
  std::vector<double> taus = extra_taus.empty() ? std::vector<double>{tau} : extra_taus;
  std::vector<double> cuts = standard_breakpoints(base, tau);
  cuts.insert(cuts.end(), taus.begin(), taus.end());
  for (std::size_t i = 0; i < values.size(); ++i) {
    ModelParams p = base;
    const double t_i = mutate(p, values[i]);
    const auto grid = TimeGrid::with_step(p.T, step, cuts);
    cols[i] = {labels[i], certainty_equivalent_curves(solve_nu(p, t_i), grid)};
  }
  return cols;
}

int cmd_figures(const RunManifest& m, std::ostream&) {
  const ModelParams& p = m.params;
  const auto dir = out_dir(m);
  std::vector<std::string> wanted;
  {
    std::stringstream ss(m.only);
    for (std::string item; std::getline(ss, item, ',');)
      if (!item.empty()) wanted.push_back(item);
  }
  auto want = [&](const std::string& name) {
    return wanted.empty() || std::find(wanted.begin(), wanted.end(), name) != wanted.end();
  };
  const double step = m.grid_step;

  if (want("fig1")) {
    const auto grid = TimeGrid::with_step(p.T, step, standard_breakpoints(p, m.tau));
    const auto ce = certainty_equivalent_curves(solve_nu(p, m.tau), grid);
    Csv csv({"t [years]", "C_hat [currency/year]", "h_hat [currency/year]"});
    for (std::size_t i = 0; i < ce.t.size(); ++i) csv.row({ce.t[i], ce.C_hat[i], ce.h_hat[i]});
    csv.write(dir / "fig1.csv", m);
  }
  if (want("fig2") || want("fig3")) {
    const std::vector<double> taus{35.0, 40.0, 45.0};
    const auto cols = ce_sweep(p, m.tau, step, taus, {"tau=35", "tau=40", "tau=45"},
                               [](ModelParams&, double v) { return v; }, taus);
    if (want("fig2")) write_ce(dir / "fig2.csv", m, cols, &CertaintyEquivalent::c_hat, "c_hat");
    if (want("fig3")) write_ce(dir / "fig3.csv", m, cols, &CertaintyEquivalent::C_hat, "C_hat");
  }
  if (want("fig4")) {
    const PolicyEvaluator pol(solve_nu(p, m.tau));
    const auto grid = TimeGrid::with_step(p.T, step, standard_breakpoints(p, m.tau));
    Csv csv({"t [years]", "E_pi [currency]"});
    for (double t : grid.nodes()) {
      if (t >= p.T) break;
      if (t == p.tau_min && t > 0.0) csv.row({t, pol.expected_portfolio(t, Side::left)});
      csv.row({t, pol.expected_portfolio(t, Side::right)});
    }
    csv.write(dir / "fig4.csv", m);
  }
  struct Sweep {
    const char* name;
    std::vector<std::string> labels;
    std::vector<double> values;
    std::function<void(ModelParams&, double)> apply;
  };
  const std::vector<Sweep> sweeps{
      {"fig5", {"W0=4/D=2", "W0=10/D=6", "W0=16/D=10"}, {4.0, 10.0, 16.0}, [](ModelParams& q, double v) {
         q.W0 = v;
         q.D = (2.0 * v - 2.0) / 3.0;  // (4,2), (10,6), (16,10)
       }},
      {"fig6", {"psi=eta=0", "psi=eta=0.025", "psi=eta=0.05", "psi=eta=0.075"}, {0.0, 0.025, 0.05, 0.075}, [](ModelParams& q, double v) { q.psi = v; q.eta = v; }},
      {"fig7", {"l=0.4", "l=0.6", "l=0.8", "l=1"}, {0.4, 0.6, 0.8, 1.0}, [](ModelParams& q, double v) { q.l = v; }},
      {"fig8", {"m=0.1", "m=0.3", "m=0.6", "m=1"}, {0.1, 0.3, 0.6, 1.0}, [](ModelParams& q, double v) { q.m = v; }},
      {"fig9", {"h0=3", "h0=6", "h0=9"}, {3.0, 6.0, 9.0}, [](ModelParams& q, double v) { q.h0 = v; }},
  };
  for (const auto& sw : sweeps) {
    if (!want(sw.name)) continue;
    const double tau = m.tau;
    const auto cols = ce_sweep(p, tau, step, sw.values, sw.labels, [&](ModelParams& q, double v) {
      sw.apply(q, v);
      return tau;
    });
    write_ce(dir / (std::string(sw.name) + ".csv"), m, cols, &CertaintyEquivalent::C_hat, "C_hat");
  }
  if (want("fig10") || want("fig11") || want("fig12")) {
    std::vector<double> taus;
    for (double tau = p.tau_min; tau <= p.tau_max + 1e-9; tau += step) taus.push_back(std::min(tau, p.tau_max));
    std::vector<double> A(taus.size()), V(taus.size()), Vpin(taus.size());
    const bool need_v = want("fig12"), need_pin = want("fig11");
#pragma omp parallel for schedule(dynamic)
    for (long long k = 0; k < static_cast<long long>(taus.size()); ++k) {
      const auto i = static_cast<std::size_t>(k);
      A[i] = compute_A(p, taus[i]);
      if (need_v) V[i] = value_of_tau(p, taus[i]);
      if (need_pin) Vpin[i] = value_of_tau(pinned_wealth_params(p, taus[i]), taus[i]);
    }
    auto write = [&](const char* name, const char* col, const std::vector<double>& v) {
      Csv csv({"tau [years]", col});
      for (std::size_t i = 0; i < taus.size(); ++i) csv.row({taus[i], v[i]});
      csv.write(dir / (std::string(name) + ".csv"), m);
    };
    if (want("fig10")) write("fig10", "A [currency]", A);
    if (need_pin) write("fig11", "V_pinned [utility]", Vpin);
    if (need_v) write("fig12", "V [utility]", V);
  }
  return 0;
}

SimConfig sim_config(const RunManifest& m) {
  SimConfig c;
  c.n_paths = m.paths;
  c.dt = m.dt;
  c.seed = m.seed;
  c.scheme = m.scheme == "euler" ? WealthScheme::euler : WealthScheme::milstein;
  c.record_paths = m.record;
  return c;
}

int cmd_paths(const RunManifest& m, std::ostream&) {
  const PolicyEvaluator pol(solve_nu(m.params, m.tau));
  const auto ens = simulate(pol, sim_config(m));
  Csv csv({"path", "t [years]", "H [1]", "W [currency/year]", "C [currency/year]", "h [currency/year]",
           "X_sim [currency]", "X_formula [currency]"});
  for (std::size_t k = 0; k < ens.trajectories.size(); ++k)
    for (const auto& r : ens.trajectories[k])
      csv.row({static_cast<double>(k), r.t, r.H, r.W, r.C, r.h, r.X_sim, r.X_formula});
  csv.write(out_dir(m) / "paths.csv", m);
  return 0;
}

int cmd_verify(const RunManifest& m, std::ostream& out) {
  const PolicyEvaluator pol(solve_nu(m.params, m.tau));
  const auto ens = simulate(pol, sim_config(m));
  const auto rep = verify_identities(ens);
  json checks = json::array();
  for (const auto& c : rep.checks)
    checks.push_back({{"name", c.name},
                      {"estimate", number(c.estimate)},
                      {"target", number(c.target)},
                      {"se", number(c.se)},
                      {"score", number(c.score)},
                      {"pass", c.pass},
                      {"informational", c.informational}});
  json j = {{"checks", checks},
            {"all_pass", rep.all_pass()},
            {"n_paths", rep.n_paths},
            {"dt", rep.dt},
            {"A", ens.A},
            {"budget", ens.budget},
            {"X0_formula", ens.X0_formula},
            {"tau", ens.tau},
            {"manifest", manifest_json(m)}};
  emit_json(j, m, out);
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Optimal consumption, investment and retirement under habit formation"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  Settings s;

  struct Sub {
    CLI::App* app;
    Options opts;
  };
  std::vector<Sub> subs;
  subs.reserve(8);
  auto add = [&](const char* name, const char* help) {
    CLI::App* sub = app.add_subcommand(name, help);
    subs.push_back({sub, add_common(sub, s)});
    return &subs.back();
  };
  add("solve", "Solve the multiplier nu for one tau (JSON)");
  add("curves", "Write F, N, O, discount and benefit curves (CSV)");
  add("retire", "Grid search of V(tau) and tau* (JSON)");
  Sub* statics = add("statics", "Comparative statics signs (CSV)");
  statics->app->add_option("--dy", s.dy, "Relative parameter step")->check(CLI::PositiveNumber);
  statics->app->add_option("--dtau", s.dtau, "Retirement-time step, years")->check(CLI::PositiveNumber);
  Sub* figures = add("figures", "Write fig1..fig12 CSV files");
  figures->app->add_option("--only", s.only, "Comma-separated subset, e.g. fig1,fig12");
  Sub* paths = add("paths", "Simulate and dump the first paths (CSV)");
  add_mc(paths->app, s, paths->opts);
  paths->app->add_option("--record", s.record, "Number of paths to dump")->envname("HABITRET_RECORD");
  Sub* verify = add("verify", "Monte Carlo check of the budget and wealth identities (JSON)");
  add_mc(verify->app, s, verify->opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  const Sub* active = nullptr;
  for (const auto& sub : subs)
    if (sub.app->parsed()) active = &sub;

  try {
    RunManifest m;
    m.command = active->app->get_name();
    m.params = resolve_params(s, active->opts);
    m.tau = resolve_tau(s, m.params);
    m.grid_step = s.grid_step;
    m.out_dir = s.out;
    if (m.command == "paths" || m.command == "verify") {
      m.paths = s.paths;
      if (m.command == "paths" && active->opts.paths->count() == 0) m.paths = std::max<std::size_t>(2, s.record + s.record % 2);
      m.dt = s.dt;
      m.seed = s.seed;
      m.scheme = s.scheme;
      m.record = m.command == "paths" ? s.record : 0;
      if (m.paths < 2 || m.paths % 2 != 0) throw UsageError("--paths must be an even number >= 2");
    }
    if (m.command == "figures") m.only = s.only;
    if (m.command == "statics") {
      m.dy = s.dy;
      m.dtau = s.dtau;
    }

    if (m.command == "solve") return cmd_solve(m, out);
    if (m.command == "curves") return cmd_curves(m, out);
    if (m.command == "retire") return cmd_retire(m, out);
    if (m.command == "statics") return cmd_statics(m, s, out);
    if (m.command == "figures") return cmd_figures(m, out);
    if (m.command == "paths") return cmd_paths(m, out);
    return cmd_verify(m, out);
  } catch (const InfeasibleError& e) {
    err << "habitret: " << e.what() << '\n';
    return 2;
  } catch (const ConfigError& e) {
    err << "habitret: config error: " << e.what() << '\n';
    return 1;
  } catch (const UsageError& e) {
    err << "habitret: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    err << "habitret: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "habitret: error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace habitret::cli

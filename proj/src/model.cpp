#include "habitret/model.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>

namespace habitret {

namespace {

constexpr std::array<ParamField, 23> kFields{{
    {"r", &ModelParams::r},
    {"mu", &ModelParams::mu},
    {"sigma", &ModelParams::sigma},
    {"alpha", &ModelParams::alpha},
    {"beta", &ModelParams::beta},
    {"W0", &ModelParams::W0},
    {"k", &ModelParams::k},
    {"D", &ModelParams::D},
    {"xi", &ModelParams::xi},
    {"zeta", &ModelParams::zeta},
    {"tau_st", &ModelParams::tau_st},
    {"T", &ModelParams::T},
    {"tau_min", &ModelParams::tau_min},
    {"tau_max", &ModelParams::tau_max},
    {"psi", &ModelParams::psi},
    {"eta", &ModelParams::eta},
    {"l", &ModelParams::l},
    {"m", &ModelParams::m},
    {"h0", &ModelParams::h0},
    {"L", &ModelParams::L},
    {"rho", &ModelParams::rho},
    {"gamma", &ModelParams::gamma},
    {"kappa", &ModelParams::kappa},
}};

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("invalid model parameters: ") + what);
}

}  // namespace

std::span<const ParamField> param_fields() { return kFields; }

double ModelParams::*find_param(std::string_view name) {
  for (const auto& f : kFields)
    if (f.name == name) return f.member;
  return nullptr;
}

void ModelParams::validate() const {
  for (const auto& f : kFields) require(std::isfinite(this->*f.member), "all fields must be finite");
  require(sigma > 0.0, "sigma > 0");
  require(0.0 <= tau_min && tau_min <= tau_st && tau_st <= tau_max && tau_max <= T,
          "0 <= tau_min <= tau_st <= tau_max <= T");
  require(T > 0.0, "T > 0");
  require(l > 0.0 && l <= 1.0, "0 < l <= 1");
  require(m > 0.0 && m <= 1.0, "0 < m <= 1");
  require(k >= 0.0 && k < 1.0, "0 <= k < 1");
  require(L >= 0.0, "L >= 0");
  require(kappa >= 1.0, "kappa >= 1");
  require(gamma > 0.0 && gamma < 1.0, "0 < gamma < 1");
  require(psi >= 0.0 && eta >= 0.0, "psi, eta >= 0");
  require(W0 >= 0.0 && D >= 0.0 && h0 >= 0.0, "W0, D, h0 >= 0");
}

double ModelParams::benefit_penalty(double tau) const {
  return std::exp(-zeta * std::max(tau_st - tau, 0.0));
}

ModelParams baseline_params() {
  ModelParams p;
  p.r = 0.02;
  p.mu = 0.08;
  p.sigma = 0.4;
  p.alpha = 0.028;
  p.beta = 0.02;
  p.W0 = 10.0;
  p.k = 0.2;
  p.D = 6.0;
  p.xi = 0.018;
  p.zeta = 0.015;
  p.tau_st = 40.0;
  p.T = 75.0;
  p.tau_min = 25.0;
  p.tau_max = 55.0;
  p.psi = 0.05;
  p.eta = 0.05;
  p.l = 0.6;
  p.m = 0.3;
  p.h0 = 6.0;
  p.L = 0.5;
  p.rho = 0.04;
  p.gamma = 0.8;
  p.kappa = 2.25;
  return p;
}

ModelParams preset_params(std::string_view name) {
  if (name == "baseline") return baseline_params();
  throw ConfigError("unknown preset '" + std::string(name) + "'");
}

ModelParams parse_params(std::istream& in, const ModelParams* base) {
  ModelParams p = base ? *base : ModelParams{};
  std::map<std::string, bool, std::less<>> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view v(line);
    if (const auto hash = v.find('#'); hash != std::string_view::npos) v = v.substr(0, hash);
    v = trim(v);
    if (v.empty()) continue;
    const auto eq = v.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    const auto key = trim(v.substr(0, eq));
    const auto val = trim(v.substr(eq + 1));
    double ModelParams::*member = find_param(key);
    if (!member) throw ConfigError("unknown config key '" + std::string(key) + "'");
    double x = 0.0;
    const auto [ptr, ec] = std::from_chars(val.data(), val.data() + val.size(), x);
    if (ec != std::errc{} || ptr != val.data() + val.size())
      throw ConfigError("line " + std::to_string(lineno) + ": bad number for '" + std::string(key) + "'");
    p.*member = x;
    seen[std::string(key)] = true;
  }
  if (!base) {
    const ModelParams defaults = baseline_params();
    std::string missing;
    for (const auto& f : kFields) {
      if (seen.count(f.name)) continue;
      if (f.name == "h0" || f.name == "L") {
        p.*f.member = defaults.*f.member;
        continue;
      }
      missing += (missing.empty() ? "" : ", ") + std::string(f.name);
    }
    if (!missing.empty()) throw ConfigError("missing config keys: " + missing);
  }
  return p;
}

ModelParams load_params_file(const std::string& path, const ModelParams* base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_params(in, base);
}

// ---------------------------------------------------------------------------

HabitSchedule::HabitSchedule(const ModelParams& p, double tau)
    : tau_(tau), psi_(p.psi), eta_(p.eta), l_(p.l), m_(p.m) {}

double HabitSchedule::psi_at(double t, Side side) const {
  const bool post = t > tau_ || (t == tau_ && side == Side::right);
  return post ? m_ * psi_ : psi_;
}

double HabitSchedule::eta_smooth_at(double t, Side side) const {
  const bool post = t > tau_ || (t == tau_ && side == Side::right);
  return post ? m_ * eta_ : eta_;
}

double HabitSchedule::decay(double s, double t, bool net_of_inflow, Side side) const {
  if (t < s) throw std::domain_error("habit decay: requires s <= t");
  const double pre = rate_pre(net_of_inflow);
  const double post = rate_post(net_of_inflow);
  const double pre_len = std::min(t, tau_) - std::min(s, tau_);
  const double post_len = std::max(t, tau_) - std::max(s, tau_);
  double f = std::exp(-pre * pre_len - post * post_len);
  const bool crosses = s < tau_ && (t > tau_ || (t == tau_ && side == Side::right));
  if (crosses) f *= l_;
  return f;
}

double habit_decay_factor(const HabitSchedule& schedule, double s, double t, bool net_of_inflow) {
  return schedule.decay(s, t, net_of_inflow);
}

// ---------------------------------------------------------------------------

TimeGrid TimeGrid::with_step(double T, double step, std::span<const double> breakpoints) {
  if (!(T > 0.0) || !(step > 0.0)) throw std::invalid_argument("TimeGrid: T and step must be positive");
  std::vector<double> cuts{0.0, T};
  for (double b : breakpoints)
    if (b > 0.0 && b < T) cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  std::vector<double> nodes{0.0};
  for (std::size_t c = 1; c < cuts.size(); ++c) {
    const double lo = cuts[c - 1];
    const double hi = cuts[c];
    if (hi - lo < 1e-9) continue;
    // Snap to the global lattice k*step where it lies inside the segment.
    auto k = static_cast<long long>(std::floor(lo / step + 1e-9)) + 1;
    for (;; ++k) {
      const double x = k * step;
      if (x >= hi - 1e-9 * step) break;
      if (x > lo + 1e-9 * step) nodes.push_back(x);
    }
    nodes.push_back(hi);
  }
  TimeGrid g;
  g.nodes_ = std::move(nodes);
  return g;
}

TimeGrid TimeGrid::from_nodes(std::vector<double> nodes) {
  if (nodes.empty() || nodes.front() != 0.0) throw std::invalid_argument("TimeGrid: first node must be 0");
  for (std::size_t i = 1; i < nodes.size(); ++i)
    if (!(nodes[i] > nodes[i - 1])) throw std::invalid_argument("TimeGrid: nodes must be strictly increasing");
  TimeGrid g;
  g.nodes_ = std::move(nodes);
  return g;
}

std::size_t TimeGrid::find(double t) const {
  const auto it = std::lower_bound(nodes_.begin(), nodes_.end(), t - 1e-9);
  if (it != nodes_.end() && std::abs(*it - t) <= 1e-9) return static_cast<std::size_t>(it - nodes_.begin());
  return npos;
}

std::vector<double> standard_breakpoints(const ModelParams& p, double tau) {
  return {0.0, p.tau_min, tau, p.tau_st, p.T};
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> habit_cuts(const HabitSchedule& s, std::span<const double> extra) {
  std::vector<double> cuts{s.tau()};
  cuts.insert(cuts.end(), extra.begin(), extra.end());
  return cuts;
}

}  // namespace

double propagate_habit(const HabitSchedule& schedule, double h0, const std::function<double(double)>& excess,
                       double t, const numerics::PanelRule& rule, std::span<const double> extra_breakpoints,
                       Side side) {
  if (t < 0.0) throw std::domain_error("propagate_habit: t must be nonnegative");
  const auto pts = numerics::composite_points(0.0, t, habit_cuts(schedule, extra_breakpoints), rule);
  const double inflow = numerics::integrate(pts, [&](double s) {
    return schedule.decay(s, t, true, side) * schedule.psi_at(s) * excess(s);
  });
  return schedule.decay(0.0, t, true, side) * h0 + inflow;
}

double habit_from_consumption(const HabitSchedule& schedule, double h0,
                              const std::function<double(double)>& consumption, double t,
                              const numerics::PanelRule& rule, std::span<const double> extra_breakpoints,
                              Side side) {
  if (t < 0.0) throw std::domain_error("habit_from_consumption: t must be nonnegative");
  const auto pts = numerics::composite_points(0.0, t, habit_cuts(schedule, extra_breakpoints), rule);
  const double inflow = numerics::integrate(pts, [&](double s) {
    return schedule.decay(s, t, false, side) * schedule.psi_at(s) * consumption(s);
  });
  return schedule.decay(0.0, t, false, side) * h0 + inflow;
}

}  // namespace habitret

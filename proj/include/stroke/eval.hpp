#pragma once

// Ablation over the six agent variants.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "stroke/agent.hpp"
#include "stroke/metrics.hpp"

namespace stroke {

struct Variant {
  std::string name;
  bool twin_critics = false;
  bool argmax = false;
  int q_dim = 1;

  AgentConfig apply(AgentConfig cfg) const {
    cfg.use_twin_critics = twin_critics;
    cfg.use_argmax_exploration = argmax;
    cfg.q_dim = q_dim;
    return cfg;
  }
};

inline std::vector<Variant> ablation_variants() {
  return {{"DDPG", false, false, 1},          {"DDPG+argmax", false, true, 1}, {"DDPG+argmax+3DQ", false, true, 3},
          {"TD3", true, false, 1},            {"TD3+argmax", true, true, 1},   {"TD3+argmax+3DQ", true, true, 3}};
}

struct AblationRow {
  Variant variant;
  std::vector<std::uint64_t> seeds;
  std::vector<Metrics> per_seed;

  template <class F>
  std::vector<double> values(F f) const {
    std::vector<double> v;
    for (const Metrics& m : per_seed) v.push_back(f(m));
    return v;
  }
  double mean_eps_d() const { return mean(values([](const Metrics& m) { return m.eps_d; })); }
  double mean_eps_h() const { return mean(values([](const Metrics& m) { return m.eps_h; })); }
  double mean_success() const { return mean(values([](const Metrics& m) { return m.success_rate; })); }
  double median_eps_d() const { return median(values([](const Metrics& m) { return m.eps_d; })); }
  double median_success() const { return median(values([](const Metrics& m) { return m.success_rate; })); }

  static double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
  }
  static double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  }
};

struct AblationReport {
  std::vector<AblationRow> rows;

  const AblationRow& row(const std::string& name) const {
    for (const auto& r : rows)
      if (r.variant.name == name) return r;
    throw std::out_of_range("no ablation row named " + name);
  }
};

using AblationProgress = std::function<void(const Variant&, std::uint64_t seed, const Metrics&)>;

/// Trains every variant for every seed and evaluates the final actor on the
/// evaluation suite.
template <BanditEnvironment Env>
AblationReport run_ablation(const Env& env, const AgentConfig& base, const std::vector<std::uint64_t>& seeds,
                            const std::vector<Variant>& variants = ablation_variants(),
                            const AblationProgress& progress = {}) {
  if (seeds.empty()) throw std::invalid_argument("run_ablation: need at least one seed");
  AblationReport report;
  for (const Variant& v : variants) {
    AblationRow row{v, seeds, {}};
    const AgentConfig cfg = v.apply(base);
    for (std::uint64_t seed : seeds) {
      const TrainResult res = train(env, cfg, seed);
      const Metrics m = evaluate(res.learner.actor, env, cfg.eval_episodes, cfg.eval_seed);
      if (progress) progress(v, seed, m);
      row.per_seed.push_back(m);
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

/// Fixed-width table: one column per seed, then the mean when there is more
/// than one seed. Distances in centimetres.
inline std::string format_ablation(const AblationReport& report) {
  std::ostringstream os;
  os << std::fixed;
  if (report.rows.empty()) return {};
  const auto& seeds = report.rows.front().seeds;
  const bool multi = seeds.size() > 1;
  os << std::left << std::setw(18) << "variant";
  for (auto s : seeds) os << std::right << std::setw(26) << ("seed " + std::to_string(s));
  if (multi) os << std::right << std::setw(26) << "mean";
  os << "\n" << std::left << std::setw(18) << "";
  const int columns = static_cast<int>(seeds.size()) + (multi ? 1 : 0);
  for (int c = 0; c < columns; ++c) os << std::right << std::setw(10) << "eps_d cm" << std::setw(8) << "eps_h" << std::setw(8) << "succ%";
  os << "\n";
  auto cell = [&](double d, double h, double s) {
    os << std::right << std::setprecision(2) << std::setw(10) << 100.0 * d << std::setw(8) << 100.0 * h
       << std::setprecision(1) << std::setw(8) << 100.0 * s;
  };
  for (const auto& r : report.rows) {
    os << std::left << std::setw(18) << r.variant.name;
    for (const Metrics& m : r.per_seed) cell(m.eps_d, m.eps_h, m.success_rate);
    if (multi) cell(r.mean_eps_d(), r.mean_eps_h(), r.mean_success());
    os << "\n";
  }
  return os.str();
}

}  // namespace stroke

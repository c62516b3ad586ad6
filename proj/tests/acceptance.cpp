// Acceptance gate: one PASS/FAIL line per criterion. `--quick` skips the two
// long training criteria (5 and 6).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "stroke/cli.hpp"
#include "stroke/contact.hpp"
#include "stroke/eval.hpp"
#include "stroke/physics.hpp"
#include "stroke/synthetic_bandit.hpp"

using namespace stroke;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Result {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

int failures = 0;

void report(int id, const std::string& name, Result& r) {
  std::cout << (r.pass ? "PASS" : "FAIL") << "  criterion " << id << "  " << name << ":" << r.detail.str() << std::endl;
  if (!r.pass) ++failures;
}

Vec3 random_vec(Rng& rng, double scale) {
  return {uniform(rng, -scale, scale), uniform(rng, -scale, scale), uniform(rng, -scale, scale)};
}

Vec3 random_unit(Rng& rng) {
  Vec3 n;
  do {
    n = random_vec(rng, 1.0);
  } while (n.norm() < 1e-3 || n.norm() > 1.0);
  return n.normalized();
}

// --- 1 -----------------------------------------------------------------------

void physics_suite() {
  Result r;
  const auto t0 = Clock::now();
  BallParams vac;
  vac.drag_coefficient = 0.0;
  vac.lift_coefficient = 0.0;
  double worst = 0.0;
  Rng rng(101);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec3 p0(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, 0.2, 2));
    const Vec3 v0 = random_vec(rng, 8.0);
    BallState s{0.0, p0, v0, random_vec(rng, 300.0)};
    for (int i = 0; i < 500; ++i) s = step(s, 1e-3, vac);
    const Vec3 exact = p0 + v0 * 0.5 + Vec3(0, 0, -0.5 * vac.gravity * 0.25);
    for (int k = 0; k < 3; ++k) worst = std::max(worst, std::abs(s.p[k] - exact[k]) / std::max(1.0, std::abs(exact[k])));
  }
  r.require(worst < 1e-9, "projectile endpoint");

  const BallParams bp;
  int bad = 0;
  for (int i = 0; i < 1000; ++i) {
    const Vec3 v = random_vec(rng, 8.0), w = random_vec(rng, 300.0);
    const Vec3 fd = drag_force(v, bp), fm = magnus_force(v, w, bp);
    const double scale = fm.norm() + 1e-300;
    if (!(fd.dot(v) < 0.0)) ++bad;
    if (fd.cross(v).norm() > 1e-12 * fd.norm() * v.norm()) ++bad;
    if (std::abs(fm.dot(v)) > 1e-12 * scale * v.norm()) ++bad;
    if (std::abs(fm.dot(w)) > 1e-12 * scale * w.norm()) ++bad;
    if (w.cross(v).norm() > 0.0 && fm.dot(w.cross(v)) <= 0.0) ++bad;
  }
  r.require(bad == 0, "force orthogonality/sign");
  const double t = seconds_since(t0);
  r.require(t < 1.0, "runtime");
  r.detail << " projectile rel err " << worst << ", force property violations " << bad << ", " << t << " s";
  report(1, "physics closed-form suite", r);
}

// --- 2 -----------------------------------------------------------------------

void contact_suite() {
  Result r;
  const auto t0 = Clock::now();
  BallParams vac;
  vac.drag_coefficient = 0.0;
  vac.lift_coefficient = 0.0;
  const SurfaceParams table = SurfaceParams::table();
  const Crossing down = integrate_to_plane({0.0, {0, 0, 1.0}, Vec3::Zero(), Vec3::Zero()}, vac, Axis::z, 0.0, 1e-3, 2.0);
  BallState s = bounce(down.state, Vec3::UnitZ(), Vec3::Zero(), table, vac);
  double apex = s.p.z();
  while (s.v.z() > 0.0) {
    s = step(s, 1e-4, vac);
    apex = std::max(apex, s.p.z());
  }
  const double kr2 = table.restitution * table.restitution;
  const double drop_dev = std::abs(apex / 1.0 - kr2) / kr2;
  r.require(down.crossed && drop_dev < 0.01, "drop test");

  const BallParams bp;
  Rng rng(202);
  int energy_bad = 0, cone_bad = 0, stick_bad = 0, sticking = 0;
  const double m_eff = 1.0 / (1.0 / bp.mass + bp.r1 * bp.r1 / bp.inertia());
  for (int i = 0; i < 10000; ++i) {
    const Vec3 n = random_unit(rng);
    const Vec3 vs = random_vec(rng, 2.0);
    Vec3 v = random_vec(rng, 8.0);
    const double vn = (v - vs).dot(n);
    if (vn > 0.0) v -= 2.0 * vn * n;
    if (std::abs((v - vs).dot(n)) < 1e-3) v -= 0.5 * n;
    const BallState in{0.0, Vec3::Zero(), v, random_vec(rng, 300.0)};
    const SurfaceParams surf{uniform(rng, 0.05, 1.0), uniform(rng, 0.0, i % 2 ? 2.0 : 0.3)};
    const BallState out = bounce(in, n, vs, surf, bp);
    // Energy in the surface frame (a moving racket may add energy in the world frame).
    BallState in_rel = in, out_rel = out;
    in_rel.v -= vs;
    out_rel.v -= vs;
    if (kinetic_energy(out_rel, bp) > kinetic_energy(in_rel, bp) * (1.0 + 1e-12)) ++energy_bad;
    const Vec3 dv = out.v - in.v;
    const double jn = bp.mass * dv.dot(n);
    const double jt = bp.mass * (dv - dv.dot(n) * n).norm();
    if (jt > surf.friction * jn + 1e-12 * jn) ++cone_bad;
    const double slip_in = contact_slip(in, n, vs, bp.r1).norm();
    if (surf.friction * jn >= m_eff * slip_in) {
      ++sticking;
      if (contact_slip(out, n, vs, bp.r1).norm() > 1e-9) ++stick_bad;
    } else if (std::abs(jt - surf.friction * jn) > 1e-12 * jn) {
      ++cone_bad;
    }
  }
  r.require(energy_bad == 0, "energy");
  r.require(cone_bad == 0 && stick_bad == 0 && sticking > 0, "friction cap");
  const double t = seconds_since(t0);
  r.require(t < 5.0, "runtime");
  r.detail << " rebound ratio " << apex << " vs " << kr2 << " (dev " << 100.0 * drop_dev << " %), energy violations "
           << energy_bad << "/10000, cap violations " << cone_bad + stick_bad << " (" << sticking << " sticking), " << t
           << " s";
  report(2, "contact suite", r);
}

// --- 3 -----------------------------------------------------------------------

void gradient_suite() {
  Result r;
  const auto t0 = Clock::now();
  const check::GradCheck g = check::gradient_suite(303, 100);
  const double t = seconds_since(t0);
  r.require(g.max_rel_error < 1e-4, "relative error");
  r.require(t < 10.0, "runtime");
  r.detail << " max rel err " << g.max_rel_error << " over " << g.parameters << " parameters in 100 nets, " << t << " s";
  report(3, "gradient suite", r);
}

// --- 4 -----------------------------------------------------------------------

void metric_suite() {
  Result r;
  const Vec2 target(2.55, 0.0);
  auto at = [&](double d, double h) { return EpisodeOutcome::landed(target + Vec2(0.0, d), h); };
  const EpisodeOutcome fail = EpisodeOutcome::failed(FailureReason::into_net);
  const std::vector<EpisodeOutcome> constant(10, at(0.2, 0.173));
  const std::vector<EpisodeOutcome> mixed = {at(0.1, 0.273), fail};
  const std::vector<EpisodeOutcome> high(4, at(0.0, 0.373));
  const std::vector<EpisodeOutcome> all_fail(3, fail);
  const double e1 = distance_error(constant, target);
  const double e2 = distance_error(mixed, target);
  const double h1 = height_error(constant);
  const double h2 = height_error(high);
  const double h3 = height_error(mixed);
  r.require(std::abs(e1 - 0.2) < 1e-9, "eps_d constant");
  r.require(std::abs(e2 - 0.7931471805599454) < 1e-9, "eps_d mixed");
  r.require(std::abs(h1) < 1e-9, "eps_h zero");
  r.require(std::abs(h2 - 0.2) < 1e-9, "eps_h constant");
  r.require(std::abs(h3 - 0.7931471805599454) < 1e-9, "eps_h mixed");
  r.require(std::isinf(distance_error(all_fail, target)) && std::isinf(height_error(all_fail)), "all-fail");
  r.detail.precision(17);
  r.detail << " eps_d " << e1 << ", " << e2 << "; eps_h " << h1 << ", " << h2 << ", " << h3;
  report(4, "metric arithmetic", r);
}

// --- 7 -----------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void determinism(const fs::path& work) {
  Result r;
  const fs::path dir = work / "determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  // Full-size networks, shortened schedule.
  const fs::path cfg = dir / "config.json";
  {
    std::ofstream out(cfg);
    out << R"({"agent": {"episodes": 800, "eval_episodes": 200}})";
  }
  std::ostringstream sink;
  const int a = cli::cmd_train({cfg, 7, dir / "a"}, sink, std::cerr);
  const int b = cli::cmd_train({cfg, 7, dir / "b"}, sink, std::cerr);
  r.require(a == 0 && b == 0, "train exit status");
  bool same = true;
  for (const char* f : {"weights.json", "metrics.json", "train_log.jsonl"}) {
    const std::string x = slurp(dir / "a" / f), y = slurp(dir / "b" / f);
    const bool eq = !x.empty() && x == y;
    same = same && eq;
    r.detail << " " << f << (eq ? " identical" : " DIFFERS") << " (" << x.size() << " bytes);";
  }
  r.require(same, "byte identity");
  report(7, "determinism", r);
}

// --- 8 -----------------------------------------------------------------------

void bandit_smoke() {
  Result r;
  const auto t0 = Clock::now();
  AgentConfig cfg;
  cfg.episodes = 3000;
  cfg.eval_episodes = 1000;
  const SyntheticBandit env;
  const TrainResult res = train(env, cfg, 1);
  const double reward = SyntheticBandit::mean_reward(res.log.back().metrics);
  const double t = seconds_since(t0);
  r.require(reward > 0.9, "mean reward");
  r.require(t < 120.0, "runtime");
  r.detail << " mean eval reward " << reward << " after 3000 episodes, " << t << " s";
  report(8, "synthetic-bandit smoke test", r);
}

// --- 5 and 6 ------------------------------------------------------------------

void training_criteria(const fs::path& work) {
  const std::vector<std::uint64_t> seeds = {1, 2, 3};
  const StrokeEnv env(EnvConfig{});
  const AgentConfig base;
  double slowest_td3 = 0.0;
  auto last = Clock::now();
  const AblationReport report_all = run_ablation(env, base, seeds, ablation_variants(),
                                                 [&](const Variant& v, std::uint64_t seed, const Metrics& m) {
                                                   const double t = seconds_since(last);
                                                   last = Clock::now();
                                                   if (v.name == "TD3+argmax+3DQ") slowest_td3 = std::max(slowest_td3, t);
                                                   std::cout << "      " << v.name << " seed " << seed
                                                             << ": success " << 100.0 * m.success_rate << " %, eps_d "
                                                             << 100.0 * m.eps_d << " cm, " << t << " s" << std::endl;
                                                 });
  const std::string table = format_ablation(report_all);
  std::cout << table;
  std::ofstream(work / "acceptance_ablation.txt") << table;
  io::write_json(work / "acceptance_ablation.json", cli::to_json(report_all));

  {
    Result r;
    const AblationRow& best = report_all.row("TD3+argmax+3DQ");
    const double succ = best.median_success();
    const double eps_d = best.median_eps_d();
    r.require(succ >= 0.90, "median success >= 90 %");
    r.require(eps_d <= 0.35, "median eps_d <= 35 cm");
    r.require(slowest_td3 <= 1800.0, "single run <= 30 min");
    r.detail << " median success " << 100.0 * succ << " %, median eps_d " << 100.0 * eps_d << " cm over seeds 1,2,3;"
             << " slowest run " << slowest_td3 << " s";
    report(5, "desk-scale training", r);
  }
  {
    Result r;
    auto med = [&](const char* name) { return report_all.row(name).median_success(); };
    const double tol = 0.01;
    auto chain = [&](const char* plus3, const char* plusarg, const char* base_name) {
      const double a = med(plus3), b = med(plusarg), c = med(base_name);
      r.detail << " " << plus3 << " " << 100.0 * a << " >= " << plusarg << " " << 100.0 * b << " >= " << base_name
               << " " << 100.0 * c << " (-1 pp);";
      r.require(a >= b - tol, std::string(plus3) + " vs " + plusarg);
      r.require(b >= c - tol, std::string(plusarg) + " vs " + base_name);
    };
    chain("TD3+argmax+3DQ", "TD3+argmax", "TD3");
    chain("DDPG+argmax+3DQ", "DDPG+argmax", "DDPG");
    report(6, "ablation ordering", r);
  }
}

}  // namespace

int main(int argc, char** argv) {
  tune_allocator();
  bool quick = false;
  for (int i = 1; i < argc; ++i) quick = quick || std::strcmp(argv[i], "--quick") == 0;
  const fs::path work = fs::current_path() / "acceptance_work";
  fs::create_directories(work);
  std::cout.precision(4);

  physics_suite();
  contact_suite();
  gradient_suite();
  metric_suite();
  determinism(work);
  bandit_smoke();
  if (quick) {
    std::cout << "SKIP  criterion 5  desk-scale training: --quick\n";
    std::cout << "SKIP  criterion 6  ablation ordering: --quick\n";
  } else {
    training_criteria(work);
  }
  std::cout << (failures == 0 ? "ALL CRITERIA PASSED" : std::to_string(failures) + " CRITERIA FAILED") << std::endl;
  return failures == 0 ? 0 : 1;
}

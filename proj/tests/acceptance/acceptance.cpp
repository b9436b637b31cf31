// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <fmt/format.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "heatctl/cli/config.hpp"
#include "heatctl/heatctl.hpp"
#include "oracle/dense_oracle.hpp"
#include "support/instances.hpp"

using namespace heatctl;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool passed = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) passed = false;
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "" : "FAILED ") + what;
  }
};

std::string g(double v) { return fmt::format("{:.3e}", v); }

cli::Instance default_instance() {
  return cli::build_instance(cli::load_config(fs::path(HEATCTL_SOURCE_DIR) / "configs" / "default.ini"));
}

testing_support::Instance tiny_instance(double alpha = 10.0) {
  return testing_support::random_instance(2, 2, 9001, 0.1, 0.1, alpha);
}

// Criteria 1-3 share the loop over instances and variants.
template <typename Check>
Outcome per_instance(const char* label, double bound, Check check) {
  Outcome o;
  const auto tiny = tiny_instance();
  const auto demo = default_instance();
  for (Variant v : {Variant::P, Variant::Palpha}) {
    const ReducedProblem<double> rt(tiny.data, tiny.ops, v);
    const ReducedProblem<double> rd(demo.data, demo.ops, v);
    for (const auto* rp : {&rt, &rd}) {
      const CheckResult r = check(*rp);
      o.require(r.measured <= bound, fmt::format("{} {} {}x{} worst={} <= {}", label, to_string(v),
                                                 rp->ops().nx, rp->ops().ny, g(r.measured), g(bound)));
    }
  }
  return o;
}

Outcome criterion1() {
  return per_instance("adjoint", 1e-10,
                      [](const ReducedProblem<double>& rp) { return adjoint_identity_check(rp, 20, 101); });
}

Outcome criterion2() {
  return per_instance("gradient", 1e-6, [](const ReducedProblem<double>& rp) { return gradient_fd_check(rp, 20, 202); });
}

Outcome criterion3() {
  return per_instance("convexity", 1e-10, [](const ReducedProblem<double>& rp) { return convexity_check(rp, 10, 303); });
}

Outcome criterion4() {
  Outcome o;
  const auto inst = tiny_instance(10.0);
  for (Variant v : {Variant::P, Variant::Palpha}) {
    oracle::DenseOps dense;
    const auto st = testing_support::dense_space_time(inst, dense, v);
    const auto qd = oracle::cost_quadratic(dense, st, oracle::stack(inst.data.z_d), inst.data.M1, inst.data.M2);
    const Eigen::VectorXd ref = oracle::kkt_solve(qd, st.n * st.N);
    const auto rep = solve_cg(inst.data, inst.ops, v, 1e-12);
    const Eigen::VectorXd diff = oracle::stack(rep.control.g, rep.control.q) - ref;
    const double err = std::sqrt(diff.dot(oracle::control_gram(dense, st) * diff));
    o.require(rep.converged && err <= 1e-8, fmt::format("{} |cg - kkt|_HxQ={} <= 1e-8", to_string(v), g(err)));
  }
  return o;
}

Outcome criterion5() {
  Outcome o;
  const auto cfg = cli::load_config(fs::path(HEATCTL_SOURCE_DIR) / "configs" / "contraction.ini");
  const auto inst = cli::build_instance(cfg);
  const auto k = compute_constants(inst.ops);
  for (Variant v : {Variant::P, Variant::Palpha}) {
    const double c0 = contraction_constant(k, inst.data.M1, inst.data.M2, v, inst.data.alpha);
    const ReducedProblem<double> rp(inst.data, inst.ops, v);
    const double tol = 1e-10;
    const auto fp = solve_fixed_point(rp, FixedPointOptions{tol, 500});
    const auto cg = minimize_cg(rp, rp.zero_control(), CgOptions{1e-13, 500, false});
    const double diff = rp.norm(fp.control - cg.control);
    o.require(c0 < 0.8, fmt::format("{} C0={} < 0.8", to_string(v), g(c0)));
    o.require(fp.converged && fp.contraction_ratio <= c0 + 0.05,
              fmt::format("ratio={} <= C0+0.05 in {} steps", g(fp.contraction_ratio), fp.iterations));
    o.require(diff <= 10 * tol, fmt::format("|fp - cg|={} <= {}", g(diff), g(10 * tol)));
  }
  return o;
}

Outcome criterion6() {
  Outcome o;
  const auto inst = default_instance();
  const std::vector<double> alphas{10, 100, 1000, 10000};
  const auto rep = optimal_control_sweep(inst.data, alphas, inst.ops, 1e-10);
  for (const auto& c : evaluate_sweep(rep, 0.2, 10.0, 0.05))
    o.require(c.passed, fmt::format("{}={}/{}", c.name, g(c.measured), g(c.bound)));
  return o;
}

Outcome criterion7() {
  Outcome o;
  std::mt19937_64 rng(7007);
  std::uniform_int_distribution<int> size(3, 10), steps(3, 16);
  std::uniform_real_distribution<double> logm(-3, 1);
  int checks = 0;
  for (int i = 0; i < 10; ++i) {
    const double M1 = std::pow(10.0, logm(rng)), M2 = std::pow(10.0, logm(rng));
    const auto inst = testing_support::random_instance(size(rng), steps(rng), 7100 + static_cast<std::uint64_t>(i),
                                                       M1, M2, 10.0);
    InterProblemOptions opt;
    opt.tol = 1e-12;
    opt.lipschitz_pairs = 50;
    opt.seed = 7200 + static_cast<std::uint64_t>(i);
    for (const auto& c : inter_problem_checks(inst.data, inst.ops, compute_constants(inst.ops), opt)) {
      if (c.informative) continue;
      ++checks;
      if (!c.passed) o.require(false, fmt::format("instance {} {} {} > {}", i, c.name, g(c.measured), g(c.bound)));
    }
  }
  o.require(true, fmt::format("{} checks over 10 instances", checks));
  return o;
}

Outcome criterion8() {
  Outcome o;
  for (Variant v : {Variant::P, Variant::Palpha}) {
    auto inst = testing_support::random_instance(6, 8, 8001);
    testing_support::track_uncontrolled(inst, v);
    const auto cg = solve_cg(inst.data, inst.ops, v, 1e-10);
    const auto fp = solve_fixed_point(inst.data, inst.ops, v, 1e-10);
    for (const auto* r : {&cg, &fp}) {
      const double size = r->control.g.cwiseAbs().maxCoeff() + r->control.q.cwiseAbs().maxCoeff();
      o.require(r->converged && size == 0.0 && r->cost == 0.0,
                fmt::format("{} {} |c|={} J={}", to_string(v), to_string(r->solver), g(size), g(r->cost)));
    }
  }
  const auto cfg = cli::load_config(fs::path(HEATCTL_SOURCE_DIR) / "configs" / "compatible.ini");
  const auto inst = cli::build_instance(cfg);
  const auto zero = ControlPair<double>::zeros(inst.ops, inst.data.n_steps());
  const double u_dev = (solve_state_P(inst.data, zero, inst.ops).slices.array() - 1.0).abs().maxCoeff();
  double ua_dev = 0;
  for (double a : cfg.alphas) {
    auto d = inst.data;
    d.alpha = a;
    ua_dev = std::max(ua_dev, (solve_state_Palpha(d, zero, inst.ops).slices.array() - 1.0).abs().maxCoeff());
  }
  o.require(u_dev <= 1e-12 && ua_dev <= 1e-12, fmt::format("|u-1|={} |u_alpha-1|={}", g(u_dev), g(ua_dev)));
  double worst = 0;
  for (const auto& s : {fixed_control_sweep(inst.data, zero, cfg.alphas, inst.ops),
                        optimal_control_sweep(inst.data, cfg.alphas, inst.ops, cfg.tol)})
    for (const auto& r : s.records) worst = std::max({worst, r.state_gap, r.adjoint_gap, r.control_gap});
  o.require(worst <= 1e-12, fmt::format("max sweep gap={} <= 1e-12", g(worst)));
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome criterion9() {
  Outcome o;
  const fs::path base = fs::temp_directory_path() / "heatctl_acceptance_determinism";
  fs::remove_all(base);
  const fs::path cfg = fs::path(HEATCTL_SOURCE_DIR) / "configs" / "default.ini";
  for (const char* run : {"a", "b"}) {
    for (const char* cmd : {"solve", "sweep"}) {
      const std::string line =
          fmt::format("\"{}\" {} --config \"{}\" --out \"{}\" --quiet", HEATCTL_BINARY, cmd, cfg.string(),
                      (base / run).string());
      const int rc = std::system(line.c_str());
      o.require(rc == 0, fmt::format("{} run {} exit={}", cmd, run, rc));
    }
  }
  const std::vector<std::string> expected{"history_cg.csv", "state.csv",       "adjoint.csv",      "control_g.csv",
                                         "control_q.csv",  "sweep_fixed.csv", "sweep_optimal.csv"};
  int same = 0;
  for (const auto& name : expected) {
    const auto a = base / "a" / name, b = base / "b" / name;
    if (fs::exists(a) && fs::exists(b) && slurp(a) == slurp(b)) {
      ++same;
    } else {
      o.require(false, name + " missing or differs");
    }
  }
  int written = 0;
  for (const auto& e : fs::directory_iterator(base / "a"))
    if (e.path().extension() == ".csv") ++written;
  o.require(same == static_cast<int>(expected.size()) && written == same,
            fmt::format("{}/{} expected CSV files byte-identical, {} written", same, expected.size(), written));
  fs::remove_all(base);
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* title;
    Outcome (*run)();
  };
  const std::vector<Criterion> criteria{
      {1, "discrete adjoint identity", criterion1},
      {2, "gradient vs central differences", criterion2},
      {3, "convexity identity", criterion3},
      {4, "CG optimum vs dense KKT oracle", criterion4},
      {5, "fixed-point characterization", criterion5},
      {6, "alpha-convergence sweep", criterion6},
      {7, "inter-problem estimates", criterion7},
      {8, "trivial exactness", criterion8},
      {9, "determinism", criterion9},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.passed = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << fmt::format("{} criterion {} ({}) [{:.1f}s]: {}", o.passed ? "PASS" : "FAIL", c.id, c.title, secs,
                             o.detail)
              << std::endl;
    failed += o.passed ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}

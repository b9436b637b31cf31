#include "heatctl/cli/commands.hpp"

#include <fmt/format.h>

#include <vector>

#include "heatctl/analysis.hpp"
#include "heatctl/cli/report.hpp"
#include "heatctl/control.hpp"

namespace heatctl::cli {

namespace {

std::filesystem::path output_dir(const RunConfig& cfg, const CommandContext& ctx) {
  return ctx.out_dir ? *ctx.out_dir : cfg.out_dir;
}

std::vector<Eigen::Index> all_nodes(const Instance& inst) {
  std::vector<Eigen::Index> out(static_cast<std::size_t>(inst.mesh.num_nodes()));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<Eigen::Index>(i);
  return out;
}

Json config_json(const RunConfig& cfg) {
  Json j;
  j["mesh"] = {{"nx", cfg.nx}, {"ny", cfg.ny}, {"gamma1", to_string(cfg.gamma1)}};
  j["time"] = {{"T", cfg.final_time}, {"n_steps", cfg.n_steps}};
  j["problem"] = {{"M1", cfg.M1},
                  {"M2", cfg.M2},
                  {"variant", std::string(to_string(cfg.variant))},
                  {"alpha", cfg.alpha},
                  {"b", cfg.b.text},
                  {"v_b", cfg.v_b.text},
                  {"z_d", cfg.z_d.text}};
  j["solver"] = {{"tol", cfg.tol}, {"max_iter", cfg.max_iter}};
  return j;
}

constexpr std::uint64_t kCheckSeed = 7031;

}  // namespace

int run_solve(const RunConfig& cfg, const CommandContext& ctx) {
  const Instance inst = build_instance(cfg);
  const auto dir = output_dir(cfg, ctx);
  const ConstantsReport<double> k = compute_constants(inst.ops);
  const double c0 = contraction_constant(k, cfg.M1, cfg.M2, cfg.variant, cfg.alpha);
  const ReducedProblem<double> rp(inst.data, inst.ops, cfg.variant);

  std::vector<OptimalityReport<double>> reports;
  if (cfg.optimizer != Optimizer::FixedPoint)
    reports.push_back(minimize_cg(rp, rp.zero_control(), CgOptions{cfg.tol, cfg.max_iter, false}));
  if (cfg.optimizer != Optimizer::Cg)
    reports.push_back(solve_fixed_point(rp, FixedPointOptions{cfg.tol, cfg.max_iter}));

  bool ok = true;
  for (const auto& r : reports) {
    ok = ok && r.converged;
    if (!ctx.quiet) ctx.out << summary_line(r) << '\n';
  }

  Json j;
  j["config"] = config_json(cfg);
  j["constants"] = to_json(k);
  j["contraction_constant"] = c0;
  Json reps = Json::array();
  for (const auto& r : reports) reps.push_back(to_json(r));
  j["reports"] = std::move(reps);
  if (reports.size() == 2) {
    const double diff = rp.norm(reports[0].control - reports[1].control);
    j["agreement"] = {{"difference", diff}, {"bound", 10.0 * cfg.tol}, {"agree", diff <= 10.0 * cfg.tol}};
    if (!ctx.quiet) {
      ctx.out << fmt::format("cg vs fixed_point: difference={:.17g} (C0={:.17g})", diff, c0) << '\n';
    }
  }
  j["converged"] = ok;

  if (cfg.write_json) write_json(dir / "report.json", j);
  if (cfg.write_csv) {
    for (const auto& r : reports) write_history_csv(dir / fmt::format("history_{}.csv", to_string(r.solver)), r);
    const auto& best = reports.front();
    const Trajectory<double> u = rp.state(best.control);
    write_trajectory_csv(dir / "state.csv", u);
    write_trajectory_csv(dir / "adjoint.csv", rp.adjoint(u));
    write_series_csv(dir / "control_g.csv", best.control.g, all_nodes(inst));
    write_series_csv(dir / "control_q.csv", best.control.q, inst.ops.gamma2);
  }
  return ok ? kOk : kNotConverged;
}

int run_sweep(const RunConfig& cfg, const CommandContext& ctx) {
  const Instance inst = build_instance(cfg);
  const auto dir = output_dir(cfg, ctx);
  try {
    check_alphas(cfg.alphas);
  } catch (const ContractError& e) {
    throw ConfigError(std::string("problem.alphas: ") + e.what());
  }

  Json j;
  j["config"] = config_json(cfg);
  j["alphas"] = cfg.alphas;
  bool ok = true;
  auto emit = [&](const SweepReport<double>& s, const char* key, const char* csv) {
    const auto checks = evaluate_sweep(s);
    ok = ok && all_passed(checks);
    if (!ctx.quiet) {
      for (const auto& r : s.records) {
        ctx.out << fmt::format("{} alpha={:.17g} state_gap={:.17g} adjoint_gap={:.17g} control_gap={:.17g} "
                               "boundary_residual={:.17g}",
                               key, r.alpha, r.state_gap, r.adjoint_gap, r.control_gap, r.boundary_residual)
                << '\n';
      }
      for (const auto& c : checks) ctx.out << key << ' ' << summary_line(c) << '\n';
    }
    j[key] = to_json(s, checks);
    if (cfg.write_csv) write_sweep_csv(dir / csv, s);
  };

  try {
    if (cfg.sweep_fixed) emit(fixed_control_sweep(inst.data, fixed_control(cfg, inst), cfg.alphas, inst.ops), "fixed",
                              "sweep_fixed.csv");
    if (cfg.sweep_optimal)
      emit(optimal_control_sweep(inst.data, cfg.alphas, inst.ops, cfg.tol, cfg.max_iter), "optimal",
           "sweep_optimal.csv");
  } catch (const SolverError& e) {
    ctx.err << "sweep aborted: " << e.what() << '\n';
    j["error"] = e.what();
    ok = false;
  }
  j["passed"] = ok;
  if (cfg.write_json) write_json(dir / "sweep.json", j);
  return ok ? kOk : kNotConverged;
}

int run_checks(const RunConfig& cfg, const CommandContext& ctx) {
  const Instance inst = build_instance(cfg);
  const auto dir = output_dir(cfg, ctx);
  const ConstantsReport<double> k = compute_constants(inst.ops);

  std::vector<CheckResult> checks;
  for (Variant v : {Variant::P, Variant::Palpha}) {
    const ReducedProblem<double> rp(inst.data, inst.ops, v);
    checks.push_back(adjoint_identity_check(rp, 20, kCheckSeed));
    checks.push_back(gradient_fd_check(rp, 20, kCheckSeed + 1));
    checks.push_back(convexity_check(rp, 10, kCheckSeed + 2));
  }
  InterProblemOptions ip;
  ip.tol = std::min(cfg.tol, 1e-10);
  ip.max_iter = cfg.max_iter;
  ip.seed = kCheckSeed + 3;
  try {
    for (auto& c : inter_problem_checks(inst.data, inst.ops, k, ip)) checks.push_back(std::move(c));
  } catch (const SolverError& e) {
    checks.push_back({"inter_problem", e.residual(), 0, false, false, e.what()});
  }

  for (const auto& c : checks) ctx.out << summary_line(c) << '\n';
  if (cfg.write_json) {
    Json j;
    j["config"] = config_json(cfg);
    j["constants"] = to_json(k);
    Json arr = Json::array();
    for (const auto& c : checks) arr.push_back(to_json(c));
    j["checks"] = std::move(arr);
    j["passed"] = all_passed(checks);
    write_json(dir / "checks.json", j);
  }
  return all_passed(checks) ? kOk : kNotConverged;
}

int run_constants(const RunConfig& cfg, const CommandContext& ctx) {
  const Instance inst = build_instance(cfg);
  const ConstantsReport<double> k = compute_constants(inst.ops);
  Json j = to_json(k);
  j["contraction_constant"] = {{"P", contraction_constant(k, cfg.M1, cfg.M2, Variant::P)},
                               {"Palpha", contraction_constant(k, cfg.M1, cfg.M2, Variant::Palpha, cfg.alpha)}};
  ctx.out << j.dump(2) << '\n';
  if (cfg.write_json) write_json(output_dir(cfg, ctx) / "constants.json", j);
  return kOk;
}

int run_command(const std::string& name, const std::filesystem::path& path, const CommandContext& ctx) {
  try {
    const RunConfig cfg = load_config(path);
    if (name == "solve") return run_solve(cfg, ctx);
    if (name == "sweep") return run_sweep(cfg, ctx);
    if (name == "check") return run_checks(cfg, ctx);
    if (name == "constants") return run_constants(cfg, ctx);
    ctx.err << "unknown command '" << name << "'\n";
    return kConfigError;
  } catch (const ConfigError& e) {
    ctx.err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const ContractError& e) {
    ctx.err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const SolverError& e) {
    ctx.err << "solver failure: " << e.what() << '\n';
    return kNotConverged;
  }
}

}  // namespace heatctl::cli

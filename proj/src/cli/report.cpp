#include "heatctl/cli/report.hpp"

#include <fmt/format.h>
#include <fmt/os.h>

#include <fstream>
#include <stdexcept>

namespace heatctl::cli {

std::string format_double(double v) { return fmt::format("{:.17g}", v); }

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace

Json to_json(const ConstantsReport<double>& k) {
  Json j;
  j["lambda0"] = k.lambda0;
  j["lambda1"] = k.lambda1;
  j["trace_norm"] = k.trace_norm;
  j["mesh"] = {{"nx", k.nx}, {"ny", k.ny}, {"gamma1", to_string(k.gamma1)}};
  return j;
}

Json to_json(const OptimalityReport<double>& r) {
  Json j;
  j["solver"] = std::string(to_string(r.solver));
  j["variant"] = std::string(to_string(r.variant));
  j["converged"] = r.converged;
  j["iterations"] = r.iterations;
  j["cost"] = r.cost;
  j["grad_norm"] = r.grad_norm;
  j["tolerance"] = r.tolerance;
  if (r.solver == SolverKind::FixedPoint) j["contraction_ratio"] = r.contraction_ratio;
  return j;
}

Json to_json(const CheckResult& c) {
  Json j;
  j["name"] = c.name;
  j["measured"] = c.measured;
  j["bound"] = c.bound;
  j["passed"] = c.passed;
  j["informative"] = c.informative;
  j["note"] = c.note;
  return j;
}

Json to_json(const SweepReport<double>& s, const std::vector<CheckResult>& checks) {
  Json j;
  j["kind"] = s.kind == SweepKind::FixedControl ? "fixed_control" : "optimal_control";
  j["reference_cost"] = s.reference_cost;
  Json recs = Json::array();
  for (const auto& r : s.records) {
    recs.push_back({{"alpha", r.alpha},
                    {"state_gap", r.state_gap},
                    {"adjoint_gap", r.adjoint_gap},
                    {"control_gap", r.control_gap},
                    {"boundary_residual", r.boundary_residual},
                    {"cost_alpha", r.cost_alpha},
                    {"iterations", r.iterations}});
  }
  j["records"] = std::move(recs);
  Json cs = Json::array();
  for (const auto& c : checks) cs.push_back(to_json(c));
  j["checks"] = std::move(cs);
  j["passed"] = all_passed(checks);
  return j;
}

void write_json(const std::filesystem::path& path, const Json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

void write_history_csv(const std::filesystem::path& path, const OptimalityReport<double>& r) {
  auto out = open_out(path);
  out << "iteration,cost,grad_norm,step_norm\n";
  for (const auto& h : r.history) {
    out << fmt::format("{},{:.17g},{:.17g},{:.17g}\n", h.iteration, h.cost, h.grad_norm, h.step_norm);
  }
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory<double>& t) {
  auto out = open_out(path);
  out << "step,node,value\n";
  fmt::memory_buffer buf;
  for (Eigen::Index n = 0; n < t.slices.cols(); ++n) {
    for (Eigen::Index i = 0; i < t.slices.rows(); ++i) fmt::format_to(std::back_inserter(buf), "{},{},{:.17g}\n", n, i, t.slices(i, n));
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

void write_series_csv(const std::filesystem::path& path, const Matrix<double>& series,
                      const std::vector<Eigen::Index>& nodes) {
  auto out = open_out(path);
  out << "step,node,value\n";
  fmt::memory_buffer buf;
  for (Eigen::Index n = 0; n < series.cols(); ++n) {
    for (Eigen::Index i = 0; i < series.rows(); ++i)
      fmt::format_to(std::back_inserter(buf), "{},{},{:.17g}\n", n + 1, nodes[static_cast<std::size_t>(i)], series(i, n));
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

void write_sweep_csv(const std::filesystem::path& path, const SweepReport<double>& s) {
  auto out = open_out(path);
  out << "alpha,state_gap,adjoint_gap,control_gap,boundary_residual,cost_alpha,iterations\n";
  for (const auto& r : s.records) {
    out << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{}\n", r.alpha, r.state_gap, r.adjoint_gap,
                       r.control_gap, r.boundary_residual, r.cost_alpha, r.iterations);
  }
}

std::string summary_line(const OptimalityReport<double>& r) {
  return fmt::format("{} [{}] converged={} iterations={} cost={:.17g} grad_norm={:.17g}", to_string(r.solver),
                     to_string(r.variant), r.converged ? "yes" : "no", r.iterations, r.cost, r.grad_norm);
}

std::string summary_line(const CheckResult& c) {
  const char* status = c.passed ? "PASS" : (c.informative ? "INFO" : "FAIL");
  return fmt::format("{} {} measured={:.17g} bound={:.17g}{}{}", status, c.name, c.measured, c.bound,
                     c.note.empty() ? "" : "  # ", c.note);
}

}  // namespace heatctl::cli

#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "heatctl/analysis.hpp"
#include "heatctl/assembly.hpp"
#include "heatctl/control.hpp"
#include "heatctl/problem.hpp"

namespace heatctl::cli {

using Json = nlohmann::ordered_json;

/// Full-precision (17 significant digits) decimal text of a double.
std::string format_double(double v);

Json to_json(const ConstantsReport<double>& k);
Json to_json(const OptimalityReport<double>& r);
Json to_json(const SweepReport<double>& s, const std::vector<CheckResult>& checks);
Json to_json(const CheckResult& c);

void write_json(const std::filesystem::path& path, const Json& j);

/// iteration,cost,grad_norm,step_norm
void write_history_csv(const std::filesystem::path& path, const OptimalityReport<double>& r);
/// step,node,value for every slice of the trajectory.
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory<double>& t);
/// step,node,value with steps 1..N; `nodes` maps rows to global node ids.
void write_series_csv(const std::filesystem::path& path, const Matrix<double>& series,
                      const std::vector<Eigen::Index>& nodes);
/// alpha,state_gap,adjoint_gap,control_gap,boundary_residual,cost_alpha,iterations
void write_sweep_csv(const std::filesystem::path& path, const SweepReport<double>& s);

/// One human-readable line per report, as printed by the CLI.
std::string summary_line(const OptimalityReport<double>& r);
std::string summary_line(const CheckResult& c);

}  // namespace heatctl::cli

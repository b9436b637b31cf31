#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "heatctl/assembly.hpp"
#include "heatctl/control.hpp"
#include "heatctl/mesh.hpp"
#include "heatctl/problem.hpp"

namespace heatctl::cli {

/// Malformed or inconsistent run configuration; the message names the
/// line (syntax errors) or the section.key (value errors).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Analytic field from the catalog, or a per-node CSV file.
///
///   zero
///   constant:<c>
///   linear:<c0>,<cx>,<cy>            c0 + cx x + cy y
///   gaussian:<amp>,<x0>,<y0>,<width> amp exp(-|x - x0|^2 / (2 width^2))
///   csv:<path>                       columns node,value or step,node,value
struct FieldSpec {
  enum class Kind { Zero, Constant, Linear, Gaussian, Csv };
  Kind kind = Kind::Zero;
  std::vector<double> params;
  std::filesystem::path path;
  std::string text;  // as written in the config

  /// Value at (x, y); Csv specs are resolved by load_field instead.
  double eval(double x, double y) const;
};

FieldSpec parse_field_spec(const std::string& text, const std::string& where);

enum class Optimizer { Cg, FixedPoint, Both };

struct RunConfig {
  // [mesh]
  long nx = 16;
  long ny = 16;
  SideSet gamma1 = Side::Left;
  // [time]
  double final_time = 1.0;
  long n_steps = 32;
  // [problem]
  double M1 = 1e-2;
  double M2 = 1e-2;
  Variant variant = Variant::P;
  double alpha = 10.0;
  std::vector<double> alphas{10.0, 100.0, 1000.0, 10000.0};
  FieldSpec b;
  FieldSpec v_b;
  bool v_b_from_b = true;  // v_b omitted: use the b field on every node
  FieldSpec z_d;
  // [sweep]
  bool sweep_fixed = true;
  bool sweep_optimal = true;
  FieldSpec fixed_g;
  FieldSpec fixed_q;
  // [solver]
  double tol = 1e-10;
  long max_iter = 500;
  Optimizer optimizer = Optimizer::Cg;
  // [output]
  std::filesystem::path out_dir = "out";
  bool write_csv = true;
  bool write_json = true;

  std::filesystem::path source;  // config file, relative CSV paths resolve against its directory
};

/// Parses a sectioned key = value file. Throws ConfigError.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});

/// Mesh, operators and problem data realized from a config.
struct Instance {
  Mesh<double> mesh;
  DiscreteOperators<double> ops;
  ProblemData<double> data;
};

Instance build_instance(const RunConfig& cfg);

/// Evaluates a field on the given nodes as an (nodes x n_steps) matrix.
/// Csv fields are read from disk. Throws ConfigError naming `where`.
Matrix<double> load_field(const FieldSpec& spec, const Mesh<double>& mesh, const std::vector<Eigen::Index>& nodes,
                          long n_steps, const std::string& where);

ControlPair<double> fixed_control(const RunConfig& cfg, const Instance& inst);

}  // namespace heatctl::cli

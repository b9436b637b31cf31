#include "heatctl/cli/config.hpp"

#include "heatctl/analysis.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

namespace heatctl::cli {

namespace pt = boost::property_tree;

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, sep)) out.push_back(trim(tok));
  return out;
}

double to_double(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(where + ": expected a number, got '" + s + "'");
  }
}

long to_long(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const long v = std::stol(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(where + ": expected an integer, got '" + s + "'");
  }
}

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"mesh", {"nx", "ny", "gamma1"}},
      {"time", {"T", "n_steps"}},
      {"problem", {"M1", "M2", "variant", "alpha", "alphas", "b", "v_b", "z_d"}},
      {"sweep", {"kind", "fixed_g", "fixed_q"}},
      {"solver", {"tol", "max_iter", "optimizer"}},
      {"output", {"directory", "formats"}},
  };
  return keys;
}

}  // namespace

double FieldSpec::eval(double x, double y) const {
  switch (kind) {
    case Kind::Zero:
      return 0.0;
    case Kind::Constant:
      return params[0];
    case Kind::Linear:
      return params[0] + params[1] * x + params[2] * y;
    case Kind::Gaussian: {
      const double dx = x - params[1], dy = y - params[2];
      return params[0] * std::exp(-(dx * dx + dy * dy) / (2.0 * params[3] * params[3]));
    }
    case Kind::Csv:
      break;
  }
  throw ConfigError("field '" + text + "' cannot be evaluated pointwise");
}

FieldSpec parse_field_spec(const std::string& raw, const std::string& where) {
  FieldSpec f;
  f.text = trim(raw);
  const auto colon = f.text.find(':');
  const std::string name = trim(f.text.substr(0, colon));
  const std::string args = colon == std::string::npos ? std::string{} : trim(f.text.substr(colon + 1));
  auto numbers = [&](std::size_t count) {
    const auto toks = split(args, ',');
    if (toks.size() != count || args.empty())
      throw ConfigError(where + ": field '" + name + "' takes " + std::to_string(count) + " parameter(s)");
    for (const auto& t : toks) f.params.push_back(to_double(t, where));
  };
  if (name == "zero") {
    f.kind = FieldSpec::Kind::Zero;
    if (!args.empty()) throw ConfigError(where + ": field 'zero' takes no parameters");
  } else if (name == "constant") {
    f.kind = FieldSpec::Kind::Constant;
    numbers(1);
  } else if (name == "linear") {
    f.kind = FieldSpec::Kind::Linear;
    numbers(3);
  } else if (name == "gaussian") {
    f.kind = FieldSpec::Kind::Gaussian;
    numbers(4);
    if (!(f.params[3] > 0)) throw ConfigError(where + ": gaussian width must be positive");
  } else if (name == "csv") {
    f.kind = FieldSpec::Kind::Csv;
    if (args.empty()) throw ConfigError(where + ": csv field needs a path");
    f.path = args;
  } else {
    throw ConfigError(where + ": unknown field '" + name + "' (expected zero, constant, linear, gaussian or csv)");
  }
  return f;
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config line " + std::to_string(e.line()) + ": " + e.message());
  }

  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw ConfigError("config: key '" + section + "' must sit inside a section");
    const auto it = known_keys().find(section);
    if (it == known_keys().end()) throw ConfigError("config: unknown section [" + section + "]");
    for (const auto& [key, value] : body) {
      if (!it->second.contains(key)) throw ConfigError("config: unknown key " + section + "." + key);
    }
  }

  auto get = [&](const std::string& section, const std::string& key) -> std::optional<std::string> {
    const auto v = tree.get_optional<std::string>(pt::ptree::path_type(section + "/" + key, '/'));
    if (!v) return std::nullopt;
    return trim(*v);
  };

  RunConfig cfg;
  if (auto v = get("mesh", "nx")) cfg.nx = to_long(*v, "mesh.nx");
  if (auto v = get("mesh", "ny")) cfg.ny = to_long(*v, "mesh.ny");
  if (cfg.nx < 1 || cfg.ny < 1) throw ConfigError("mesh.nx/mesh.ny: must be >= 1");
  if (auto v = get("mesh", "gamma1")) {
    try {
      cfg.gamma1 = parse_sides(*v);
    } catch (const ContractError& e) {
      throw ConfigError(std::string("mesh.gamma1: ") + e.what());
    }
  }
  if (cfg.gamma1.empty() || cfg.gamma1.all())
    throw ConfigError("mesh.gamma1: must name at least one and at most three sides");

  if (auto v = get("time", "T")) cfg.final_time = to_double(*v, "time.T");
  if (auto v = get("time", "n_steps")) cfg.n_steps = to_long(*v, "time.n_steps");
  if (!(cfg.final_time > 0)) throw ConfigError("time.T: must be positive");
  if (cfg.n_steps < 1) throw ConfigError("time.n_steps: must be >= 1");

  if (auto v = get("problem", "M1")) cfg.M1 = to_double(*v, "problem.M1");
  if (auto v = get("problem", "M2")) cfg.M2 = to_double(*v, "problem.M2");
  if (!(cfg.M1 > 0)) throw ConfigError("problem.M1: must be positive");
  if (!(cfg.M2 > 0)) throw ConfigError("problem.M2: must be positive");
  if (auto v = get("problem", "variant")) {
    try {
      cfg.variant = parse_variant(*v);
    } catch (const ContractError& e) {
      throw ConfigError(std::string("problem.variant: ") + e.what());
    }
  }
  if (auto v = get("problem", "alpha")) cfg.alpha = to_double(*v, "problem.alpha");
  if (!(cfg.alpha > 0)) throw ConfigError("problem.alpha: must be positive");
  if (auto v = get("problem", "alphas")) {
    cfg.alphas.clear();
    for (const auto& tok : split(*v, ',')) cfg.alphas.push_back(to_double(tok, "problem.alphas"));
    if (cfg.alphas.empty()) throw ConfigError("problem.alphas: empty list");
    try {
      check_alphas(cfg.alphas);
    } catch (const ContractError& e) {
      throw ConfigError(std::string("problem.alphas: ") + e.what());
    }
  }

  auto field = [&](const std::string& section, const std::string& key, const char* fallback) {
    const auto v = get(section, key);
    FieldSpec f = parse_field_spec(v ? *v : std::string(fallback), section + "." + key);
    if (f.kind == FieldSpec::Kind::Csv) {
      if (f.path.is_relative()) f.path = base_dir / f.path;
      if (!std::filesystem::exists(f.path))
        throw ConfigError(section + "." + key + ": CSV file not found: " + f.path.string());
    }
    return f;
  };
  cfg.b = field("problem", "b", "zero");
  cfg.v_b_from_b = !get("problem", "v_b").has_value();
  cfg.v_b = cfg.v_b_from_b ? cfg.b : field("problem", "v_b", "zero");
  cfg.z_d = field("problem", "z_d", "zero");

  if (auto v = get("sweep", "kind")) {
    if (*v == "fixed") {
      cfg.sweep_optimal = false;
    } else if (*v == "optimal") {
      cfg.sweep_fixed = false;
    } else if (*v != "both") {
      throw ConfigError("sweep.kind: expected fixed, optimal or both, got '" + *v + "'");
    }
  }
  cfg.fixed_g = field("sweep", "fixed_g", "zero");
  cfg.fixed_q = field("sweep", "fixed_q", "zero");

  if (auto v = get("solver", "tol")) cfg.tol = to_double(*v, "solver.tol");
  if (!(cfg.tol > 0)) throw ConfigError("solver.tol: must be positive");
  if (auto v = get("solver", "max_iter")) cfg.max_iter = to_long(*v, "solver.max_iter");
  if (cfg.max_iter < 1) throw ConfigError("solver.max_iter: must be >= 1");
  if (auto v = get("solver", "optimizer")) {
    if (*v == "cg") {
      cfg.optimizer = Optimizer::Cg;
    } else if (*v == "fixed_point") {
      cfg.optimizer = Optimizer::FixedPoint;
    } else if (*v == "both") {
      cfg.optimizer = Optimizer::Both;
    } else {
      throw ConfigError("solver.optimizer: expected cg, fixed_point or both, got '" + *v + "'");
    }
  }

  if (auto v = get("output", "directory")) cfg.out_dir = *v;
  if (auto v = get("output", "formats")) {
    cfg.write_csv = cfg.write_json = false;
    for (const auto& tok : split(*v, ',')) {
      if (tok == "csv") {
        cfg.write_csv = true;
      } else if (tok == "json") {
        cfg.write_json = true;
      } else {
        throw ConfigError("output.formats: unknown format '" + tok + "'");
      }
    }
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  RunConfig cfg = parse_config(buf.str(), path.parent_path());
  cfg.source = path;
  return cfg;
}

Matrix<double> load_field(const FieldSpec& spec, const Mesh<double>& mesh, const std::vector<Eigen::Index>& nodes,
                          long n_steps, const std::string& where) {
  const auto count = static_cast<Eigen::Index>(nodes.size());
  Matrix<double> out(count, n_steps);
  if (spec.kind != FieldSpec::Kind::Csv) {
    for (Eigen::Index i = 0; i < count; ++i) {
      const auto& p = mesh.nodes[static_cast<std::size_t>(nodes[static_cast<std::size_t>(i)])];
      out.row(i).setConstant(spec.eval(p.x(), p.y()));
    }
    return out;
  }

  std::ifstream in(spec.path);
  if (!in) throw ConfigError(where + ": cannot open CSV file " + spec.path.string());
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(where + ": CSV file is empty: " + spec.path.string());
  const auto header = split(line, ',');
  const bool timed = header.size() == 3 && header[0] == "step" && header[1] == "node" && header[2] == "value";
  if (!timed && !(header.size() == 2 && header[0] == "node" && header[1] == "value"))
    throw ConfigError(where + ": CSV header must be 'node,value' or 'step,node,value' in " + spec.path.string());

  std::map<Eigen::Index, Eigen::Index> row_of;
  for (Eigen::Index i = 0; i < count; ++i) row_of[nodes[static_cast<std::size_t>(i)]] = i;
  Matrix<bool> seen = Matrix<bool>::Constant(count, timed ? n_steps : 1, false);
  Matrix<double> values = Matrix<double>::Zero(count, timed ? n_steps : 1);
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto toks = split(line, ',');
    const std::string at = where + " (" + spec.path.string() + ":" + std::to_string(lineno) + ")";
    if (toks.size() != header.size()) throw ConfigError(at + ": wrong number of columns");
    const long step = timed ? to_long(toks[0], at) : 1;
    const long node = to_long(toks[timed ? 1 : 0], at);
    const double value = to_double(toks[timed ? 2 : 1], at);
    if (step < 1 || step > n_steps) throw ConfigError(at + ": step out of range 1.." + std::to_string(n_steps));
    const auto it = row_of.find(node);
    if (it == row_of.end()) continue;  // node not needed for this field
    values(it->second, step - 1) = value;
    seen(it->second, step - 1) = true;
  }
  if (!seen.all()) throw ConfigError(where + ": CSV file " + spec.path.string() + " does not cover every required node");
  for (Eigen::Index j = 0; j < n_steps; ++j) out.col(j) = values.col(timed ? j : 0);
  return out;
}

Instance build_instance(const RunConfig& cfg) {
  Instance inst;
  inst.mesh = build_rect_mesh<double>(cfg.nx, cfg.ny, cfg.gamma1);
  inst.ops = assemble(inst.mesh);
  auto& d = inst.data;
  d.grid = TimeGrid<double>(cfg.final_time, cfg.n_steps);
  d.M1 = cfg.M1;
  d.M2 = cfg.M2;
  d.alpha = cfg.alpha;

  std::vector<Eigen::Index> all(static_cast<std::size_t>(inst.mesh.num_nodes()));
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<Eigen::Index>(i);
  d.b = load_field(cfg.b, inst.mesh, inst.ops.partition.dirichlet, 1, "problem.b").col(0);
  d.v_b = load_field(cfg.v_b, inst.mesh, all, 1, "problem.v_b").col(0);
  const auto& dir = inst.ops.partition.dirichlet;
  for (std::size_t i = 0; i < dir.size(); ++i) {
    if (d.v_b[dir[i]] != d.b[static_cast<Eigen::Index>(i)])
      throw ConfigError("problem.v_b: must equal problem.b on the Gamma1 node " + std::to_string(dir[i]));
  }
  d.z_d = load_field(cfg.z_d, inst.mesh, all, cfg.n_steps, "problem.z_d");
  validate(d, inst.ops);
  return inst;
}

ControlPair<double> fixed_control(const RunConfig& cfg, const Instance& inst) {
  std::vector<Eigen::Index> all(static_cast<std::size_t>(inst.mesh.num_nodes()));
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<Eigen::Index>(i);
  return {load_field(cfg.fixed_g, inst.mesh, all, cfg.n_steps, "sweep.fixed_g"),
          load_field(cfg.fixed_q, inst.mesh, inst.ops.gamma2, cfg.n_steps, "sweep.fixed_q")};
}

}  // namespace heatctl::cli

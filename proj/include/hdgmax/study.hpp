#pragma once

#include <fstream>
#include <iostream>
#include <optional>

#include "linsolve.hpp"
#include "postprocess.hpp"

namespace hdgmax {

struct StudyConfig {
  std::string case_name = "smooth";  // smooth | singular:t=<real>
  std::string domain = "cube";       // cube | lshape
  DiscreteSpec spec;
  bool projection_explicit = false;
  std::vector<int> levels;
  std::string solver = "direct";  // direct | gmres
  double gmres_tol = 1e-10;
  int gmres_restart = 200;
  std::string out;  // output path, empty writes to stdout
  std::string format = "csv";
  int threads = 1;
  std::string dump_mesh_path;    // per level: <path>.n<level>
  std::string dump_matrix_path;  // per level: <path>.n<level>
};

inline double parse_singular_t(const std::string &case_name) {
  const std::string prefix = "singular:t=";
  if (case_name.rfind(prefix, 0) != 0)
    throw config_error("unknown case '" + case_name +
                       "' (expected smooth or singular:t=<real>)");
  const std::string v = case_name.substr(prefix.size());
  std::size_t pos = 0;
  double t = 0;
  try {
    t = std::stod(v, &pos);
  } catch (const std::exception &) {
    throw config_error("cannot parse t in '" + case_name + "'");
  }
  if (pos != v.size()) throw config_error("trailing junk in '" + case_name + "'");
  return t;
}

inline bool is_singular_case(const std::string &case_name) {
  return case_name != "smooth";
}

// normalizes defaults and checks every config invariant
inline void validate_config(StudyConfig &cfg) {
  cfg.spec.validate();
  const bool singular = is_singular_case(cfg.case_name);
  if (singular) {
    const double t = parse_singular_t(cfg.case_name);
    if (t <= 0.0) throw config_error("singular case needs t > 0");
  }
  if (cfg.domain != "cube" && cfg.domain != "lshape")
    throw config_error("domain must be cube or lshape");
  if (singular && cfg.domain == "cube")
    throw config_error("singular case requires the lshape domain");
  if (!cfg.projection_explicit)
    cfg.spec.projection = singular ? TraceProjection::hdiv : TraceProjection::l2;
  if (cfg.levels.empty()) throw config_error("levels must be a nonempty list");
  for (std::size_t i = 0; i < cfg.levels.size(); i++) {
    if (cfg.levels[i] < 1) throw config_error("levels must be positive");
    if (i > 0 && cfg.levels[i] != 2 * cfg.levels[i - 1])
      throw config_error("levels must double at each refinement");
    if (cfg.domain == "lshape" && cfg.levels[i] % 2 != 0)
      throw config_error("lshape levels must be even");
  }
  if (cfg.solver != "direct" && cfg.solver != "gmres")
    throw config_error("solver must be direct or gmres");
  if (cfg.gmres_tol <= 0) throw config_error("gmres-tol must be positive");
  if (cfg.gmres_restart < 1) throw config_error("gmres-restart must be >= 1");
  if (cfg.format != "csv" && cfg.format != "md")
    throw config_error("format must be csv or md");
  if (cfg.threads < 1) throw config_error("threads must be >= 1");
  if (cfg.spec.quad_inc < 0) throw config_error("quad-inc must be >= 0");
}

inline ManufacturedCase make_case(const StudyConfig &cfg) {
  if (!is_singular_case(cfg.case_name)) return smooth_case();
  return singular_case(parse_singular_t(cfg.case_name));
}

inline MeshTopology build_domain_mesh(const std::string &domain, int n) {
  return domain == "cube" ? build_box_mesh(n) : build_lshape_mesh(n);
}

// flat key = value file, one pair per line, # starts a comment
inline std::vector<std::pair<std::string, std::string>>
read_config_file(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file " + path);
  std::vector<std::pair<std::string, std::string>> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    lineno++;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto strip = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      const auto e = s.find_last_not_of(" \t\r");
      return s.substr(b, e - b + 1);
    };
    if (strip(line).empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw config_error("config line " + std::to_string(lineno) +
                         " is not key = value");
    kv.emplace_back(strip(line.substr(0, eq)), strip(line.substr(eq + 1)));
  }
  return kv;
}

inline std::vector<int> parse_levels(const std::string &s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      const int v = std::stoi(item, &pos);
      if (pos != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception &) {
      throw config_error("cannot parse level '" + item + "'");
    }
  }
  return out;
}

// applies one key (config-file spelling matches the CLI flag without dashes)
inline void apply_config_key(StudyConfig &cfg, const std::string &key,
                             const std::string &value) {
  const auto to_int = [&](const std::string &v) {
    try {
      std::size_t pos = 0;
      const int r = std::stoi(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return r;
    } catch (const std::exception &) {
      throw config_error("key " + key + ": cannot parse integer '" + v + "'");
    }
  };
  const auto to_double = [&](const std::string &v) {
    try {
      std::size_t pos = 0;
      const double r = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return r;
    } catch (const std::exception &) {
      throw config_error("key " + key + ": cannot parse number '" + v + "'");
    }
  };
  if (key == "case") {
    cfg.case_name = value;
  } else if (key == "domain") {
    cfg.domain = value;
  } else if (key == "k") {
    cfg.spec.k = to_int(value);
  } else if (key == "m") {
    cfg.spec.m = to_int(value);
  } else if (key == "alpha") {
    cfg.spec.alpha = to_int(value);
  } else if (key == "trace-projection") {
    if (value == "l2")
      cfg.spec.projection = TraceProjection::l2;
    else if (value == "hdiv")
      cfg.spec.projection = TraceProjection::hdiv;
    else
      throw config_error("trace-projection must be l2 or hdiv");
    cfg.projection_explicit = true;
  } else if (key == "levels") {
    cfg.levels = parse_levels(value);
  } else if (key == "solver") {
    cfg.solver = value;
  } else if (key == "gmres-tol") {
    cfg.gmres_tol = to_double(value);
  } else if (key == "gmres-restart") {
    cfg.gmres_restart = to_int(value);
  } else if (key == "quad-inc") {
    cfg.spec.quad_inc = to_int(value);
  } else if (key == "out") {
    cfg.out = value;
  } else if (key == "format") {
    cfg.format = value;
  } else if (key == "threads") {
    cfg.threads = to_int(value);
  } else if (key == "dump-mesh") {
    cfg.dump_mesh_path = value;
  } else if (key == "dump-matrix") {
    cfg.dump_matrix_path = value;
  } else {
    throw config_error("unknown config key '" + key + "'");
  }
}

inline void load_config_file(StudyConfig &cfg, const std::string &path) {
  for (const auto &[key, value] : read_config_file(path))
    apply_config_key(cfg, key, value);
}

inline void dump_matrix(const Eigen::SparseMatrix<double> &A, std::ostream &os) {
  for (int j = 0; j < A.outerSize(); j++)
    for (Eigen::SparseMatrix<double>::InnerIterator it(A, j); it; ++it) {
      char buf[80];
      std::snprintf(buf, sizeof(buf), "%d %d %.17g\n",
                    static_cast<int>(it.row()) + 1, static_cast<int>(it.col()) + 1,
                    it.value());
      os << buf;
    }
}

struct StudyResult {
  std::vector<ErrorReport> reports;
  RateTable rates;
};

inline StudyResult run_study(const StudyConfig &config,
                             std::ostream *progress = nullptr) {
  StudyConfig cfg = config;
  validate_config(cfg);
  const ManufacturedCase cs = make_case(cfg);
  StudyResult result;

  auto tic = [] { return std::chrono::steady_clock::now(); };
  auto sec = [](auto a, auto b) {
    return std::chrono::duration<double>(b - a).count();
  };

  for (const int n : cfg.levels) {
    const MeshTopology mesh = build_domain_mesh(cfg.domain, n);
    if (!cfg.dump_mesh_path.empty()) {
      std::ofstream os(cfg.dump_mesh_path + ".n" + std::to_string(n));
      if (!os) throw config_error("cannot write " + cfg.dump_mesh_path);
      dump_mesh(mesh, os);
    }

    const AssembledSystem asys = assemble(mesh, cfg.spec, cs, cfg.threads);
    if (!cfg.dump_matrix_path.empty()) {
      std::ofstream os(cfg.dump_matrix_path + ".n" + std::to_string(n));
      if (!os) throw config_error("cannot write " + cfg.dump_matrix_path);
      dump_matrix(asys.sys.A, os);
    }

    const auto t0 = tic();
    Eigen::VectorXd y;
    int iters = 0;
    if (cfg.solver == "direct") {
      y = solve_direct(asys.sys.A, asys.sys.b);
    } else {
      GmresOptions opt;
      opt.tol = cfg.gmres_tol;
      opt.restart = cfg.gmres_restart;
      const GmresResult gr = solve_gmres(asys.sys.A, asys.sys.b, opt);
      if (!gr.converged)
        throw solver_error("gmres stalled at relative residual " +
                           std::to_string(gr.relres) + " on level " +
                           std::to_string(n));
      y = gr.x;
      iters = gr.iterations;
    }
    const double t_solve = sec(t0, tic());

    const FieldSolution sol = recover_interior(mesh, cfg.spec, asys, y);
    const auto t1 = tic();
    ErrorReport rep = compute_errors(mesh, cfg.spec, cs, sol);
    rep.t_error = sec(t1, tic());
    rep.level = n;
    rep.solver_iters = iters;
    const double bn = asys.sys.b.norm();
    rep.solver_relres =
        bn > 0 ? (asys.sys.b - asys.sys.A * y).norm() / bn : 0.0;
    rep.t_assemble = asys.t_boundary + asys.t_local + asys.t_scatter;
    rep.t_condense = asys.t_condense;
    rep.t_solve = t_solve;
    result.reports.push_back(rep);

    if (progress)
      *progress << cfg.case_name << " n=" << n << " dof=" << rep.dof_all
                << " err_r=" << rep.err_r << " err_u=" << rep.err_u
                << " err_p=" << rep.err_p << " solve=" << rep.t_solve << "s\n";
  }
  result.rates = convergence_rates(result.reports);
  return result;
}

inline std::string render_result(const StudyResult &result, const std::string &format) {
  return format == "md" ? to_markdown(result.reports, result.rates)
                        : to_csv(result.reports, result.rates);
}

// effective configuration echo used by the dry-run mode
inline std::string describe_config(const StudyConfig &cfg) {
  std::ostringstream os;
  os << "case = " << cfg.case_name << "\n";
  os << "domain = " << cfg.domain << "\n";
  os << "k = " << cfg.spec.k << "\n";
  os << "m = " << cfg.spec.m << "\n";
  os << "alpha = " << cfg.spec.alpha << "\n";
  os << "trace-projection = "
     << (cfg.spec.projection == TraceProjection::hdiv ? "hdiv" : "l2") << "\n";
  os << "levels = ";
  for (std::size_t i = 0; i < cfg.levels.size(); i++)
    os << (i ? "," : "") << cfg.levels[i];
  os << "\n";
  os << "solver = " << cfg.solver << "\n";
  os << "gmres-tol = " << cfg.gmres_tol << "\n";
  os << "gmres-restart = " << cfg.gmres_restart << "\n";
  os << "quad-inc = " << cfg.spec.quad_inc << "\n";
  os << "format = " << cfg.format << "\n";
  os << "threads = " << cfg.threads << "\n";
  return os.str();
}

} // namespace hdgmax

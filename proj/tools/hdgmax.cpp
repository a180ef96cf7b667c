#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include <hdgmax/study.hpp>

using namespace hdgmax;

int main(int argc, char **argv) {
  StudyConfig cfg;
  std::string config_path, case_name, domain, projection, solver, format, out;
  std::string dump_mesh_path, dump_matrix_path, levels_str;
  int k = -1, m = -99, alpha = 0, threads = -1, quad_inc = -1, restart = -1;
  double gmres_tol = -1;

  CLI::App app{"HDG refinement studies for the mixed curl-curl model problem"};
  app.add_option("--config", config_path, "flat key = value config file");
  app.add_option("--case", case_name, "smooth | singular:t=<real>");
  app.add_option("--domain", domain, "cube | lshape");
  app.add_option("--k", k, "trace and field degree (1..4)");
  app.add_option("--m", m, "curl field degree, k-1 or k");
  app.add_option("--alpha", alpha, "multiplier penalty exponent, -1 or 1");
  app.add_option("--trace-projection", projection, "l2 | hdiv");
  app.add_option("--levels", levels_str, "comma list of 1/h values, doubling");
  app.add_option("--solver", solver, "direct | gmres");
  app.add_option("--gmres-tol", gmres_tol, "gmres relative tolerance");
  app.add_option("--gmres-restart", restart, "gmres restart length");
  app.add_option("--quad-inc", quad_inc, "quadrature degree increment");
  app.add_option("--out", out, "output file (default stdout)");
  app.add_option("--format", format, "csv | md");
  app.add_option("--threads", threads, "assembly threads");
  app.add_option("--dump-mesh", dump_mesh_path, "write mesh dumps to <path>.n<level>");
  app.add_option("--dump-matrix", dump_matrix_path,
                 "write condensed matrices to <path>.n<level>, 1-based coordinate text");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (!config_path.empty()) load_config_file(cfg, config_path);
    // flags override file values
    if (!case_name.empty()) cfg.case_name = case_name;
    if (!domain.empty()) cfg.domain = domain;
    if (k != -1) cfg.spec.k = k;
    if (m != -99) cfg.spec.m = m;
    if (alpha != 0) cfg.spec.alpha = alpha;
    if (!projection.empty()) apply_config_key(cfg, "trace-projection", projection);
    if (!levels_str.empty()) cfg.levels = parse_levels(levels_str);
    if (!solver.empty()) cfg.solver = solver;
    if (gmres_tol >= 0) cfg.gmres_tol = gmres_tol;
    if (restart != -1) cfg.gmres_restart = restart;
    if (quad_inc != -1) cfg.spec.quad_inc = quad_inc;
    if (!out.empty()) cfg.out = out;
    if (!format.empty()) cfg.format = format;
    if (threads != -1) cfg.threads = threads;
    if (!dump_mesh_path.empty()) cfg.dump_mesh_path = dump_mesh_path;
    if (!dump_matrix_path.empty()) cfg.dump_matrix_path = dump_matrix_path;

    if (argc == 1) {
      std::cout << "# dry run, no levels executed; pass --levels to solve\n"
                << describe_config(cfg);
      return 0;
    }

    const StudyResult result = run_study(cfg, &std::cerr);
    const std::string table = render_result(result, cfg.format);
    if (cfg.out.empty()) {
      std::cout << table;
    } else {
      std::ofstream os(cfg.out);
      if (!os) {
        std::cerr << "error: cannot write " << cfg.out << "\n";
        return 2;
      }
      os << table;
    }
    return 0;
  } catch (const config_error &e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const solver_error &e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

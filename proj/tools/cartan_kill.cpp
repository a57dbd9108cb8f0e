// cartan-kill: curvature jets, Killing generators, symmetry strata, and the
// group-log expansion on Cartan-geometry charts. Thin shell over the C API:
// flags are folded into a JSON config, geometry handles come from the
// library, reports go to stdout or --out.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "cartankill.h"

namespace {

struct Options {
  std::string geometry;
  std::string metric_file;
  std::vector<double> point;
  std::vector<std::string> grid;
  int m = 0;
  int m_max = 4;
  int kmax = 4;
  int order = 0;
  bool verify = false;
  bool list = false;
  double tol_ode = 1e-10;
  double tol_rank = 1e-7;
  double tol_verify = 1e-4;
  unsigned seed = 2026;
  int workers = 1;
  double theta0 = 0.0;
  std::string out;
  std::string format = "json";
};

void add_geometry_flags(CLI::App* cmd, Options& o) {
  auto* g = cmd->add_option("--geometry", o.geometry,
                            "builtin chart: flat2, sphere2, hyperbolic2, "
                            "revolution[:f], bump[:eps], klein:<group>");
  auto* f = cmd->add_option("--metric-file", o.metric_file,
                            "JSON metric description file");
  g->excludes(f);
}

void add_common_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--tol-ode", o.tol_ode, "flow integrator tolerance");
  cmd->add_option("--tol-rank", o.tol_rank, "relative rank cutoff");
  cmd->add_option("--tol-verify", o.tol_verify, "verification tolerance");
  cmd->add_option("--seed", o.seed, "RNG seed recorded in the report");
  cmd->add_option("--theta0", o.theta0, "fiber coordinate of the section");
  cmd->add_option("--out", o.out, "write the report here instead of stdout");
}

std::string config_json(const Options& o, bool list) {
  nlohmann::json cfg;
  cfg["point"] = o.point;
  nlohmann::json grid = nlohmann::json::array();
  for (const auto& axis : o.grid) {
    double lo = 0, hi = 0;
    int steps = 0;
    char tail = 0;
    if (std::sscanf(axis.c_str(), "%lf:%lf:%d%c", &lo, &hi, &steps, &tail) !=
            3 ||
        steps < 1)
      throw CLI::ValidationError("--grid", "expected lo:hi:steps, got '" +
                                               axis + "'");
    grid.push_back({lo, hi, steps});
  }
  cfg["grid"] = grid;
  cfg["m"] = o.m;
  cfg["m_max"] = o.m_max;
  cfg["kmax"] = o.kmax;
  cfg["order"] = o.order;
  cfg["tol_ode"] = o.tol_ode;
  cfg["tol_rank"] = o.tol_rank;
  cfg["tol_verify"] = o.tol_verify;
  cfg["seed"] = o.seed;
  cfg["workers"] = o.workers;
  cfg["theta0"] = o.theta0;
  cfg["format"] = o.format;
  cfg["list"] = list;
  return cfg.dump();
}

// nullptr with exit code 2 already reported when no source was given.
ck_geometry* open_geometry(const Options& o, bool required) {
  char* err = nullptr;
  ck_geometry* g = nullptr;
  if (!o.metric_file.empty()) {
    std::ifstream in(o.metric_file);
    if (!in) {
      std::cerr << "cartan-kill: cannot read " << o.metric_file << "\n";
      return nullptr;
    }
    std::ostringstream text;
    text << in.rdbuf();
    g = ck_geometry_from_metric_json(text.str().c_str(), &err);
  } else if (!o.geometry.empty()) {
    g = ck_geometry_builtin(o.geometry.c_str(), &err);
  } else if (required) {
    std::cerr << "cartan-kill: need --geometry or --metric-file\n";
    return nullptr;
  }
  if (err) {
    std::cerr << "cartan-kill: " << err << "\n";
    ck_string_free(err);
  }
  return g;
}

int deliver(const std::string& text, const std::string& out) {
  if (out.empty()) {
    std::cout << text << "\n";
    return 0;
  }
  std::ofstream f(out);
  f << text << "\n";
  if (!f) {
    std::cerr << "cartan-kill: cannot write " << out << "\n";
    return 2;
  }
  return 0;
}

std::string csv_sibling(const std::string& out) {
  const auto dot = out.rfind(".json");
  if (dot != std::string::npos && dot == out.size() - 5)
    return out.substr(0, dot) + ".csv";
  return out + ".csv";
}

int report_status(int status, char* err) {
  if (err) {
    std::cerr << "cartan-kill: " << err << "\n";
    ck_string_free(err);
  }
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"local symmetry analysis on Cartan-geometry charts"};
  app.set_version_flag("--version", ck_version());
  app.require_subcommand(1);
  Options o;

  auto* killing = app.add_subcommand(
      "killing", "Killing generators and stabilization at a point, with "
                 "integrated local fields and verification residuals");
  add_geometry_flags(killing, o);
  killing->add_option("--point", o.point, "chart point (padded with theta0)")
      ->delimiter(',');
  killing->add_option("--m", o.m, "jet order; 0 stabilizes automatically")
      ->check(CLI::Range(0, 8));
  killing->add_option("--m-max", o.m_max, "stabilization search bound")
      ->check(CLI::Range(1, 8));
  add_common_flags(killing, o);

  auto* strata = app.add_subcommand(
      "strata", "grid scan of the local-symmetry dimension over the base");
  add_geometry_flags(strata, o);
  strata
      ->add_option("--grid", o.grid,
                   "axis spec lo:hi:steps; repeat per base axis")
      ->required();
  strata->add_option("--m-max", o.m_max, "stabilization search bound")
      ->check(CLI::Range(1, 8));
  strata->add_option("--workers", o.workers, "parallel samples")
      ->check(CLI::Range(1, 64));
  strata->add_option("--format", o.format, "stdout format when no --out")
      ->check(CLI::IsMember({"json", "csv"}));
  add_common_flags(strata, o);

  auto* bch = app.add_subcommand(
      "bch", "symbolic group-log expansion table and its numeric check "
             "against fitted chart flows");
  add_geometry_flags(bch, o);
  bch->add_option("--order", o.order, "print this symbolic order")
      ->check(CLI::Range(1, 8));
  bch->add_option("--kmax", o.kmax, "orders covered by the numeric check")
      ->check(CLI::Range(1, 8));
  bch->add_flag("--verify", o.verify, "run the numeric check (needs a "
                                      "geometry)");
  bch->add_option("--point", o.point, "chart point for the numeric check")
      ->delimiter(',');
  add_common_flags(bch, o);

  auto* verify = app.add_subcommand(
      "verify", "invariant battery on the chosen geometry");
  add_geometry_flags(verify, o);
  verify->add_flag("--list", o.list, "enumerate check names and exit");
  verify->add_option("--point", o.point, "chart point for the checks")
      ->delimiter(',');
  verify->add_option("--kmax", o.kmax, "orders for the expansion check")
      ->check(CLI::Range(1, 8));
  verify->add_option("--m-max", o.m_max, "stabilization search bound")
      ->check(CLI::Range(1, 8));
  add_common_flags(verify, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  std::string cfg;
  try {
    cfg = config_json(o, o.list);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  char* out_json = nullptr;
  char* out_csv = nullptr;
  char* err = nullptr;
  int status = 0;

  if (killing->parsed()) {
    ck_geometry* g = open_geometry(o, true);
    if (!g) return 2;
    status = ck_run_killing(g, cfg.c_str(), &out_json, &err);
    ck_geometry_free(g);
    if (status != CK_OK) return report_status(status, err);
    return deliver(out_json ? out_json : "", o.out);
  }

  if (strata->parsed()) {
    ck_geometry* g = open_geometry(o, true);
    if (!g) return 2;
    status = ck_run_strata(g, cfg.c_str(), &out_json, &out_csv, &err);
    ck_geometry_free(g);
    if (status != CK_OK) return report_status(status, err);
    if (o.out.empty())
      return deliver(o.format == "csv" ? out_csv : out_json, "");
    int rc = deliver(out_json, o.out);
    if (rc == 0) rc = deliver(out_csv, csv_sibling(o.out));
    return rc;
  }

  if (bch->parsed()) {
    if (o.verify && o.geometry.empty() && o.metric_file.empty()) {
      std::cerr << "cartan-kill: --verify needs --geometry or "
                   "--metric-file\n";
      return 2;
    }
    if (o.order == 0 && o.geometry.empty() && o.metric_file.empty()) {
      std::cerr << "cartan-kill: bch needs --order and/or a geometry to "
                   "verify against\n";
      return 2;
    }
    ck_geometry* g = open_geometry(o, false);
    if (!g && !o.geometry.empty()) return 2;
    if (!g && !o.metric_file.empty()) return 2;
    status = ck_run_bch(g, cfg.c_str(), &out_json, &err);
    ck_geometry_free(g);
    if (status != CK_OK) return report_status(status, err);
    return deliver(out_json, o.out);
  }

  // verify
  ck_geometry* g = open_geometry(o, true);
  if (!g) return 2;
  status = ck_run_verify(g, cfg.c_str(), &out_json, &err);
  ck_geometry_free(g);
  if (status != CK_OK) return report_status(status, err);
  return deliver(out_json, o.out);
}

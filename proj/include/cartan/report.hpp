#pragma once

#include <array>
#include <string>
#include <vector>

#include "cartan/chart.hpp"

namespace cartan {

// Parsed command configuration; one struct serves all commands, each uses
// the fields it needs. All tolerances must stay positive.
struct RunConfig {
  std::vector<double> point;                 // chart point; short vectors are
                                             // padded with theta0
  std::vector<std::array<double, 3>> grid;   // lo, hi, steps per base axis
  int m = 0;          // killing: requested order; 0 = stabilize automatically
  int m_max = 4;
  int kmax = 4;       // bch orders
  int order = 0;      // bch: print a single symbolic order
  double tol_ode = 1e-10;
  double tol_rank = 1e-7;
  double tol_verify = 1e-4;
  unsigned seed = 2026;
  int workers = 1;
  double theta0 = 0.0;
  std::string format = "json";
  bool list = false;  // verify: enumerate check names only
};

RunConfig config_from_json(const std::string& text);

std::string report_version();

/// Killing pipeline at a point: spaces, stabilization, integration,
/// verification, base descent (metric frontends).
std::string run_killing(const CartanChart& chart, const RunConfig& cfg);

struct StrataOutput {
  std::string json;
  std::string csv;
};
StrataOutput run_strata(const CartanChart& chart, const RunConfig& cfg);

/// Symbolic table (cfg.order > 0) and/or the zeta-vs-BCH check on the
/// chart. `chart` may be null for the purely symbolic table.
std::string run_bch(const CartanChart* chart, const RunConfig& cfg);

std::vector<std::string> verify_check_names();
std::string run_verify(const CartanChart& chart, const RunConfig& cfg);

}  // namespace cartan

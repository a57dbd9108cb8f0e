#include "cartankill.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "cartan/frontends.hpp"
#include "cartan/report.hpp"
#include "cartan/types.hpp"

struct ck_geometry {
  cartan::CartanChart chart;
};

namespace {

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void set_err(char** err, const std::string& msg) {
  if (err) *err = dup_string(msg);
}

// Maps the core exception taxonomy onto the status enum.
template <class Fn>
int guarded(char** err, Fn&& fn) {
  try {
    fn();
    return CK_OK;
  } catch (const cartan::invalid_input& e) {
    set_err(err, e.what());
    return CK_ERR_INVALID;
  } catch (const cartan::numerical_error& e) {
    set_err(err, e.what());
    return CK_ERR_NUMERIC;
  } catch (const std::exception& e) {
    set_err(err, e.what());
    return CK_ERR_NUMERIC;
  }
}

}  // namespace

extern "C" {

const char* ck_version(void) {
  static const std::string v = cartan::report_version();
  return v.c_str();
}

ck_geometry* ck_geometry_builtin(const char* name, char** err) {
  if (!name) {
    set_err(err, "geometry name is null");
    return nullptr;
  }
  ck_geometry* g = nullptr;
  guarded(err, [&] { g = new ck_geometry{cartan::builtin_chart(name)}; });
  return g;
}

ck_geometry* ck_geometry_from_metric_json(const char* text, char** err) {
  if (!text) {
    set_err(err, "metric description is null");
    return nullptr;
  }
  ck_geometry* g = nullptr;
  guarded(err, [&] {
    g = new ck_geometry{
        cartan::riemannian_to_cartan(cartan::metric_from_json(text))};
  });
  return g;
}

void ck_geometry_free(ck_geometry* g) { delete g; }

int ck_geometry_base_dim(const ck_geometry* g) {
  return g ? g->chart.base_dim : -1;
}

int ck_geometry_dim(const ck_geometry* g) { return g ? g->chart.dim() : -1; }

int ck_run_killing(const ck_geometry* g, const char* config_json,
                   char** out_json, char** err) {
  if (!g || !config_json || !out_json) {
    set_err(err, "null argument");
    return CK_ERR_INVALID;
  }
  return guarded(err, [&] {
    const auto cfg = cartan::config_from_json(config_json);
    *out_json = dup_string(cartan::run_killing(g->chart, cfg));
  });
}

int ck_run_strata(const ck_geometry* g, const char* config_json,
                  char** out_json, char** out_csv, char** err) {
  if (!g || !config_json || !out_json) {
    set_err(err, "null argument");
    return CK_ERR_INVALID;
  }
  return guarded(err, [&] {
    const auto cfg = cartan::config_from_json(config_json);
    auto out = cartan::run_strata(g->chart, cfg);
    *out_json = dup_string(out.json);
    if (out_csv) *out_csv = dup_string(out.csv);
  });
}

int ck_run_bch(const ck_geometry* g, const char* config_json, char** out_json,
               char** err) {
  if (!config_json || !out_json) {
    set_err(err, "null argument");
    return CK_ERR_INVALID;
  }
  return guarded(err, [&] {
    const auto cfg = cartan::config_from_json(config_json);
    *out_json =
        dup_string(cartan::run_bch(g ? &g->chart : nullptr, cfg));
  });
}

int ck_run_verify(const ck_geometry* g, const char* config_json,
                  char** out_json, char** err) {
  if (!g || !config_json || !out_json) {
    set_err(err, "null argument");
    return CK_ERR_INVALID;
  }
  return guarded(err, [&] {
    const auto cfg = cartan::config_from_json(config_json);
    *out_json = dup_string(cartan::run_verify(g->chart, cfg));
  });
}

void ck_string_free(char* s) { std::free(s); }

}  // extern "C"

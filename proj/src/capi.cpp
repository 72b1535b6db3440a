// Copyright 2026 The qmupl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "qmupl/qmupl.h"

#include <cstdio>
#include <new>
#include <string>

#include "qmupl/collapse.hpp"
#include "qmupl/error.hpp"
#include "qmupl/io.hpp"
#include "qmupl/params.hpp"
#include "qmupl/run.hpp"

struct qmupl_params {
  qmupl::Config cfg;
};

struct qmupl_run {
  qmupl::RunSpec spec;
};

struct qmupl_result {
  qmupl::RunResult result;
};

namespace {

thread_local std::string g_last_error;

qmupl_status status_of(qmupl::ErrorCode c) {
  using qmupl::ErrorCode;
  switch (c) {
    case ErrorCode::Domain: return QMUPL_ERR_DOMAIN;
    case ErrorCode::Propagation: return QMUPL_ERR_PROPAGATION;
    case ErrorCode::NoHit: return QMUPL_ERR_NO_HIT;
    case ErrorCode::Config: return QMUPL_ERR_CONFIG;
    case ErrorCode::Io: return QMUPL_ERR_IO;
    case ErrorCode::BoundaryLeak: return QMUPL_ERR_BOUNDARY_LEAK;
    case ErrorCode::Invariant: return QMUPL_ERR_INVARIANT;
  }
  return QMUPL_ERR_INTERNAL;
}

qmupl_status error(qmupl_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

template <class Fn>
qmupl_status guarded(Fn&& fn) {
  try {
    g_last_error.clear();
    return fn();
  } catch (const qmupl::Error& e) {
    return error(status_of(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return error(QMUPL_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return error(QMUPL_ERR_INTERNAL, e.what());
  } catch (...) {
    return error(QMUPL_ERR_INTERNAL, "unknown exception");
  }
}

double* threshold_field(qmupl::CollapseThresholds& th, const std::string& name) {
  if (name == "a") return &th.a;
  if (name == "b") return &th.b;
  if (name == "multiplier") return &th.multiplier;
  return nullptr;
}

bool is_physical_field(const std::string& name) {
  for (auto f : qmupl::kPhysicalFieldNames) {
    if (f == name) return true;
  }
  return false;
}

}  // namespace

extern "C" {

const char* qmupl_status_string(qmupl_status status) {
  switch (status) {
    case QMUPL_OK: return "ok";
    case QMUPL_ERR_INVALID_ARGUMENT: return "invalid argument";
    case QMUPL_ERR_DOMAIN: return "domain error";
    case QMUPL_ERR_CONFIG: return "configuration error";
    case QMUPL_ERR_IO: return "i/o error";
    case QMUPL_ERR_PROPAGATION: return "propagation error";
    case QMUPL_ERR_NO_HIT: return "no hit within the step budget";
    case QMUPL_ERR_BOUNDARY_LEAK: return "boundary leak";
    case QMUPL_ERR_INVARIANT: return "invariant check failed";
    case QMUPL_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* qmupl_last_error(void) { return g_last_error.c_str(); }

const char* qmupl_version(void) { return QMUPL_VERSION_STRING; }

qmupl_status qmupl_params_create(const char* preset, qmupl_params** out) {
  return guarded([&] {
    if (out == nullptr) return error(QMUPL_ERR_INVALID_ARGUMENT, "out is null");
    *out = nullptr;
    const std::string p = preset == nullptr ? "reference" : preset;
    auto h = new qmupl_params;
    if (p == "reference") {
      h->cfg.physical = qmupl::PhysicalParams::reference();
    } else if (p == "desk") {
      h->cfg.physical = qmupl::PhysicalParams::desk();
    } else {
      delete h;
      return error(QMUPL_ERR_INVALID_ARGUMENT, "unknown preset '" + p + "'");
    }
    *out = h;
    return QMUPL_OK;
  });
}

qmupl_status qmupl_params_load(const char* path, qmupl_params** out) {
  return guarded([&] {
    if (out == nullptr || path == nullptr) return error(QMUPL_ERR_INVALID_ARGUMENT, "null argument");
    *out = nullptr;
    qmupl::Config cfg = qmupl::load_config(path);
    *out = new qmupl_params{cfg};
    return QMUPL_OK;
  });
}

void qmupl_params_destroy(qmupl_params* params) { delete params; }

qmupl_status qmupl_params_set(qmupl_params* params, const char* name, double value) {
  return guarded([&] {
    if (params == nullptr || name == nullptr) return error(QMUPL_ERR_INVALID_ARGUMENT, "null argument");
    const std::string n = name;
    if (double* f = threshold_field(params->cfg.thresholds, n)) {
      *f = value;
      return QMUPL_OK;
    }
    if (!is_physical_field(n)) return error(QMUPL_ERR_INVALID_ARGUMENT, "unknown field '" + n + "'");
    // Physical fields are independent, so each one is checked on entry and a bad value leaves
    // the handle unchanged. Thresholds are coupled (b > a) and are checked at use.
    qmupl::PhysicalParams candidate = params->cfg.physical;
    qmupl::field(candidate, n) = value;
    candidate.validate();
    params->cfg.physical = candidate;
    return QMUPL_OK;
  });
}

qmupl_status qmupl_params_get(const qmupl_params* params, const char* name, double* value) {
  return guarded([&] {
    if (params == nullptr || name == nullptr || value == nullptr) {
      return error(QMUPL_ERR_INVALID_ARGUMENT, "null argument");
    }
    const std::string n = name;
    qmupl::CollapseThresholds th = params->cfg.thresholds;
    if (double* f = threshold_field(th, n)) {
      *value = *f;
      return QMUPL_OK;
    }
    if (!is_physical_field(n)) return error(QMUPL_ERR_INVALID_ARGUMENT, "unknown field '" + n + "'");
    *value = qmupl::field(params->cfg.physical, n);
    return QMUPL_OK;
  });
}

qmupl_status qmupl_derive_constants(const qmupl_params* params, qmupl_derived* out) {
  return guarded([&] {
    if (params == nullptr || out == nullptr) return error(QMUPL_ERR_INVALID_ARGUMENT, "null argument");
    const qmupl::DerivedConstants dc = qmupl::derive_constants(params->cfg.physical);
    *out = {dc.lambda, dc.omega, dc.sigma_q, dc.sigma_p};
    return QMUPL_OK;
  });
}

qmupl_status qmupl_collapse_time(const qmupl_params* params, double gamma0, double* t_collapse,
                                 int* exceeds_T) {
  return guarded([&] {
    if (params == nullptr || t_collapse == nullptr) {
      return error(QMUPL_ERR_INVALID_ARGUMENT, "null argument");
    }
    const qmupl::CollapseTime ct =
        qmupl::collapse_time(params->cfg.physical, params->cfg.thresholds, gamma0);
    *t_collapse = ct.value;
    if (exceeds_T != nullptr) *exceeds_T = ct.exceeds_T ? 1 : 0;
    return QMUPL_OK;
  });
}

qmupl_status qmupl_collapse_probability(double gamma0, double b, double* p_plus,
                                        double* p_minus) {
  return guarded([&] {
    const qmupl::CollapseProbability p = qmupl::collapse_probability(gamma0, b);
    if (p_plus != nullptr) *p_plus = p.p_plus;
    if (p_minus != nullptr) *p_minus = p.p_minus;
    return QMUPL_OK;
  });
}

qmupl_status qmupl_hitting_time_stats(double gamma0, double b, double* mean, double* variance) {
  return guarded([&] {
    const qmupl::HittingStats h = qmupl::hitting_time_stats(gamma0, b);
    if (mean != nullptr) *mean = h.mean;
    if (variance != nullptr) *variance = h.variance;
    return QMUPL_OK;
  });
}

qmupl_status qmupl_stability_bound(double a, double b, double* bound, double* deficit) {
  return guarded([&] {
    const qmupl::StabilityBound s = qmupl::stability_probability(a, b);
    if (bound != nullptr) *bound = s.bound;
    if (deficit != nullptr) *deficit = s.deficit;
    return QMUPL_OK;
  });
}

qmupl_status qmupl_run_create(const char* experiment, qmupl_run** out) {
  return guarded([&] {
    if (out == nullptr || experiment == nullptr) {
      return error(QMUPL_ERR_INVALID_ARGUMENT, "null argument");
    }
    *out = nullptr;
    const auto e = qmupl::parse_experiment(experiment);
    if (!e) return error(QMUPL_ERR_INVALID_ARGUMENT, std::string("unknown experiment '") + experiment + "'");
    auto h = new qmupl_run;
    h->spec.experiment = *e;
    *out = h;
    return QMUPL_OK;
  });
}

void qmupl_run_destroy(qmupl_run* run) { delete run; }

qmupl_status qmupl_run_set(qmupl_run* run, const char* key, const char* value) {
  return guarded([&] {
    if (run == nullptr || key == nullptr || value == nullptr) {
      return error(QMUPL_ERR_INVALID_ARGUMENT, "null argument");
    }
    run->spec.set(key, value);
    return QMUPL_OK;
  });
}

qmupl_status qmupl_run_use_params(qmupl_run* run, const qmupl_params* params) {
  return guarded([&] {
    if (run == nullptr || params == nullptr) return error(QMUPL_ERR_INVALID_ARGUMENT, "null argument");
    char buf[32];
    for (auto name : qmupl::kPhysicalFieldNames) {
      std::snprintf(buf, sizeof buf, "%.17g", qmupl::field(params->cfg.physical, name));
      run->spec.set(name, buf);
    }
    const auto& th = params->cfg.thresholds;
    const std::pair<const char*, double> t[] = {{"a", th.a}, {"b", th.b}, {"multiplier", th.multiplier}};
    for (const auto& [k, v] : t) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      run->spec.set(k, buf);
    }
    return QMUPL_OK;
  });
}

qmupl_status qmupl_run_validate(const qmupl_run* run) {
  return guarded([&] {
    if (run == nullptr) return error(QMUPL_ERR_INVALID_ARGUMENT, "null argument");
    run->spec.validate();
    return QMUPL_OK;
  });
}

qmupl_status qmupl_run_execute(const qmupl_run* run, qmupl_result** out) {
  return guarded([&] {
    if (run == nullptr || out == nullptr) return error(QMUPL_ERR_INVALID_ARGUMENT, "null argument");
    *out = nullptr;
    auto h = new qmupl_result{qmupl::run(run->spec)};
    *out = h;
    if (!h->result.passed) {
      std::string msg = "in-run checks failed:";
      for (const auto& f : h->result.failures) msg += "\n  " + f;
      return error(QMUPL_ERR_INVARIANT, msg);
    }
    return QMUPL_OK;
  });
}

const char* qmupl_result_json(const qmupl_result* result) {
  return result == nullptr ? "" : result->result.summary_json.c_str();
}

int qmupl_result_passed(const qmupl_result* result) {
  return result != nullptr && result->result.passed ? 1 : 0;
}

size_t qmupl_result_failure_count(const qmupl_result* result) {
  return result == nullptr ? 0 : result->result.failures.size();
}

const char* qmupl_result_failure(const qmupl_result* result, size_t index) {
  if (result == nullptr || index >= result->result.failures.size()) return nullptr;
  return result->result.failures[index].c_str();
}

void qmupl_result_destroy(qmupl_result* result) { delete result; }

}  // extern "C"

#include <qenv.h>

#include <cmath>
#include <complex>
#include <cstdlib>
#include <cstring>
#include <sstream>
#include <string>

#include "qenv/classical.hpp"
#include "qenv/commands.hpp"
#include "qenv/environment.hpp"
#include "qenv/io.hpp"
#include "qenv/quantum.hpp"
#include "qenv/trace.hpp"

// ----- handle bodies -----

struct qenv_env {
  qenv::EnvironmentSpec spec;
};

struct qenv_trace {
  qenv::VisibilityTrace trace;
};

namespace {

thread_local std::string g_last_error;

// malloc-backed copy so callers on any runtime can free it via
// qenv_string_free.
char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out != nullptr) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void store_summary(char** summary_out, const std::string& text) {
  if (summary_out != nullptr) *summary_out = copy_string(text);
}

int run_command(qenv::CommandResult (*command)(const std::string&), const char* config_json,
                char** summary_out) {
  if (config_json == nullptr) {
    g_last_error = "config_json is NULL";
    store_summary(summary_out, "error: " + g_last_error);
    return QENV_ERR_USAGE;
  }
  const qenv::CommandResult result = command(std::string(config_json));
  g_last_error = result.exit_code == 0 ? "" : result.summary;
  store_summary(summary_out, result.summary);
  return result.exit_code;
}

// Exception boundary for the handle calls: nothing C++ may cross the ABI.
template <typename Fn>
auto guarded(Fn&& fn, decltype(fn()) on_error) -> decltype(fn()) {
  try {
    auto out = fn();
    g_last_error = "";
    return out;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return on_error;
  } catch (...) {
    g_last_error = "unknown error";
    return on_error;
  }
}

}  // namespace

extern "C" {

const char* qenv_last_error(void) { return g_last_error.c_str(); }

void qenv_string_free(char* s) { std::free(s); }

// ----- commands -----

int qenv_cmd_generate(const char* config_json, char** summary_out) {
  return run_command(qenv::cmd_generate, config_json, summary_out);
}

int qenv_cmd_train(const char* config_json, char** summary_out) {
  return run_command(qenv::cmd_train, config_json, summary_out);
}

int qenv_cmd_evaluate(const char* config_json, char** summary_out) {
  return run_command(qenv::cmd_evaluate, config_json, summary_out);
}

int qenv_cmd_validate(const char* config_json, char** summary_out) {
  return run_command(qenv::cmd_validate, config_json, summary_out);
}

int qenv_cmd_oracle(const char* config_json, char** summary_out) {
  return run_command(qenv::cmd_oracle, config_json, summary_out);
}

// ----- environments -----

qenv_env* qenv_env_from_json(const char* json_text) {
  if (json_text == nullptr) {
    g_last_error = "json_text is NULL";
    return nullptr;
  }
  return guarded(
      [&] { return new qenv_env{qenv::env_from_json(json_text)}; }, nullptr);
}

char* qenv_env_to_json(const qenv_env* env) {
  if (env == nullptr) {
    g_last_error = "env is NULL";
    return nullptr;
  }
  return guarded(
      [&] { return copy_string(qenv::env_to_json(env->spec)); }, nullptr);
}

qenv_env* qenv_env_sample(uint64_t seed, int n_impurities, double energy_halfwidth,
                          int kind_policy) {
  qenv::KindPolicy policy;
  switch (kind_policy) {
    case QENV_KIND_QUANTUM:
      policy = qenv::KindPolicy::AllQuantum;
      break;
    case QENV_KIND_CLASSICAL:
      policy = qenv::KindPolicy::AllClassical;
      break;
    case QENV_KIND_MIX:
      policy = qenv::KindPolicy::RandomMix;
      break;
    default:
      g_last_error = "kind_policy must be QENV_KIND_QUANTUM, _CLASSICAL, or _MIX";
      return nullptr;
  }
  return guarded(
      [&] {
        return new qenv_env{
            qenv::sample_environment(seed, n_impurities, energy_halfwidth, policy)};
      },
      nullptr);
}

int qenv_env_validate(const qenv_env* env, double dt, char** report_out) {
  if (env == nullptr) {
    g_last_error = "env is NULL";
    return QENV_ERR_USAGE;
  }
  return guarded(
      [&] {
        const auto reports = qenv::validate_environment(env->spec, dt);
        bool hard_fail = false;
        std::ostringstream text;
        for (std::size_t i = 0; i < reports.size(); ++i) {
          if (i > 0) text << "\n";
          text << reports[i].name << " ratio=" << qenv::format_double(reports[i].ratio) << " "
               << (reports[i].pass ? "pass" : "FAIL");
          if (!reports[i].pass &&
              (reports[i].name == "beta_bandwidth" || reports[i].name == "continuum")) {
            hard_fail = true;
          }
        }
        if (report_out != nullptr) *report_out = copy_string(text.str());
        return hard_fail ? QENV_ERR_VALIDATION : QENV_OK;
      },
      QENV_ERR_USAGE);
}

void qenv_env_free(qenv_env* env) { delete env; }

// ----- traces -----

qenv_trace* qenv_trace_quantum(const qenv_env* env) {
  if (env == nullptr) {
    g_last_error = "env is NULL";
    return nullptr;
  }
  return guarded(
      [&] { return new qenv_trace{qenv::visibility_quantum(env->spec)}; }, nullptr);
}

qenv_trace* qenv_trace_classical(const qenv_env* env, int n_traj, uint64_t seed) {
  if (env == nullptr) {
    g_last_error = "env is NULL";
    return nullptr;
  }
  return guarded(
      [&] { return new qenv_trace{qenv::visibility_classical(env->spec, n_traj, seed)}; },
      nullptr);
}

int qenv_trace_length(const qenv_trace* trace) {
  if (trace == nullptr) {
    g_last_error = "trace is NULL";
    return -1;
  }
  return static_cast<int>(trace->trace.time_grid.size());
}

int qenv_trace_copy(const qenv_trace* trace, double* time_out, double* abs_out) {
  if (trace == nullptr) {
    g_last_error = "trace is NULL";
    return QENV_ERR_USAGE;
  }
  const std::size_t n = trace->trace.time_grid.size();
  for (std::size_t k = 0; k < n; ++k) {
    if (time_out != nullptr) time_out[k] = trace->trace.time_grid[k];
    if (abs_out != nullptr) abs_out[k] = std::abs(trace->trace.values[static_cast<long>(k)]);
  }
  g_last_error = "";
  return QENV_OK;
}

int qenv_trace_warning_count(const qenv_trace* trace) {
  if (trace == nullptr) {
    g_last_error = "trace is NULL";
    return -1;
  }
  return static_cast<int>(trace->trace.warnings.size());
}

const char* qenv_trace_warning(const qenv_trace* trace, int index) {
  if (trace == nullptr || index < 0 ||
      index >= static_cast<int>(trace->trace.warnings.size())) {
    g_last_error = "warning index out of range";
    return nullptr;
  }
  return trace->trace.warnings[static_cast<std::size_t>(index)].c_str();
}

void qenv_trace_free(qenv_trace* trace) { delete trace; }

}  // extern "C"

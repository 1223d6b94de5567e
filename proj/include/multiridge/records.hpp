#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "multiridge/version.hpp"

namespace multiridge {

/// One method's outcome inside an experiment run.
struct MethodOutcome {
  std::string method;
  nlohmann::json hyperparams = nlohmann::json::object();
  double r2 = 0.0;
  double seconds = 0.0;
  std::string status = "ok";  // "ok" or "error: <reason>"

  friend bool operator==(const MethodOutcome&, const MethodOutcome&) = default;
};

/// Serialized outcome of one experiment run: configuration snapshot,
/// per-method results, the multi-ridge optimizer trace, and the seeds that
/// reproduce it. Round-trips losslessly through JSON.
struct ExperimentRecord {
  std::string experiment_id;
  nlohmann::json config = nlohmann::json::object();
  std::vector<MethodOutcome> methods;
  std::vector<std::array<double, 3>> optimizer_history;  // (value, grad_norm, lr)
  std::vector<std::uint64_t> seeds;
  std::string version = kVersion;

  friend bool operator==(const ExperimentRecord&, const ExperimentRecord&) = default;
};

inline void to_json(nlohmann::json& j, const MethodOutcome& m) {
  j = nlohmann::json{{"method", m.method},
                     {"hyperparams", m.hyperparams},
                     {"r2", m.r2},
                     {"seconds", m.seconds},
                     {"status", m.status}};
}

inline void from_json(const nlohmann::json& j, MethodOutcome& m) {
  j.at("method").get_to(m.method);
  m.hyperparams = j.at("hyperparams");
  // non-finite doubles serialize to null
  m.r2 = j.at("r2").is_null() ? std::numeric_limits<double>::quiet_NaN()
                              : j.at("r2").get<double>();
  m.seconds = j.at("seconds").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                        : j.at("seconds").get<double>();
  j.at("status").get_to(m.status);
}

inline void to_json(nlohmann::json& j, const ExperimentRecord& r) {
  j = nlohmann::json{{"experiment_id", r.experiment_id},
                     {"config", r.config},
                     {"methods", r.methods},
                     {"optimizer_history", r.optimizer_history},
                     {"seeds", r.seeds},
                     {"version", r.version}};
}

inline void from_json(const nlohmann::json& j, ExperimentRecord& r) {
  j.at("experiment_id").get_to(r.experiment_id);
  r.config = j.at("config");
  j.at("methods").get_to(r.methods);
  j.at("optimizer_history").get_to(r.optimizer_history);
  j.at("seeds").get_to(r.seeds);
  j.at("version").get_to(r.version);
}

}  // namespace multiridge

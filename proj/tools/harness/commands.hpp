#pragma once

#include <exception>
#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"

namespace ssem::harness {

inline constexpr const char* kSchemaVersion = "ssem/1";

enum ExitCode : int {
    kExitOk = 0,
    kExitConfig = 2,
    kExitNumeric = 3,
    kExitTheoremViolation = 4,
};

/// Samples a dataset, runs finite-sample EM and writes dataset.csv,
/// trajectory.csv and summary.json.
int cmd_simulate(const RunConfig& cfg);
/// Population EM from em.theta0 with exact errors against the truth.
int cmd_population(const RunConfig& cfg);
/// Writes dataset.csv and summary.json only.
int cmd_sample(const RunConfig& cfg);

const std::vector<std::string>& verify_targets();
/// Builds the verify_<which>.json document without writing it.
nlohmann::json verify_report(const RunConfig& cfg, const std::string& which);
/// Writes verify_<which>.json; kExitTheoremViolation unless every check passes.
int cmd_verify(const RunConfig& cfg, const std::string& which);

/// Exit code and stderr JSON for an escaped exception.
int exit_code_for(const std::exception& e);
nlohmann::json error_json(const std::exception& e);

}  // namespace ssem::harness

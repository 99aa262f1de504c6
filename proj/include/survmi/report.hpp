#pragma once

#include <cstdint>
#include <string>

#include "survmi/pipelines.hpp"
#include "survmi/simulation.hpp"

namespace survmi {

// Long-format report: method,K,horizon,stratum,metric,value.
void write_report_csv(const std::string& path, const AssessmentReport& report);
void write_report_json(const std::string& path,
                       const AssessmentReport& report);

// Combined predictions, one row per (replicate, subject, horizon).
void write_combined_predictions_csv(
    const std::string& path,
    const std::vector<const PredictionSet*>& replicates);

// Raw per-imputation matrix of one prediction set.
void write_prediction_matrix_csv(const std::string& path,
                                 const PredictionSet& ps);

// FNV-1a over a file's bytes / a string, hex encoded; used in manifests.
std::string fnv1a_hex(const std::string& bytes);
std::string file_fnv1a_hex(const std::string& path);

}  // namespace survmi

#pragma once

// JSON and CSV report assembly for the command line tool and the test
// harness. Timing sections are optional so reruns with the same seed can be
// compared byte for byte.

#include <nlohmann/json.hpp>
#include <string>

#include "mvrs/pipeline.hpp"
#include "mvrs/simgen.hpp"

namespace mvrs {

struct EstimateContext {
  std::string input;  // dataset path or a synthetic tag
  Family family = Family::Poisson;
  PipelineConfig cfg;
  std::size_t rows = 0, covariates = 0;
};

nlohmann::json estimate_report(const EstimateContext& ctx, const PipelineResult& result,
                               bool include_timing);
std::string estimate_report_csv(const EstimateContext& ctx, const PipelineResult& result,
                                bool include_timing);

// Structural check mirroring tools/schema/estimate_report.schema.json.
// Returns false and fills why on the first violation.
bool validate_estimate_report(const nlohmann::json& report, std::string* why);

nlohmann::json sim_summary(const SimReport& report, bool include_timing);
std::string sim_summary_csv(const SimReport& report, bool include_timing);
nlohmann::json sim_cell(const SimReport& report, const CellStats& cell, bool include_timing);

nlohmann::json strata_report(const PipelineResult& result, bool include_timing);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace mvrs

#ifndef COVPANEL_PIPELINE_HPP
#define COVPANEL_PIPELINE_HPP

#include "covpanel/regression.hpp"
#include "covpanel/transforms.hpp"

#include <nlohmann/json_fwd.hpp>

#include <optional>
#include <string>
#include <vector>

namespace covpanel {

/// One declarative transform step. Supported ops:
///   {"op":"encode_masks", "employee":..., "public":...}
///   {"op":"moving_average", "column":..., "window":7}
///   {"op":"growth", "column":..., "diff_window":7, "log_floor":1.0}
///   {"op":"national", "column":...}
///   {"op":"lag", "column":..., "days":14}
struct TransformStep {
    std::string op;
    std::string column;  // or employee column for encode_masks
    std::string column2; // public column for encode_masks
    int window = 7;      // ma window / diff window / lag days
    double log_floor = 1.0;
};

/// Ordered transform recipe applied to a raw panel; re-runnable after the
/// placebo harness permutes raw policy columns or the counterfactual engine
/// edits one.
class TransformPipeline {
public:
    TransformPipeline() = default;
    explicit TransformPipeline(std::vector<TransformStep> steps) : steps_(std::move(steps)) {}

    static TransformPipeline from_json(const nlohmann::json& doc);
    nlohmann::json to_json() const;

    PanelDataset apply(const PanelDataset& raw) const;

    const std::vector<TransformStep>& steps() const { return steps_; }

    /// Growth-step parameters for an outcome chain base column, if the
    /// pipeline derives one.
    std::optional<TransformSpec> growth_params(const std::string& base_column) const;

private:
    std::vector<TransformStep> steps_;
};

/// A full analysis configuration: transform recipe plus model spec, loaded
/// from one JSON document {"transforms": [...], "model": {...}}.
struct AnalysisConfig {
    TransformPipeline pipeline;
    RegressionSpec model;

    static AnalysisConfig load(const std::string& path);
    static AnalysisConfig from_json(const nlohmann::json& doc);
    nlohmann::json to_json() const;
};

} // namespace covpanel

#endif

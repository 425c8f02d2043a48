#include "covpanel/pipeline.hpp"

#include "covpanel/errors.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>

namespace covpanel {

TransformPipeline TransformPipeline::from_json(const nlohmann::json& doc) {
    if (!doc.is_array()) fail("InvalidConfig", "transforms must be a JSON array");
    std::vector<TransformStep> steps;
    for (const auto& entry : doc) {
        TransformStep step;
        step.op = entry.at("op").get<std::string>();
        if (step.op == "encode_masks") {
            step.column = entry.at("employee").get<std::string>();
            step.column2 = entry.at("public").get<std::string>();
        } else {
            step.column = entry.at("column").get<std::string>();
        }
        if (step.op == "moving_average" && entry.contains("window"))
            step.window = entry["window"].get<int>();
        if (step.op == "growth") {
            if (entry.contains("diff_window")) step.window = entry["diff_window"].get<int>();
            if (entry.contains("log_floor")) step.log_floor = entry["log_floor"].get<double>();
        }
        if (step.op == "lag") step.window = entry.at("days").get<int>();
        steps.push_back(std::move(step));
    }
    return TransformPipeline(std::move(steps));
}

nlohmann::json TransformPipeline::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& step : steps_) {
        nlohmann::json entry;
        entry["op"] = step.op;
        if (step.op == "encode_masks") {
            entry["employee"] = step.column;
            entry["public"] = step.column2;
        } else {
            entry["column"] = step.column;
        }
        if (step.op == "moving_average") entry["window"] = step.window;
        if (step.op == "growth") {
            entry["diff_window"] = step.window;
            entry["log_floor"] = step.log_floor;
        }
        if (step.op == "lag") entry["days"] = step.window;
        arr.push_back(std::move(entry));
    }
    return arr;
}

PanelDataset TransformPipeline::apply(const PanelDataset& raw) const {
    PanelDataset panel = raw;
    for (const auto& step : steps_) {
        if (step.op == "encode_masks") {
            panel = encode_mask_policies(panel, step.column, step.column2);
        } else if (step.op == "moving_average") {
            TransformSpec spec;
            spec.ma_window = step.window;
            panel = moving_average(panel, step.column, spec);
        } else if (step.op == "growth") {
            TransformSpec spec;
            spec.diff_window = step.window;
            spec.log_floor = step.log_floor;
            panel = weekly_log_growth(panel, step.column, spec);
        } else if (step.op == "national") {
            panel = national_aggregate(panel, step.column);
        } else if (step.op == "lag") {
            panel = lag(panel, step.column, step.window);
        } else {
            fail("InvalidConfig", "unknown transform op '" + step.op + "'");
        }
    }
    return panel;
}

std::optional<TransformSpec> TransformPipeline::growth_params(const std::string& base_column) const {
    for (const auto& step : steps_) {
        if (step.op == "growth" && step.column == base_column) {
            TransformSpec spec;
            spec.diff_window = step.window;
            spec.log_floor = step.log_floor;
            return spec;
        }
    }
    return std::nullopt;
}

AnalysisConfig AnalysisConfig::from_json(const nlohmann::json& doc) {
    AnalysisConfig config;
    if (doc.contains("transforms")) config.pipeline = TransformPipeline::from_json(doc["transforms"]);
    config.model = RegressionSpec::from_json(doc.at("model"));
    return config;
}

AnalysisConfig AnalysisConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("FileNotFound", "cannot open " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        fail("InvalidConfig", path + ": " + e.what());
    }
    return from_json(doc);
}

nlohmann::json AnalysisConfig::to_json() const {
    nlohmann::json doc;
    doc["transforms"] = pipeline.to_json();
    doc["model"] = model.to_json();
    return doc;
}

} // namespace covpanel

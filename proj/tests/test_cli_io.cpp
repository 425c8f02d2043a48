#include "covpanel/csv.hpp"
#include "covpanel/errors.hpp"
#include "covpanel/manifest.hpp"
#include "covpanel/pipeline.hpp"
#include "covpanel/stats.hpp"
#include "test_support.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace covpanel;

TEST_CASE("csv splitting handles quoted fields") {
    auto fields = split_csv_line(R"(HI,mask,"note, with comma","embedded ""quote""")");
    REQUIRE(fields.size() == 4);
    CHECK(fields[2] == "note, with comma");
    CHECK(fields[3] == "embedded \"quote\"");
    CHECK(csv_quote("a,b") == "\"a,b\"");
    CHECK(csv_quote("plain") == "plain");
}

TEST_CASE("numbers round-trip through format_number") {
    for (double v : {0.1, -1.0 / 3.0, 12345.6789, 1e-17, 0.0})
        CHECK(std::stod(format_number(v)) == v);
    CHECK(format_number(missing_value()).empty());
}

TEST_CASE("type-7 quantiles interpolate order statistics") {
    std::vector<double> v = {1, 2, 3, 4, 5};
    CHECK(quantile(v, 0.25) == 2.0);
    CHECK(quantile(v, 0.5) == 3.0);
    CHECK(quantile(v, 0.9) == doctest::Approx(4.6));
    CHECK(quantile({7.0}, 0.3) == 7.0);
}

TEST_CASE("normal two-sided p-values match reference points") {
    CHECK(normal_two_sided_p(1.959963985) == doctest::Approx(0.05).epsilon(1e-6));
    CHECK(normal_two_sided_p(1.6448536) == doctest::Approx(0.10).epsilon(1e-5));
    CHECK(normal_two_sided_p(0.0) == doctest::Approx(1.0));
}

TEST_CASE("pipelines round-trip through JSON and re-derive columns") {
    nlohmann::json doc = nlohmann::json::parse(R"([
        {"op": "encode_masks", "employee": "mask_employee", "public": "mask_public"},
        {"op": "moving_average", "column": "cases", "window": 7},
        {"op": "growth", "column": "cases_ma", "diff_window": 7, "log_floor": 1.0},
        {"op": "national", "column": "cases_ma"},
        {"op": "lag", "column": "masks_public", "days": 14}
    ])");
    TransformPipeline pipeline = TransformPipeline::from_json(doc);
    CHECK(pipeline.steps().size() == 5);
    TransformPipeline again = TransformPipeline::from_json(pipeline.to_json());
    CHECK(again.steps().size() == 5);
    CHECK(again.steps()[4].window == 14);
    auto growth = pipeline.growth_params("cases_ma");
    REQUIRE(growth.has_value());
    CHECK(growth->diff_window == 7);
    CHECK_FALSE(pipeline.growth_params("deaths").has_value());

    // apply on a small panel
    const Date start = Date::from_ymd(2020, 3, 1);
    const int days = 30;
    std::vector<double> cases, emp, pub;
    for (int s = 0; s < 2; ++s) {
        double cum = 10.0;
        for (int t = 0; t < days; ++t) {
            cum += 5.0 + t;
            cases.push_back(cum);
            emp.push_back(t >= 10 ? 1.0 : 0.0);
            pub.push_back(t >= 20 ? 1.0 : 0.0);
        }
    }
    PanelDataset raw = test_support::make_panel(
        {"CA", "NY"}, start, days, {"cases", "mask_employee", "mask_public"},
        {ColumnRole::Count, ColumnRole::Policy, ColumnRole::Policy}, {cases, emp, pub});
    PanelDataset out = pipeline.apply(raw);
    for (const char* col : {"masks_employees_only", "cases_ma", "cases_ma_growth",
                            "cases_ma_national", "masks_public_lag14"})
        CHECK(out.has_column(col));
    CHECK_THROWS_AS(TransformPipeline::from_json(nlohmann::json::parse(
                        R"([{"op": "nope", "column": "x"}])"))
                        .apply(raw),
                    Error);
}

TEST_CASE("analysis config parses transforms and model together") {
    nlohmann::json doc = nlohmann::json::parse(R"({
        "transforms": [{"op": "lag", "column": "mask", "days": 14}],
        "model": {"outcome": "y", "regressors": ["mask_lag14"]}
    })");
    AnalysisConfig config = AnalysisConfig::from_json(doc);
    CHECK(config.pipeline.steps().size() == 1);
    CHECK(config.model.outcome == "y");
}

TEST_CASE("manifest hashing and atomic writes") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "covpanel_manifest_test";
    fs::create_directories(dir);

    std::string file_a = (dir / "a.txt").string();
    write_file_atomic(file_a, "hello");
    CHECK(hash_file(file_a) == hash_file(file_a));
    std::string h1 = hash_file(file_a);
    write_file_atomic(file_a, "hello!");
    CHECK(hash_file(file_a) != h1);

    RunManifest manifest("estimate");
    manifest.add_input("panel", file_a);
    manifest.set_seed(42);
    manifest.set_parameter("reps", 500);
    manifest.add_output((dir / "results.csv").string());
    manifest.write(dir.string());

    std::ifstream in(dir / "manifest.json");
    nlohmann::json doc;
    in >> doc;
    CHECK(doc["command"] == "estimate");
    CHECK(doc["seed"] == 42);
    CHECK(doc["inputs"]["panel"]["hash"].get<std::string>().size() == 16);
    CHECK(doc["outputs"].size() == 2);
    CHECK_FALSE(doc.contains("timestamp"));
    fs::remove_all(dir);
}

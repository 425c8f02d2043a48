#include "covpanel/corrections.hpp"
#include "covpanel/counterfactual.hpp"
#include "covpanel/csv.hpp"
#include "covpanel/errors.hpp"
#include "covpanel/influence.hpp"
#include "covpanel/manifest.hpp"
#include "covpanel/panel.hpp"
#include "covpanel/pipeline.hpp"
#include "covpanel/placebo.hpp"
#include "covpanel/regression.hpp"
#include "covpanel/sir.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace covpanel;
namespace fs = std::filesystem;

struct CommonArgs {
    std::string panel_path;
    std::string schema_path;
    std::string corrections_path;
    std::string spec_path;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    std::string format = "csv";
};

void add_common(CLI::App* cmd, CommonArgs& args, bool needs_panel, bool needs_spec) {
    auto* panel = cmd->add_option("--panel", args.panel_path, "Panel CSV (state,date,...)")
                      ->envname("COVPANEL_PANEL");
    auto* schema = cmd->add_option("--schema", args.schema_path, "Column-role schema JSON")
                       ->envname("COVPANEL_SCHEMA");
    cmd->add_option("--corrections", args.corrections_path,
                    "Policy start-date corrections CSV")
        ->envname("COVPANEL_CORRECTIONS");
    auto* spec = cmd->add_option("--spec", args.spec_path, "Analysis config JSON")
                     ->envname("COVPANEL_SPEC");
    cmd->add_option("--out-dir", args.out_dir, "Output directory")->envname("COVPANEL_OUT_DIR");
    cmd->add_option("--seed", args.seed, "Random seed")->envname("COVPANEL_SEED");
    cmd->add_option("--format", args.format, "Report format: csv, json or text")
        ->check(CLI::IsMember({"csv", "json", "text"}))
        ->envname("COVPANEL_FORMAT");
    if (needs_panel) {
        panel->required();
        schema->required();
    }
    if (needs_spec) spec->required();
}

PanelDataset load_prepared(const CommonArgs& args, RunManifest& manifest) {
    manifest.add_input("panel", args.panel_path);
    manifest.add_input("schema", args.schema_path);
    PanelDataset panel = load_panel(args.panel_path, Schema::load(args.schema_path));
    if (!args.corrections_path.empty()) {
        manifest.add_input("corrections", args.corrections_path);
        panel = apply_corrections(panel, CorrectionSet::load(args.corrections_path));
    }
    return panel;
}

void ensure_out_dir(const CommonArgs& args) {
    fs::create_directories(args.out_dir);
    if (!fs::is_directory(args.out_dir))
        fail("WriteFailed", args.out_dir + " is not a writable directory");
}

std::string out_path(const CommonArgs& args, const std::string& name) {
    return (fs::path(args.out_dir) / name).string();
}

int cmd_estimate(const CommonArgs& args) {
    RunManifest manifest("estimate");
    ensure_out_dir(args);
    PanelDataset raw = load_prepared(args, manifest);
    manifest.add_input("spec", args.spec_path);
    AnalysisConfig config = AnalysisConfig::load(args.spec_path);

    PanelFit pf = fit_panel_spec(config.pipeline.apply(raw), config.model);
    RegressionSummary summary = summarize(pf.fit);

    std::ostringstream csv;
    summary.to_csv(csv);
    write_file_atomic(out_path(args, "results.csv"), csv.str());
    manifest.add_output("results.csv");
    write_file_atomic(out_path(args, "results.txt"), summary.to_text());
    manifest.add_output("results.txt");

    manifest.set_parameter("model", config.model.to_json());
    manifest.write(args.out_dir);
    if (args.format == "text") std::cout << summary.to_text();
    return 0;
}

int cmd_influence(const CommonArgs& args, const std::string& coef) {
    RunManifest manifest("influence");
    ensure_out_dir(args);
    PanelDataset raw = load_prepared(args, manifest);
    manifest.add_input("spec", args.spec_path);
    AnalysisConfig config = AnalysisConfig::load(args.spec_path);

    PanelFit pf = fit_panel_spec(config.pipeline.apply(raw), config.model);
    std::vector<InfluenceRecord> records = dfbeta(pf.fit, pf.design, coef);

    std::ostringstream csv;
    csv << "state,date,target,delta_beta,leverage,residual\n";
    for (const auto& rec : records)
        csv << csv_quote(rec.state) << ',' << rec.date.to_string() << ',' << csv_quote(rec.target)
            << ',' << format_number(rec.delta_beta) << ',' << format_number(rec.leverage) << ','
            << format_number(rec.residual) << '\n';
    write_file_atomic(out_path(args, "influence.csv"), csv.str());
    manifest.add_output("influence.csv");

    nlohmann::json ranking = nlohmann::json::array();
    for (const auto& s : state_influence(records))
        ranking.push_back({{"state", s.state},
                           {"sum", s.sum},
                           {"max_abs", s.max_abs},
                           {"count", s.count}});
    nlohmann::json doc = {{"target", coef}, {"states", ranking}};
    write_file_atomic(out_path(args, "influence_summary.json"), doc.dump(2) + "\n");
    manifest.add_output("influence_summary.json");

    manifest.set_parameter("coef", coef);
    manifest.write(args.out_dir);
    return 0;
}

int cmd_placebo(const CommonArgs& args, int reps, int threads,
                std::vector<std::string> permute) {
    RunManifest manifest("placebo");
    ensure_out_dir(args);
    PanelDataset raw = load_prepared(args, manifest);
    manifest.add_input("spec", args.spec_path);

    std::ifstream in(args.spec_path);
    nlohmann::json doc;
    in >> doc;
    AnalysisConfig config = AnalysisConfig::from_json(doc);

    PlaceboConfig placebo;
    placebo.n_reps = reps;
    placebo.seed = args.seed;
    placebo.n_threads = threads;
    if (!permute.empty()) {
        placebo.permuted_columns = std::move(permute);
    } else if (doc.contains("placebo") && doc["placebo"].contains("permute")) {
        placebo.permuted_columns = doc["placebo"]["permute"].get<std::vector<std::string>>();
    } else {
        fail("InvalidConfig", "no columns to permute: pass --permute or a placebo.permute list");
    }
    if (doc.contains("placebo") && doc["placebo"].contains("track"))
        placebo.track = doc["placebo"]["track"].get<std::vector<std::string>>();

    PlaceboResult result = run_placebo(raw, config.pipeline, config.model, placebo);

    std::ostringstream csv;
    csv << "replicate";
    for (const auto& c : result.columns) csv << ',' << csv_quote(c);
    csv << ",permutation\n";
    for (int r = 0; r < result.n_reps; ++r) {
        csv << r;
        for (std::size_t c = 0; c < result.columns.size(); ++c)
            csv << ',' << format_number(result.estimates[c][r]);
        std::string perm;
        for (std::size_t i = 0; i < result.permutations[r].size(); ++i) {
            if (i) perm += ' ';
            perm += std::to_string(result.permutations[r][i]);
        }
        csv << ',' << csv_quote(perm) << '\n';
    }
    write_file_atomic(out_path(args, "placebo.csv"), csv.str());
    manifest.add_output("placebo.csv");

    nlohmann::json summaries = nlohmann::json::array();
    for (const auto& s : summarize_placebo(result)) {
        nlohmann::json entry = {{"column", s.column}, {"n_ok", s.n_ok}, {"n_failed", s.n_failed}};
        if (s.n_ok > 0) {
            entry["mean"] = s.mean;
            entry["min"] = s.min;
            entry["q1"] = s.q1;
            entry["median"] = s.median;
            entry["q3"] = s.q3;
            entry["max"] = s.max;
            entry["p5"] = s.p5;
            entry["p95"] = s.p95;
        }
        summaries.push_back(std::move(entry));
    }
    nlohmann::json doc_out = {{"seed", result.seed},
                              {"n_reps", result.n_reps},
                              {"n_failed", result.n_failed},
                              {"columns", summaries}};
    write_file_atomic(out_path(args, "placebo_summary.json"), doc_out.dump(2) + "\n");
    manifest.add_output("placebo_summary.json");

    manifest.set_seed(placebo.seed);
    manifest.set_parameter("n_reps", reps);
    manifest.set_parameter("permute", placebo.permuted_columns);
    manifest.write(args.out_dir);
    return 0;
}

nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("FileNotFound", "cannot open " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        fail("InvalidConfig", path + ": " + e.what());
    }
    return doc;
}

int cmd_simulate(const CommonArgs& args, const std::string& config_path) {
    RunManifest manifest("simulate");
    ensure_out_dir(args);
    manifest.add_input("config", config_path);
    nlohmann::json doc = load_json_file(config_path);
    SirConfig sir = SirConfig::from_json(doc);
    CohortSpec cohort =
        doc.contains("cohort") ? CohortSpec::from_json(doc["cohort"]) : CohortSpec{};
    if (args.seed != 0) cohort.seed = args.seed;

    Cohort members = generate_cohort(sir, cohort);

    std::ostringstream csv;
    csv << "member,day,S,I,R,new_cases";
    for (const auto& p : kPolicyColumns) csv << ',' << p;
    csv << '\n';
    for (std::size_t m = 0; m < members.paths.size(); ++m) {
        const EpidemicPath& path = members.paths[m];
        for (int t = 0; t <= path.horizon(); ++t) {
            csv << m << ',' << t << ',' << format_number(path.susceptible[t]) << ','
                << format_number(path.infected[t]) << ',' << format_number(path.recovered[t])
                << ',' << format_number(path.new_cases[t]);
            for (int j = 0; j < kNumPolicies; ++j) csv << ',' << (t >= path.onsets[j] ? 1 : 0);
            csv << '\n';
        }
    }
    write_file_atomic(out_path(args, "cohort.csv"), csv.str());
    manifest.add_output("cohort.csv");

    manifest.set_seed(cohort.seed);
    manifest.set_parameter("sir", sir.to_json());
    manifest.set_parameter("n_survivors", members.n_survivors);
    manifest.write(args.out_dir);
    return 0;
}

int cmd_validate(const CommonArgs& args, const std::string& config_path, int lag_days) {
    RunManifest manifest("validate");
    ensure_out_dir(args);
    manifest.add_input("config", config_path);
    nlohmann::json doc = load_json_file(config_path);
    SirConfig sir = SirConfig::from_json(doc);
    CohortSpec cohort =
        doc.contains("cohort") ? CohortSpec::from_json(doc["cohort"]) : CohortSpec{};
    if (args.seed != 0) cohort.seed = args.seed;

    Cohort members = generate_cohort(sir, cohort);
    PanelDataset panel = paths_to_panel(members.paths);
    RecoveryResult recovery = recovery_experiment(panel, lag_days);

    std::ostringstream csv;
    csv << "policy,coef,se\n";
    for (const auto& row : recovery.rows)
        csv << csv_quote(row.policy) << ',' << format_number(row.coef) << ','
            << format_number(row.se) << '\n';
    write_file_atomic(out_path(args, "recovery.csv"), csv.str());
    manifest.add_output("recovery.csv");

    manifest.set_seed(cohort.seed);
    manifest.set_parameter("lag", lag_days);
    manifest.set_parameter("sir", sir.to_json());
    manifest.write(args.out_dir);
    return 0;
}

int cmd_counterfactual(const CommonArgs& args, const std::string& remove_col, double new_value,
                       const std::string& from_date, int draws, double level,
                       bool national_feedback) {
    RunManifest manifest("counterfactual");
    ensure_out_dir(args);
    PanelDataset raw = load_prepared(args, manifest);
    manifest.add_input("spec", args.spec_path);
    AnalysisConfig config = AnalysisConfig::load(args.spec_path);

    PanelFit pf = fit_panel_spec(config.pipeline.apply(raw), config.model);

    PolicyChange change;
    change.column = remove_col;
    change.new_value = new_value;
    change.from = from_date.empty() ? raw.min_date() : Date::parse(from_date);

    CounterfactualResult result =
        regression_counterfactual(pf.fit, raw, config.pipeline, config.model, change, draws,
                                  level, args.seed, national_feedback);

    nlohmann::json series = nlohmann::json::array();
    for (std::size_t t = 0; t < result.dates.size(); ++t) {
        nlohmann::json row = {{"date", result.dates[t].to_string()}};
        auto put = [&](const char* key, double v) {
            if (!is_missing(v)) row[key] = v;
        };
        put("factual", result.factual[t]);
        put("counterfactual", result.counterfactual[t]);
        put("rel_effect", result.rel_effect[t]);
        put("lower", result.lower[t]);
        put("upper", result.upper[t]);
        series.push_back(std::move(row));
    }
    nlohmann::json doc = {{"column", change.column},
                          {"new_value", change.new_value},
                          {"from", change.from.to_string()},
                          {"level", result.level},
                          {"n_draws", result.n_draws},
                          {"series", series}};
    write_file_atomic(out_path(args, "counterfactual.json"), doc.dump(2) + "\n");
    manifest.add_output("counterfactual.json");

    manifest.set_seed(args.seed);
    manifest.set_parameter("remove", remove_col);
    manifest.set_parameter("draws", draws);
    manifest.set_parameter("level", level);
    manifest.write(args.out_dir);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Panel policy-evaluation toolkit: growth regressions, influence diagnostics, "
                 "permutation placebos, and SIR-based validation"};
    app.require_subcommand(1);

    CommonArgs est_args, inf_args, plc_args, sim_args, val_args, cf_args;

    auto* estimate = app.add_subcommand("estimate", "Fit the configured panel regression");
    add_common(estimate, est_args, true, true);

    auto* influence = app.add_subcommand("influence", "Leave-one-out influence on a coefficient");
    add_common(influence, inf_args, true, true);
    std::string coef;
    influence->add_option("--coef", coef, "Coefficient name")->required();

    auto* placebo = app.add_subcommand("placebo", "Permutation placebo distribution");
    add_common(placebo, plc_args, true, true);
    int reps = 500, threads = 1;
    std::vector<std::string> permute;
    placebo->add_option("--reps", reps, "Number of permutation replicates");
    placebo->add_option("--threads", threads, "Worker threads");
    placebo->add_option("--permute", permute, "Raw policy columns to permute jointly");

    auto* simulate = app.add_subcommand("simulate", "Generate an epidemic cohort");
    add_common(simulate, sim_args, false, false);
    std::string sim_config;
    simulate->add_option("--config", sim_config, "SIR config JSON")->required();

    auto* validate = app.add_subcommand("validate", "Recover injected policy effects by regression");
    add_common(validate, val_args, false, false);
    std::string val_config;
    int lag_days = 11;
    validate->add_option("--config", val_config, "SIR config JSON")->required();
    validate->add_option("--lag", lag_days, "Policy lag in days (e.g. 11 or 25)");

    auto* counterfactual = app.add_subcommand("counterfactual", "Dynamic policy counterfactual");
    add_common(counterfactual, cf_args, true, true);
    std::string remove_col, from_date;
    double new_value = 0.0, level = 0.90;
    int draws = 1000;
    bool national_feedback = false;
    counterfactual->add_option("--remove", remove_col, "Raw policy column to change")->required();
    counterfactual->add_option("--new-value", new_value, "Value the column takes from --from");
    counterfactual->add_option("--from", from_date, "Change date (default: panel start)");
    counterfactual->add_option("--draws", draws, "Coefficient draws for interval bands");
    counterfactual->add_option("--level", level, "Band level, e.g. 0.90");
    counterfactual->add_flag("--national-feedback", national_feedback,
                             "Recompute national terms from simulated states");

    CLI11_PARSE(app, argc, argv);

    try {
        if (estimate->parsed()) return cmd_estimate(est_args);
        if (influence->parsed()) return cmd_influence(inf_args, coef);
        if (placebo->parsed()) return cmd_placebo(plc_args, reps, threads, permute);
        if (simulate->parsed()) return cmd_simulate(sim_args, sim_config);
        if (validate->parsed()) return cmd_validate(val_args, val_config, lag_days);
        if (counterfactual->parsed())
            return cmd_counterfactual(cf_args, remove_col, new_value, from_date, draws, level,
                                      national_feedback);
    } catch (const covpanel::Error& e) {
        nlohmann::json err = {{"error", e.code()}, {"message", e.what()}};
        std::cerr << err.dump() << std::endl;
        return 1;
    } catch (const std::exception& e) {
        nlohmann::json err = {{"error", "Internal"}, {"message", e.what()}};
        std::cerr << err.dump() << std::endl;
        return 2;
    }
    return 0;
}

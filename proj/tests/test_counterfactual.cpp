#include "covpanel/counterfactual.hpp"

#include "covpanel/errors.hpp"

#include <doctest.h>

#include <cmath>

using namespace covpanel;

namespace {

SirConfig cohort_config() {
    SirConfig config;
    config.horizon = 120;
    return config;
}

Cohort test_cohort(std::uint64_t seed, int n_select = 20) {
    CohortSpec spec;
    spec.n_generate = 400;
    spec.n_select = n_select;
    spec.seed = seed;
    return generate_cohort(cohort_config(), spec);
}

} // namespace

TEST_CASE("recovery regression finds negative coefficients for real effects at lag 11") {
    Cohort cohort = test_cohort(101);
    PanelDataset panel = paths_to_panel(cohort.paths);
    RecoveryResult result = recovery_experiment(panel, 11);
    REQUIRE(result.rows.size() == 4);
    for (const auto& row : result.rows) {
        CHECK(row.coef < 0.0);
        CHECK(row.se > 0.0);
    }
}

TEST_CASE("recovery regression stays negative at lag 25 on cohort averages") {
    // Single cohorts are noisier at the staler lag; the paper-style reading
    // is about the center of the estimates.
    double sums[4] = {0, 0, 0, 0};
    for (std::uint64_t seed = 300; seed < 306; ++seed) {
        Cohort cohort = test_cohort(seed);
        RecoveryResult result = recovery_experiment(paths_to_panel(cohort.paths), 25);
        for (int j = 0; j < 4; ++j) sums[j] += result.rows[j].coef;
    }
    for (double s : sums) CHECK(s < 0.0);
}

TEST_CASE("no-op counterfactual returns the factual path exactly") {
    Cohort cohort = test_cohort(103, 10);
    PanelDataset panel = paths_to_panel(cohort.paths);
    RecoveryResult recovery = recovery_experiment(panel, 11);

    PolicyChange change;
    change.column = "policy_masks";
    change.new_value = missing_value(); // replaced below by the factual series
    // a true no-op: re-assert the factual values via new_value = 1 from a
    // date later than every span, so nothing changes
    change.new_value = 0.0;
    change.from = panel.max_date() + 1;

    CounterfactualResult result = regression_counterfactual(
        recovery.panel_fit.fit, panel, recovery.pipeline, recovery.spec, change,
        /*draws=*/0, 0.90, 7, false);
    for (std::size_t t = 0; t < result.dates.size(); ++t) {
        if (is_missing(result.rel_effect[t])) continue;
        CHECK(result.rel_effect[t] == 0.0);
        CHECK(result.lower[t] == 0.0);
        CHECK(result.upper[t] == 0.0);
        CHECK(result.factual[t] == result.counterfactual[t]);
    }
}

TEST_CASE("zero covariance collapses the bands onto the point path") {
    Cohort cohort = test_cohort(104, 10);
    PanelDataset panel = paths_to_panel(cohort.paths);
    RecoveryResult recovery = recovery_experiment(panel, 11);
    FitResult degenerate = recovery.panel_fit.fit;
    degenerate.cov.setZero();

    PolicyChange change{"policy_masks", 0.0, panel.min_date()};
    CounterfactualResult result = regression_counterfactual(
        degenerate, panel, recovery.pipeline, recovery.spec, change, /*draws=*/40, 0.90, 7, false);
    for (std::size_t t = 0; t < result.dates.size(); ++t) {
        if (is_missing(result.rel_effect[t])) continue;
        CHECK(result.lower[t] == doctest::Approx(result.rel_effect[t]));
        CHECK(result.upper[t] == doctest::Approx(result.rel_effect[t]));
    }
}

TEST_CASE("relative effect is zero at and before the change date") {
    Cohort cohort = test_cohort(105, 10);
    PanelDataset panel = paths_to_panel(cohort.paths);
    RecoveryResult recovery = recovery_experiment(panel, 11);

    const Date change_date = panel.min_date() + 40;
    PolicyChange change{"policy_schools", 0.0, change_date};
    CounterfactualResult result = regression_counterfactual(
        recovery.panel_fit.fit, panel, recovery.pipeline, recovery.spec, change, 0, 0.90, 7,
        false);
    for (std::size_t t = 0; t < result.dates.size(); ++t) {
        if (result.dates[t] > change_date) break;
        if (!is_missing(result.rel_effect[t])) CHECK(result.rel_effect[t] == 0.0);
    }
    // and the change does eventually bite
    bool any_nonzero = false;
    for (std::size_t t = 0; t < result.dates.size(); ++t)
        if (!is_missing(result.rel_effect[t]) && std::abs(result.rel_effect[t]) > 1e-6)
            any_nonzero = true;
    CHECK(any_nonzero);
}

TEST_CASE("bands from coefficient draws contain the point path") {
    Cohort cohort = test_cohort(106, 10);
    PanelDataset panel = paths_to_panel(cohort.paths);
    RecoveryResult recovery = recovery_experiment(panel, 11);

    PolicyChange change{"policy_masks", 0.0, panel.min_date()};
    CounterfactualResult result = regression_counterfactual(
        recovery.panel_fit.fit, panel, recovery.pipeline, recovery.spec, change, 60, 0.90, 13,
        false);
    bool widened = false;
    for (std::size_t t = 0; t < result.dates.size(); ++t) {
        if (is_missing(result.rel_effect[t])) continue;
        CHECK(result.lower[t] <= result.rel_effect[t]);
        CHECK(result.upper[t] >= result.rel_effect[t]);
        if (result.upper[t] > result.lower[t]) widened = true;
    }
    CHECK(widened);
}

TEST_CASE("removing a policy raises the projected cases") {
    Cohort cohort = test_cohort(107, 15);
    PanelDataset panel = paths_to_panel(cohort.paths);
    RecoveryResult recovery = recovery_experiment(panel, 11);

    PolicyChange change{"policy_stayhome", 0.0, panel.min_date()};
    CounterfactualResult result = regression_counterfactual(
        recovery.panel_fit.fit, panel, recovery.pipeline, recovery.spec, change, 0, 0.90, 7,
        false);
    double last = missing_value();
    for (std::size_t t = 0; t < result.dates.size(); ++t)
        if (!is_missing(result.rel_effect[t])) last = result.rel_effect[t];
    CHECK(last > 0.0);
}

TEST_CASE("unknown policy columns and bad outcomes are rejected") {
    Cohort cohort = test_cohort(108, 5);
    PanelDataset panel = paths_to_panel(cohort.paths);
    RecoveryResult recovery = recovery_experiment(panel, 11);
    PolicyChange change{"not_a_column", 0.0, panel.min_date()};
    CHECK_THROWS_AS(regression_counterfactual(recovery.panel_fit.fit, panel, recovery.pipeline,
                                              recovery.spec, change, 0, 0.9, 7, false),
                    Error);
    RegressionSpec bad = recovery.spec;
    bad.outcome = "cases";
    bad.regressors = {"policy_masks_lag11"};
    PolicyChange ok{"policy_masks", 0.0, panel.min_date()};
    CHECK_THROWS_AS(regression_counterfactual(recovery.panel_fit.fit, panel, recovery.pipeline,
                                              bad, ok, 0, 0.9, 7, false),
                    Error);
}

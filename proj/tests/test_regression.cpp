#include "covpanel/regression.hpp"

#include "covpanel/errors.hpp"
#include "covpanel/transforms.hpp"
#include "test_support.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <random>

using namespace covpanel;
using test_support::make_panel;
using test_support::random_design;

namespace {

const Date kStart = Date::from_ymd(2020, 3, 1);

PanelDataset design_panel() {
    // Two states, 10 days: outcome y, regressor x (missing once), one
    // time-invariant covariate, one policy column.
    const int days = 10;
    std::vector<double> y, x, cov, pol;
    std::mt19937_64 rng(3);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int s = 0; s < 2; ++s)
        for (int t = 0; t < days; ++t) {
            y.push_back(normal(rng));
            x.push_back(t == 4 && s == 0 ? missing_value() : normal(rng));
            cov.push_back(s == 0 ? 1.5 : -0.5);
            pol.push_back(t >= 5 ? 1.0 : 0.0);
        }
    return make_panel({"CA", "NY"}, kStart, days, {"y", "x", "density", "mask"},
                      {ColumnRole::Derived, ColumnRole::Derived, ColumnRole::Covariate,
                       ColumnRole::Policy},
                      {y, x, cov, pol});
}

} // namespace

TEST_CASE("build_design drops incomplete rows and orders columns deterministically") {
    RegressionSpec spec;
    spec.outcome = "y";
    spec.regressors = {"x", "mask"};
    spec.covariates = {"density"};
    DesignMatrix design = build_design(design_panel(), spec);
    CHECK(design.n() == 19); // one missing x row dropped
    REQUIRE(design.column_names.size() == 4);
    CHECK(design.column_names[0] == "intercept");
    CHECK(design.column_names[1] == "x");
    CHECK(design.column_names[2] == "mask");
    CHECK(design.column_names[3] == "density");
    CHECK(design.is_policy == std::vector<bool>{false, false, true, false});
    CHECK(design.n_clusters() == 2);
}

TEST_CASE("build_design with no missing data keeps every row in the window") {
    RegressionSpec spec;
    spec.outcome = "y";
    spec.regressors = {"mask"};
    spec.window_start = kStart + 2;
    spec.window_end = kStart + 6;
    DesignMatrix design = build_design(design_panel(), spec);
    CHECK(design.n() == 10); // 5 days x 2 states
    for (const auto& d : design.row_date) {
        CHECK(d >= *spec.window_start);
        CHECK(d <= *spec.window_end);
    }
}

TEST_CASE("an empty window raises EmptyDesign") {
    RegressionSpec spec;
    spec.outcome = "y";
    spec.regressors = {"x"};
    spec.window_start = kStart + 100;
    spec.window_end = kStart + 120;
    try {
        build_design(design_panel(), spec);
        FAIL("expected EmptyDesign");
    } catch (const Error& e) {
        CHECK(e.code() == "EmptyDesign");
    }
}

TEST_CASE("month interactions add one column per covariate per non-reference month") {
    // 70 days spanning March, April, May: two interaction months after
    // dropping the March reference.
    const int days = 70;
    std::vector<double> y, cov;
    std::mt19937_64 rng(5);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int t = 0; t < days; ++t) {
        y.push_back(normal(rng));
        cov.push_back(2.0);
    }
    PanelDataset panel = make_panel({"CA"}, kStart, days, {"y", "density"},
                                    {ColumnRole::Derived, ColumnRole::Covariate}, {y, cov});
    RegressionSpec spec;
    spec.outcome = "y";
    spec.covariates = {"density"};
    spec.month_interactions = true;
    DesignMatrix design = build_design(panel, spec);
    REQUIRE(design.column_names.size() == 4); // intercept, density, density:04, density:05
    CHECK(design.column_names[2] == "density:2020-04");
    CHECK(design.column_names[3] == "density:2020-05");
    CHECK(design.interaction_months == std::vector<std::string>{"2020-04", "2020-05"});
    // April rows carry the covariate value in the April column only
    for (int i = 0; i < design.n(); ++i) {
        bool is_april = design.row_date[i].year_month() == "2020-04";
        CHECK(design.X(i, 2) == (is_april ? 2.0 : 0.0));
    }
}

TEST_CASE("fit_ols on an intercept-only design returns the mean") {
    DesignMatrix design;
    design.X = Eigen::MatrixXd::Ones(3, 1);
    design.y.resize(3);
    design.y << 1, 2, 3;
    design.column_names = {"intercept"};
    design.is_policy = {false};
    design.has_intercept = true;
    FitResult fit = fit_ols(design);
    CHECK(fit.beta(0) == doctest::Approx(2.0));
}

TEST_CASE("fit_ols reproduces an exactly linear outcome") {
    std::mt19937_64 rng(17);
    DesignMatrix design = random_design(30, 3, rng);
    design.y = design.X.col(1); // outcome equals one regressor
    FitResult fit = fit_ols(design);
    CHECK(fit.beta(0) == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(fit.beta(1) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(fit.resid.cwiseAbs().maxCoeff() < 1e-10);
    CHECK(fit.r2 == doctest::Approx(1.0));
}

TEST_CASE("fit_ols matches the normal-equations oracle on random instances") {
    std::mt19937_64 rng(23);
    for (int rep = 0; rep < 10; ++rep) {
        DesignMatrix design = random_design(50, 5, rng);
        FitResult fit = fit_ols(design);
        Eigen::VectorXd oracle = test_support::normal_equations_oracle(design.X, design.y);
        CHECK((fit.beta - oracle).norm() <= 1e-8 * (1.0 + oracle.norm()));
        // residual orthogonality
        double xe = (design.X.transpose() * fit.resid).cwiseAbs().maxCoeff();
        CHECK(xe <= 1e-8 * (1.0 + design.y.cwiseAbs().maxCoeff()));
        // hat values sum to the rank and stay in [0, 1]
        CHECK(fit.hat.sum() == doctest::Approx(5.0).epsilon(1e-9));
        CHECK(fit.hat.minCoeff() >= 0.0);
        CHECK(fit.hat.maxCoeff() <= 1.0 + 1e-12);
    }
}

TEST_CASE("a duplicated column is reported as rank deficient by name") {
    std::mt19937_64 rng(29);
    DesignMatrix design = random_design(40, 3, rng);
    DesignMatrix bad = design;
    bad.X.conservativeResize(40, 4);
    bad.X.col(3) = design.X.col(2);
    bad.column_names.push_back("x2_copy");
    bad.is_policy.push_back(false);
    try {
        fit_ols(bad);
        FAIL("expected RankDeficient");
    } catch (const Error& e) {
        CHECK(e.code() == "RankDeficient");
        CHECK(std::string(e.what()).find("x2_copy") != std::string::npos);
    }
}

TEST_CASE("underdetermined designs are rejected") {
    std::mt19937_64 rng(31);
    DesignMatrix design = random_design(4, 6, rng);
    try {
        fit_ols(design);
        FAIL("expected Underdetermined");
    } catch (const Error& e) {
        CHECK(e.code() == "Underdetermined");
    }
}

TEST_CASE("beta is invariant to row order") {
    std::mt19937_64 rng(37);
    DesignMatrix design = random_design(60, 4, rng, 6);
    FitResult fit = fit_ols(design);
    Eigen::MatrixXd cov = cluster_cov(fit, design);

    std::vector<int> order(60);
    for (int i = 0; i < 60; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    DesignMatrix shuffled = design;
    for (int i = 0; i < 60; ++i) {
        shuffled.X.row(i) = design.X.row(order[i]);
        shuffled.y(i) = design.y(order[i]);
        shuffled.cluster_index[i] = design.cluster_index[order[i]];
    }
    FitResult fit2 = fit_ols(shuffled);
    CHECK((fit.beta - fit2.beta).cwiseAbs().maxCoeff() < 1e-10);
    Eigen::MatrixXd cov2 = cluster_cov(fit2, shuffled);
    CHECK((cov - cov2).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("r2 never decreases when a regressor is added") {
    std::mt19937_64 rng(41);
    for (int rep = 0; rep < 5; ++rep) {
        DesignMatrix big = random_design(50, 6, rng);
        DesignMatrix small = big;
        small.X = big.X.leftCols(5);
        small.column_names.resize(5);
        small.is_policy.resize(5);
        CHECK(fit_ols(big).r2 >= fit_ols(small).r2 - 1e-12);
    }
}

TEST_CASE("singleton clusters reproduce the HC1 covariance") {
    std::mt19937_64 rng(43);
    DesignMatrix design = random_design(80, 4, rng); // cluster per row
    FitResult fit = fit_ols(design);
    Eigen::MatrixXd cov = cluster_cov(fit, design);
    Eigen::MatrixXd oracle = test_support::hc1_oracle(design.X, fit.resid);
    // identical up to the G/(G-1)*(n-1)/n leftover factor
    const int n = design.n();
    double extra = (static_cast<double>(n) / (n - 1)) * (static_cast<double>(n - 1) / n);
    CHECK(extra == doctest::Approx(1.0));
    CHECK((cov - oracle).cwiseAbs().maxCoeff() <= 1e-10 * oracle.cwiseAbs().maxCoeff());
}

TEST_CASE("cluster covariance is invariant to cluster relabeling") {
    std::mt19937_64 rng(47);
    DesignMatrix design = random_design(60, 3, rng, 10);
    FitResult fit = fit_ols(design);
    Eigen::MatrixXd cov = cluster_cov(fit, design);
    DesignMatrix relabeled = design;
    for (auto& c : relabeled.cluster_index) c = 9 - c;
    Eigen::MatrixXd cov2 = cluster_cov(fit, relabeled);
    CHECK((cov - cov2).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("duplicating every row within its cluster rescales covariance predictably") {
    std::mt19937_64 rng(53);
    DesignMatrix design = random_design(40, 3, rng, 8);
    FitResult fit = fit_ols(design);
    Eigen::MatrixXd cov = cluster_cov(fit, design);

    const int n = design.n(), k = design.k();
    DesignMatrix doubled = design;
    doubled.X.resize(2 * n, k);
    doubled.y.resize(2 * n);
    doubled.cluster_index.resize(2 * n);
    for (int i = 0; i < n; ++i) {
        doubled.X.row(i) = design.X.row(i);
        doubled.X.row(n + i) = design.X.row(i);
        doubled.y(i) = design.y(i);
        doubled.y(n + i) = design.y(i);
        doubled.cluster_index[i] = design.cluster_index[i];
        doubled.cluster_index[n + i] = design.cluster_index[i];
    }
    FitResult fit2 = fit_ols(doubled);
    CHECK((fit.beta - fit2.beta).cwiseAbs().maxCoeff() < 1e-10);
    Eigen::MatrixXd cov2 = cluster_cov(fit2, doubled);
    // scores double and (X'X)^{-1} halves: the sandwich is unchanged up to
    // the finite-sample scale factors
    double s1 = (static_cast<double>(n - 1) / (n - k));
    double s2 = (static_cast<double>(2 * n - 1) / (2 * n - k));
    Eigen::MatrixXd expected = cov * (s2 / s1);
    CHECK((cov2 - expected).cwiseAbs().maxCoeff() <=
          1e-9 * expected.cwiseAbs().maxCoeff());
}

TEST_CASE("a single cluster is rejected") {
    std::mt19937_64 rng(59);
    DesignMatrix design = random_design(20, 3, rng, 1);
    FitResult fit = fit_ols(design);
    try {
        cluster_cov(fit, design);
        FAIL("expected SingleCluster");
    } catch (const Error& e) {
        CHECK(e.code() == "SingleCluster");
    }
}

TEST_CASE("combo test with a unit weight vector reproduces the coefficient and its SE") {
    std::mt19937_64 rng(61);
    DesignMatrix design = random_design(50, 4, rng, 10);
    FitResult fit = fit_ols(design);
    fit.cov = cluster_cov(fit, design);
    for (int j = 0; j < 4; ++j) {
        Eigen::VectorXd w = Eigen::VectorXd::Zero(4);
        w(j) = 1.0;
        ComboTest test = linear_combo_test(fit, w);
        CHECK(test.estimate == fit.beta(j));
        CHECK(test.std_error == doctest::Approx(fit.se(j)).epsilon(1e-15));
    }
    ComboTest zero = linear_combo_test(fit, Eigen::VectorXd::Zero(4));
    CHECK(zero.estimate == 0.0);
    CHECK(zero.std_error == 0.0);
    CHECK_THROWS_AS(linear_combo_test(fit, Eigen::VectorXd::Zero(3)), Error);
}

TEST_CASE("star markings follow the two-sided normal p-value") {
    // -0.141 (0.042) is significant at 1%; -0.061 (0.037) only at 10%.
    std::mt19937_64 rng(67);
    DesignMatrix design = random_design(10, 1, rng);
    FitResult fit = fit_ols(design);
    fit.beta.resize(3);
    fit.cov = Eigen::MatrixXd::Zero(3, 3);
    fit.column_names = {"a", "b", "c"};
    fit.is_policy = {false, false, false};
    fit.beta << -0.141, 0.0, -0.061;
    fit.cov(0, 0) = 0.042 * 0.042;
    fit.cov(1, 1) = 1.0;
    fit.cov(2, 2) = 0.037 * 0.037;
    RegressionSummary summary = summarize(fit);
    CHECK(summary.rows[0].stars == "***");
    CHECK(summary.rows[1].stars == "");
    CHECK(summary.rows[2].stars == "*");
}

TEST_CASE("summarize reports the policy-sum combo with the fit statistics") {
    PanelDataset panel = design_panel();
    RegressionSpec spec;
    spec.outcome = "y";
    spec.regressors = {"x", "mask"};
    PanelFit pf = fit_panel_spec(panel, spec);
    RegressionSummary summary = summarize(pf.fit);
    REQUIRE(summary.has_policy_sum);
    int mask_idx = pf.fit.column("mask");
    CHECK(summary.policy_sum.coef == doctest::Approx(pf.fit.beta(mask_idx)));
    CHECK(summary.policy_sum.se == doctest::Approx(pf.fit.se(mask_idx)));
    CHECK(summary.n_obs == pf.design.n());
    std::string text = summary.to_text();
    CHECK(text.find("sum_policy") != std::string::npos);
}

TEST_CASE("regression spec round-trips through JSON") {
    nlohmann::json doc = nlohmann::json::parse(R"({
        "outcome": "cases_ma_growth",
        "regressors": ["masks_public_ma_lag14"],
        "covariates": ["density"],
        "month_interactions": true,
        "sample_window": ["2020-03-07", "2020-06-03"],
        "cluster_by": "state"
    })");
    RegressionSpec spec = RegressionSpec::from_json(doc);
    CHECK(spec.outcome == "cases_ma_growth");
    CHECK(spec.window_end == Date::parse("2020-06-03"));
    RegressionSpec again = RegressionSpec::from_json(spec.to_json());
    CHECK(again.regressors == spec.regressors);
    CHECK(again.month_interactions == spec.month_interactions);

    nlohmann::json bad = doc;
    bad["regressors"] = {"cases_ma_growth"};
    CHECK_THROWS_AS(RegressionSpec::from_json(bad), Error);
}

#ifndef COVPANEL_REGRESSION_HPP
#define COVPANEL_REGRESSION_HPP

#include "covpanel/panel.hpp"

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace covpanel {

/// Declarative model description: outcome, ordered regressors, time-invariant
/// state covariates (optionally interacted with calendar-month indicators),
/// sample window, and the clustering key for robust standard errors.
struct RegressionSpec {
    std::string outcome;
    std::vector<std::string> regressors;
    std::vector<std::string> policy_regressors; // empty: infer from panel roles
    std::vector<std::string> covariates;
    bool month_interactions = false;
    bool intercept = true;
    std::optional<Date> window_start;
    std::optional<Date> window_end;
    std::string cluster_by = "state";

    static RegressionSpec from_json(const nlohmann::json& doc);
    nlohmann::json to_json() const;
    void validate() const;
};

struct DesignMatrix {
    Eigen::VectorXd y;
    Eigen::MatrixXd X;
    std::vector<std::string> row_state;
    std::vector<Date> row_date;
    std::vector<int> cluster_index; // 0..G-1
    std::vector<std::string> column_names;
    std::vector<bool> is_policy;
    std::vector<std::string> interaction_months; // months interacted (reference excluded)
    bool has_intercept = false;

    int n() const { return static_cast<int>(X.rows()); }
    int k() const { return static_cast<int>(X.cols()); }
    int n_clusters() const;
    int column(const std::string& name) const; // throws UnknownCoefficient
};

/// Months a windowed panel spans, ascending "YYYY-MM". The first is the
/// reference month dropped from interaction sets.
std::vector<std::string> interaction_months(const PanelDataset& panel, const RegressionSpec& spec);

/// Restricts to the sample window, drops rows with any missing term, and
/// assembles columns in deterministic order: intercept, regressors in spec
/// order, covariates, month x covariate interactions.
DesignMatrix build_design(const PanelDataset& panel, const RegressionSpec& spec);

struct FitResult {
    Eigen::VectorXd beta;
    Eigen::VectorXd resid;
    Eigen::MatrixXd cov; // classical from fit_ols; replace with cluster_cov for inference
    Eigen::VectorXd hat;
    Eigen::MatrixXd xtx_inv;
    double r2 = 0.0;
    double adj_r2 = 0.0;
    int n_obs = 0;
    std::vector<std::string> column_names;
    std::vector<bool> is_policy;

    int column(const std::string& name) const;
    double se(int j) const { return std::sqrt(cov(j, j)); }
};

/// Least squares via column-pivoted Householder QR. Errors: Underdetermined
/// (n < K), RankDeficient (names the first linearly dependent column).
FitResult fit_ols(const DesignMatrix& design);

/// Cluster-robust sandwich covariance
///   (X'X)^{-1} (sum_g X_g' e_g e_g' X_g) (X'X)^{-1}
/// scaled by G/(G-1) * (n-1)/(n-K). Requires at least two clusters.
Eigen::MatrixXd cluster_cov(const FitResult& fit, const DesignMatrix& design);

struct ComboTest {
    Eigen::VectorXd weights;
    double estimate = 0.0;
    double std_error = 0.0;
};

ComboTest linear_combo_test(const FitResult& fit, const Eigen::VectorXd& weights);

/// Weight 1 on every policy-role regressor, 0 elsewhere (the sum-of-policy
/// coefficients test reported in the tables).
Eigen::VectorXd policy_sum_weights(const FitResult& fit);

struct SummaryRow {
    std::string name;
    double coef = 0.0;
    double se = 0.0;
    double p_value = 1.0;
    std::string stars;
};

struct RegressionSummary {
    std::vector<SummaryRow> rows;
    bool has_policy_sum = false;
    SummaryRow policy_sum;
    int n_obs = 0;
    double r2 = 0.0;
    double adj_r2 = 0.0;

    std::string to_text() const;
    void to_csv(std::ostream& out) const;
};

/// Star thresholds default to *, **, *** at p < 0.1, 0.05, 0.01 (two-sided
/// normal).
RegressionSummary summarize(const FitResult& fit,
                            std::array<double, 3> star_thresholds = {0.1, 0.05, 0.01});

struct PanelFit {
    DesignMatrix design;
    FitResult fit;
};

/// build_design + fit_ols with the cluster-robust covariance installed.
PanelFit fit_panel_spec(const PanelDataset& panel, const RegressionSpec& spec);

} // namespace covpanel

#endif

#include "covpanel/regression.hpp"

#include "covpanel/csv.hpp"
#include "covpanel/errors.hpp"
#include "covpanel/stats.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

namespace covpanel {

RegressionSpec RegressionSpec::from_json(const nlohmann::json& doc) {
    RegressionSpec spec;
    spec.outcome = doc.at("outcome").get<std::string>();
    spec.regressors = doc.at("regressors").get<std::vector<std::string>>();
    if (doc.contains("policy_regressors"))
        spec.policy_regressors = doc["policy_regressors"].get<std::vector<std::string>>();
    if (doc.contains("covariates"))
        spec.covariates = doc["covariates"].get<std::vector<std::string>>();
    if (doc.contains("month_interactions")) spec.month_interactions = doc["month_interactions"].get<bool>();
    if (doc.contains("intercept")) spec.intercept = doc["intercept"].get<bool>();
    if (doc.contains("sample_window")) {
        const auto& w = doc["sample_window"];
        if (!w.is_array() || w.size() != 2)
            fail("InvalidConfig", "sample_window must be [start, end]");
        spec.window_start = Date::parse(w[0].get<std::string>());
        spec.window_end = Date::parse(w[1].get<std::string>());
    }
    if (doc.contains("cluster_by")) spec.cluster_by = doc["cluster_by"].get<std::string>();
    spec.validate();
    return spec;
}

nlohmann::json RegressionSpec::to_json() const {
    nlohmann::json doc;
    doc["outcome"] = outcome;
    doc["regressors"] = regressors;
    if (!policy_regressors.empty()) doc["policy_regressors"] = policy_regressors;
    if (!covariates.empty()) doc["covariates"] = covariates;
    doc["month_interactions"] = month_interactions;
    doc["intercept"] = intercept;
    if (window_start && window_end)
        doc["sample_window"] = {window_start->to_string(), window_end->to_string()};
    doc["cluster_by"] = cluster_by;
    return doc;
}

void RegressionSpec::validate() const {
    if (outcome.empty()) fail("InvalidConfig", "outcome column is required");
    for (const auto& r : regressors)
        if (r == outcome) fail("InvalidConfig", "outcome '" + outcome + "' cannot be a regressor");
    if (window_start && window_end && *window_end < *window_start)
        fail("InvalidConfig", "sample_window end precedes start");
}

int DesignMatrix::n_clusters() const {
    int g = 0;
    for (int c : cluster_index) g = std::max(g, c + 1);
    return g;
}

int DesignMatrix::column(const std::string& name) const {
    for (std::size_t i = 0; i < column_names.size(); ++i)
        if (column_names[i] == name) return static_cast<int>(i);
    fail("UnknownCoefficient", "no design column named '" + name + "'");
}

int FitResult::column(const std::string& name) const {
    for (std::size_t i = 0; i < column_names.size(); ++i)
        if (column_names[i] == name) return static_cast<int>(i);
    fail("UnknownCoefficient", "no coefficient named '" + name + "'");
}

std::vector<std::string> interaction_months(const PanelDataset& panel, const RegressionSpec& spec) {
    Date lo = spec.window_start.value_or(panel.min_date());
    Date hi = spec.window_end.value_or(panel.max_date());
    std::set<std::string> months;
    for (const auto& span : panel.spans()) {
        Date from = std::max(span.first, lo);
        Date to = std::min(span.last(), hi);
        for (Date d = from; d <= to; ++d) months.insert(d.year_month());
    }
    return {months.begin(), months.end()};
}

DesignMatrix build_design(const PanelDataset& panel, const RegressionSpec& spec) {
    spec.validate();
    const int outcome_col = panel.column_index(spec.outcome);

    std::vector<int> regressor_cols;
    for (const auto& name : spec.regressors) regressor_cols.push_back(panel.column_index(name));
    std::vector<int> covariate_cols;
    for (const auto& name : spec.covariates) covariate_cols.push_back(panel.column_index(name));

    std::set<std::string> policy_set(spec.policy_regressors.begin(), spec.policy_regressors.end());

    int cluster_col = -1;
    if (spec.cluster_by != "state") cluster_col = panel.column_index(spec.cluster_by);

    Date lo = spec.window_start.value_or(panel.min_date());
    Date hi = spec.window_end.value_or(panel.max_date());

    // Pass 1: listwise deletion over outcome + regressors + covariates.
    std::vector<int> rows;
    for (int s = 0; s < panel.n_states(); ++s) {
        const StateSpan& span = panel.span(s);
        Date from = std::max(span.first, lo);
        Date to = std::min(span.last(), hi);
        for (Date d = from; d <= to; ++d) {
            int r = span.offset + (d - span.first);
            if (is_missing(panel.value(outcome_col, r))) continue;
            bool complete = true;
            for (int c : regressor_cols)
                if (is_missing(panel.value(c, r))) { complete = false; break; }
            if (complete)
                for (int c : covariate_cols)
                    if (is_missing(panel.value(c, r))) { complete = false; break; }
            if (complete && cluster_col >= 0 && is_missing(panel.value(cluster_col, r)))
                complete = false;
            if (complete) rows.push_back(r);
        }
    }
    if (rows.empty()) fail("EmptyDesign", "no complete rows in the sample window");

    // Months present among surviving rows; the first is the reference.
    std::vector<std::string> months;
    if (spec.month_interactions && !spec.covariates.empty()) {
        std::set<std::string> present;
        for (int r : rows) present.insert(panel.date_of_row(r).year_month());
        months.assign(present.begin(), present.end());
    }
    const int n_interact_months = months.empty() ? 0 : static_cast<int>(months.size()) - 1;

    const int n = static_cast<int>(rows.size());
    const int k = (spec.intercept ? 1 : 0) + static_cast<int>(regressor_cols.size()) +
                  static_cast<int>(covariate_cols.size()) +
                  static_cast<int>(covariate_cols.size()) * n_interact_months;

    DesignMatrix design;
    design.y.resize(n);
    design.X.resize(n, k);
    design.row_state.resize(n);
    design.row_date.resize(n);
    design.cluster_index.resize(n);
    design.has_intercept = spec.intercept;
    if (n_interact_months > 0)
        design.interaction_months.assign(months.begin() + 1, months.end());

    if (spec.intercept) {
        design.column_names.push_back("intercept");
        design.is_policy.push_back(false);
    }
    for (std::size_t i = 0; i < spec.regressors.size(); ++i) {
        design.column_names.push_back(spec.regressors[i]);
        bool pol = policy_set.empty() ? panel.role(regressor_cols[i]) == ColumnRole::Policy
                                      : policy_set.count(spec.regressors[i]) > 0;
        design.is_policy.push_back(pol);
    }
    for (const auto& name : spec.covariates) {
        design.column_names.push_back(name);
        design.is_policy.push_back(false);
    }
    for (const auto& name : spec.covariates)
        for (int m = 0; m < n_interact_months; ++m) {
            design.column_names.push_back(name + ":" + months[m + 1]);
            design.is_policy.push_back(false);
        }

    std::map<std::string, int> cluster_ids;
    for (int i = 0; i < n; ++i) {
        int r = rows[i];
        int s = panel.state_of_row(r);
        design.row_state[i] = panel.span(s).state;
        design.row_date[i] = panel.date_of_row(r);
        design.y(i) = panel.value(outcome_col, r);

        std::string key = cluster_col < 0 ? design.row_state[i]
                                          : format_number(panel.value(cluster_col, r));
        auto [it, inserted] = cluster_ids.emplace(key, static_cast<int>(cluster_ids.size()));
        design.cluster_index[i] = it->second;

        int j = 0;
        if (spec.intercept) design.X(i, j++) = 1.0;
        for (int c : regressor_cols) design.X(i, j++) = panel.value(c, r);
        for (int c : covariate_cols) design.X(i, j++) = panel.value(c, r);
        const std::string ym = design.row_date[i].year_month();
        for (int c : covariate_cols)
            for (int m = 0; m < n_interact_months; ++m)
                design.X(i, j++) = ym == months[m + 1] ? panel.value(c, r) : 0.0;
    }
    return design;
}

namespace {

// First column of X linearly dependent on its predecessors, by modified
// Gram-Schmidt with a relative tolerance.
int first_dependent_column(const Eigen::MatrixXd& X) {
    const int n = static_cast<int>(X.rows());
    const int k = static_cast<int>(X.cols());
    Eigen::MatrixXd basis(n, k);
    int rank = 0;
    for (int j = 0; j < k; ++j) {
        Eigen::VectorXd v = X.col(j);
        const double norm0 = v.norm();
        for (int pass = 0; pass < 2; ++pass)
            for (int b = 0; b < rank; ++b) v -= basis.col(b).dot(v) * basis.col(b);
        if (v.norm() <= 1e-10 * std::max(norm0, 1.0)) return j;
        basis.col(rank++) = v / v.norm();
    }
    return -1;
}

} // namespace

FitResult fit_ols(const DesignMatrix& design) {
    const int n = design.n();
    const int k = design.k();
    if (n < k)
        fail("Underdetermined", std::to_string(n) + " rows against " + std::to_string(k) +
                                    " coefficients");

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design.X);
    if (qr.rank() < k) {
        int j = first_dependent_column(design.X);
        fail("RankDeficient", "design column '" +
                                  design.column_names[j < 0 ? k - 1 : j] +
                                  "' is linearly dependent on earlier columns");
    }

    FitResult fit;
    fit.beta = qr.solve(design.y);
    fit.resid = design.y - design.X * fit.beta;
    fit.n_obs = n;
    fit.column_names = design.column_names;
    fit.is_policy = design.is_policy;

    // X P = Q R: hat values from the thin Q, (X'X)^{-1} from R.
    Eigen::MatrixXd thin_q = qr.householderQ() * Eigen::MatrixXd::Identity(n, k);
    fit.hat = thin_q.rowwise().squaredNorm();

    Eigen::MatrixXd r_inv = qr.matrixR()
                                .topLeftCorner(k, k)
                                .triangularView<Eigen::Upper>()
                                .solve(Eigen::MatrixXd::Identity(k, k));
    Eigen::MatrixXd perm = qr.colsPermutation();
    fit.xtx_inv = perm * (r_inv * r_inv.transpose()) * perm.transpose();

    const double ssr = fit.resid.squaredNorm();
    double sst;
    if (design.has_intercept) {
        const double ybar = design.y.mean();
        sst = (design.y.array() - ybar).matrix().squaredNorm();
    } else {
        sst = design.y.squaredNorm();
    }
    fit.r2 = sst > 0.0 ? 1.0 - ssr / sst : 1.0;
    fit.adj_r2 = n > k ? 1.0 - (1.0 - fit.r2) * (n - 1) / static_cast<double>(n - k) : fit.r2;

    const double sigma2 = n > k ? ssr / static_cast<double>(n - k) : 0.0;
    fit.cov = sigma2 * fit.xtx_inv;
    return fit;
}

Eigen::MatrixXd cluster_cov(const FitResult& fit, const DesignMatrix& design) {
    const int n = design.n();
    const int k = design.k();
    const int g = design.n_clusters();
    if (design.cluster_index.empty() || g < 2)
        fail("SingleCluster", "cluster-robust covariance needs at least 2 clusters");

    Eigen::MatrixXd scores = Eigen::MatrixXd::Zero(g, k);
    for (int i = 0; i < n; ++i)
        scores.row(design.cluster_index[i]) += fit.resid(i) * design.X.row(i);

    Eigen::MatrixXd meat = scores.transpose() * scores;
    const double scale = (static_cast<double>(g) / (g - 1)) *
                         (static_cast<double>(n - 1) / (n - k));
    Eigen::MatrixXd cov = scale * fit.xtx_inv * meat * fit.xtx_inv;
    return 0.5 * (cov + cov.transpose());
}

ComboTest linear_combo_test(const FitResult& fit, const Eigen::VectorXd& weights) {
    if (weights.size() != fit.beta.size())
        fail("DimensionMismatch", "weights length " + std::to_string(weights.size()) +
                                      " against " + std::to_string(fit.beta.size()) +
                                      " coefficients");
    ComboTest test;
    test.weights = weights;
    test.estimate = weights.dot(fit.beta);
    test.std_error = std::sqrt(std::max(0.0, weights.dot(fit.cov * weights)));
    return test;
}

Eigen::VectorXd policy_sum_weights(const FitResult& fit) {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(fit.beta.size());
    for (std::size_t i = 0; i < fit.is_policy.size(); ++i)
        if (fit.is_policy[i]) w(static_cast<int>(i)) = 1.0;
    return w;
}

namespace {

std::string star_marking(double p, const std::array<double, 3>& thresholds) {
    if (p < thresholds[2]) return "***";
    if (p < thresholds[1]) return "**";
    if (p < thresholds[0]) return "*";
    return "";
}

SummaryRow make_row(const std::string& name, double coef, double se,
                    const std::array<double, 3>& thresholds) {
    SummaryRow row;
    row.name = name;
    row.coef = coef;
    row.se = se;
    row.p_value = se > 0.0 ? normal_two_sided_p(coef / se) : (coef == 0.0 ? 1.0 : 0.0);
    row.stars = star_marking(row.p_value, thresholds);
    return row;
}

} // namespace

RegressionSummary summarize(const FitResult& fit, std::array<double, 3> star_thresholds) {
    RegressionSummary summary;
    for (int j = 0; j < fit.beta.size(); ++j)
        summary.rows.push_back(make_row(fit.column_names[j], fit.beta(j), fit.se(j),
                                        star_thresholds));
    Eigen::VectorXd w = policy_sum_weights(fit);
    if (w.sum() > 0.0) {
        ComboTest combo = linear_combo_test(fit, w);
        summary.policy_sum = make_row("sum_policy", combo.estimate, combo.std_error,
                                      star_thresholds);
        summary.has_policy_sum = true;
    }
    summary.n_obs = fit.n_obs;
    summary.r2 = fit.r2;
    summary.adj_r2 = fit.adj_r2;
    return summary;
}

std::string RegressionSummary::to_text() const {
    std::size_t width = 12;
    for (const auto& row : rows) width = std::max(width, row.name.size());
    std::ostringstream out;
    out << std::left << std::setw(static_cast<int>(width) + 2) << "term"
        << std::right << std::setw(12) << "coef" << std::setw(12) << "se"
        << "  sig\n";
    auto emit = [&](const SummaryRow& row) {
        out << std::left << std::setw(static_cast<int>(width) + 2) << row.name << std::right
            << std::setw(12) << std::fixed << std::setprecision(4) << row.coef << std::setw(12)
            << row.se << "  " << row.stars << '\n';
    };
    for (const auto& row : rows) emit(row);
    if (has_policy_sum) {
        out << std::string(width + 28, '-') << '\n';
        emit(policy_sum);
    }
    out << std::string(width + 28, '-') << '\n';
    out << "n = " << n_obs << ", R2 = " << std::setprecision(4) << r2
        << ", adj R2 = " << adj_r2 << '\n';
    return out.str();
}

void RegressionSummary::to_csv(std::ostream& out) const {
    out << "term,coef,se,p_value,stars\n";
    auto emit = [&](const SummaryRow& row) {
        out << csv_quote(row.name) << ',' << format_number(row.coef) << ','
            << format_number(row.se) << ',' << format_number(row.p_value) << ',' << row.stars
            << '\n';
    };
    for (const auto& row : rows) emit(row);
    if (has_policy_sum) emit(policy_sum);
    out << "n_obs," << n_obs << ",,,\n";
    out << "r2," << format_number(r2) << ",,,\n";
    out << "adj_r2," << format_number(adj_r2) << ",,,\n";
}

PanelFit fit_panel_spec(const PanelDataset& panel, const RegressionSpec& spec) {
    PanelFit result{build_design(panel, spec), {}};
    result.fit = fit_ols(result.design);
    result.fit.cov = cluster_cov(result.fit, result.design);
    return result;
}

} // namespace covpanel

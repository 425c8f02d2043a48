#include "covpanel/influence.hpp"

#include "covpanel/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace covpanel {

std::vector<InfluenceRecord> dfbeta(const FitResult& fit, const DesignMatrix& design,
                                    const std::string& target) {
    const int j = fit.column(target);
    const int n = design.n();

    // [(X'X)^{-1} x_i]_j for all rows at once.
    Eigen::VectorXd m = design.X * fit.xtx_inv.col(j);

    std::vector<InfluenceRecord> records;
    records.reserve(n);
    for (int i = 0; i < n; ++i) {
        const double h = fit.hat(i);
        if (h > 1.0 - 1e-10)
            fail("LeverageOne", "observation " + design.row_state[i] + " " +
                                    design.row_date[i].to_string() +
                                    " has leverage 1; it cannot be deleted");
        InfluenceRecord rec;
        rec.state = design.row_state[i];
        rec.date = design.row_date[i];
        rec.target = target;
        rec.leverage = h;
        rec.residual = fit.resid(i);
        rec.delta_beta = -m(i) * fit.resid(i) / (1.0 - h);
        records.push_back(std::move(rec));
    }
    return records;
}

std::vector<StateInfluence> state_influence(const std::vector<InfluenceRecord>& records) {
    if (records.empty()) fail("InvalidConfig", "no influence records to summarize");
    std::map<std::string, StateInfluence> by_state;
    for (const auto& rec : records) {
        StateInfluence& s = by_state[rec.state];
        s.state = rec.state;
        s.sum += rec.delta_beta;
        s.max_abs = std::max(s.max_abs, std::abs(rec.delta_beta));
        s.count += 1;
    }
    std::vector<StateInfluence> out;
    out.reserve(by_state.size());
    for (auto& [state, s] : by_state) out.push_back(std::move(s));
    std::sort(out.begin(), out.end(), [](const StateInfluence& a, const StateInfluence& b) {
        if (std::abs(a.sum) != std::abs(b.sum)) return std::abs(a.sum) > std::abs(b.sum);
        return a.state < b.state;
    });
    return out;
}

double loo_oracle(const DesignMatrix& design, int row, const std::string& target) {
    const int n = design.n();
    const int k = design.k();
    if (n - 1 < k)
        fail("Underdetermined", "deleting a row leaves fewer rows than coefficients");

    FitResult base = fit_ols(design);

    Eigen::MatrixXd x_del(n - 1, k);
    Eigen::VectorXd y_del(n - 1);
    int out = 0;
    for (int i = 0; i < n; ++i) {
        if (i == row) continue;
        x_del.row(out) = design.X.row(i);
        y_del(out) = design.y(i);
        ++out;
    }
    DesignMatrix deleted;
    deleted.X = std::move(x_del);
    deleted.y = std::move(y_del);
    deleted.column_names = design.column_names;
    deleted.is_policy = design.is_policy;
    deleted.has_intercept = design.has_intercept;
    FitResult refit = fit_ols(deleted);

    const int j = base.column(target);
    return refit.beta(j) - base.beta(j);
}

} // namespace covpanel

#include "covpanel/counterfactual.hpp"

#include "covpanel/errors.hpp"
#include "covpanel/rng.hpp"
#include "covpanel/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

namespace covpanel {

TransformPipeline recovery_pipeline(int policy_lag) {
    std::vector<TransformStep> steps;
    steps.push_back({"growth", "cases", "", 7, 1.0});
    for (const auto& p : kPolicyColumns) steps.push_back({"lag", p, "", policy_lag, 1.0});
    steps.push_back({"lag", "cases_growth", "", 14, 1.0});
    steps.push_back({"lag", "cases_logdiff", "", 14, 1.0});
    return TransformPipeline(std::move(steps));
}

RegressionSpec recovery_spec(int policy_lag, Date base_date) {
    RegressionSpec spec;
    spec.outcome = "cases_growth";
    for (const auto& p : kPolicyColumns)
        spec.regressors.push_back(p + "_lag" + std::to_string(policy_lag));
    spec.regressors.push_back("cases_growth_lag14");
    spec.regressors.push_back("cases_logdiff_lag14");
    spec.regressors.push_back("trend");
    spec.regressors.push_back("trend_sq");
    spec.intercept = true;
    spec.window_start = base_date + (policy_lag + 10);
    spec.window_end = base_date + (policy_lag + 60);
    return spec;
}

RecoveryResult run_recovery(const PanelDataset& cohort_panel, const TransformPipeline& pipeline,
                            const RegressionSpec& spec) {
    RecoveryResult result;
    result.pipeline = pipeline;
    result.spec = spec;
    result.panel_fit = fit_panel_spec(pipeline.apply(cohort_panel), spec);
    const FitResult& fit = result.panel_fit.fit;
    for (std::size_t j = 0; j < fit.column_names.size(); ++j)
        if (fit.is_policy[j])
            result.rows.push_back({fit.column_names[j], fit.beta(static_cast<int>(j)),
                                   fit.se(static_cast<int>(j))});
    return result;
}

RecoveryResult recovery_experiment(const PanelDataset& cohort_panel, int policy_lag) {
    return run_recovery(cohort_panel, recovery_pipeline(policy_lag),
                        recovery_spec(policy_lag, cohort_panel.min_date()));
}

namespace {

// One regressor's source during forward iteration.
struct TermSource {
    enum Kind { Intercept, PanelColumn, OwnGrowth, OwnLogdiff, NatGrowth, NatLogdiff, Interaction };
    Kind kind = PanelColumn;
    int column = -1;       // panel column (PanelColumn, Interaction)
    int lag = 0;           // feedback lag (Own*/Nat*)
    std::string month;     // Interaction
};

bool parse_feedback(const std::string& name, const std::string& base, const std::string& middle,
                    int& lag_out) {
    const std::string prefix = base + middle; // e.g. "cases" + "_growth_lag"
    if (name.rfind(prefix, 0) != 0) return false;
    const std::string digits = name.substr(prefix.size());
    if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos) return false;
    lag_out = std::stoi(digits);
    return true;
}

// Simulated outcome chain for one scenario (factual or counterfactual).
struct SimState {
    // [state][day-index within span]
    std::vector<std::vector<double>> cum, logdiff, growth;
    // national chain indexed by date serial offset from panel min date
    std::vector<double> nat_cum, nat_logdiff, nat_growth;
};

} // namespace

CounterfactualResult regression_counterfactual(const FitResult& fit, const PanelDataset& raw_panel,
                                               const TransformPipeline& pipeline,
                                               const RegressionSpec& spec,
                                               const PolicyChange& change, int draws, double level,
                                               std::uint64_t seed, bool national_feedback) {
    if (draws < 0) fail("InvalidConfig", "draws must be >= 0");
    if (level <= 0.0 || level >= 1.0) fail("InvalidConfig", "level must be in (0,1)");
    const std::string suffix = "_growth";
    if (spec.outcome.size() <= suffix.size() ||
        spec.outcome.compare(spec.outcome.size() - suffix.size(), suffix.size(), suffix) != 0)
        fail("InvalidConfig", "counterfactual iteration needs a *_growth outcome, got '" +
                                  spec.outcome + "'");
    const std::string base = spec.outcome.substr(0, spec.outcome.size() - suffix.size());

    TransformSpec growth_spec = pipeline.growth_params(base).value_or(TransformSpec{});
    const int d = growth_spec.diff_window;
    const double floor = growth_spec.log_floor;

    // Counterfactually edited raw panel, transformed through the same
    // pipeline (recomputes the changed policy's smoothed/lagged columns).
    int change_col = raw_panel.column_index(change.column);
    std::vector<double> edited = raw_panel.column(change_col);
    for (int s = 0; s < raw_panel.n_states(); ++s) {
        const StateSpan& span = raw_panel.span(s);
        for (int i = std::max(0, change.from - span.first); i < span.n_days; ++i)
            edited[span.offset + i] = change.new_value;
    }
    PanelDataset factual_panel = pipeline.apply(raw_panel);
    PanelDataset cf_panel = pipeline.apply(raw_panel.with_replaced_column(change.column, edited));

    // Resolve design columns against the fit.
    DesignMatrix probe = build_design(factual_panel, spec);
    if (probe.column_names != fit.column_names)
        fail("InvalidConfig", "fit was not estimated from this panel and spec");

    const int k = static_cast<int>(fit.column_names.size());
    std::vector<TermSource> sources(k);
    bool uses_national = false;
    for (int j = 0; j < k; ++j) {
        const std::string& name = fit.column_names[j];
        TermSource& src = sources[j];
        int lag_days = 0;
        if (name == "intercept" && spec.intercept) {
            src.kind = TermSource::Intercept;
        } else if (parse_feedback(name, base, "_growth_lag", lag_days)) {
            src.kind = TermSource::OwnGrowth;
            src.lag = lag_days;
        } else if (parse_feedback(name, base, "_logdiff_lag", lag_days)) {
            src.kind = TermSource::OwnLogdiff;
            src.lag = lag_days;
        } else if (parse_feedback(name, base, "_national_growth_lag", lag_days)) {
            src.kind = TermSource::NatGrowth;
            src.lag = lag_days;
            uses_national = true;
        } else if (parse_feedback(name, base, "_national_logdiff_lag", lag_days)) {
            src.kind = TermSource::NatLogdiff;
            src.lag = lag_days;
            uses_national = true;
        } else if (auto pos = name.find(':');
                   pos != std::string::npos && factual_panel.has_column(name.substr(0, pos))) {
            src.kind = TermSource::Interaction;
            src.column = factual_panel.column_index(name.substr(0, pos));
            src.month = name.substr(pos + 1);
        } else {
            src.kind = TermSource::PanelColumn;
            src.column = factual_panel.column_index(name);
        }
    }
    const bool feed_national = national_feedback && uses_national;

    const Date min_date = factual_panel.min_date();
    const Date max_date = factual_panel.max_date();
    const int n_dates = max_date - min_date + 1;
    const int n_states = factual_panel.n_states();

    // Per-state iteration start: the first date >= change.from with a
    // complete factual design row.
    const int outcome_col = factual_panel.column_index(spec.outcome);
    std::vector<int> covariate_cols;
    for (const auto& c : spec.covariates) covariate_cols.push_back(factual_panel.column_index(c));
    std::vector<int> regressor_cols;
    for (const auto& r : spec.regressors) regressor_cols.push_back(factual_panel.column_index(r));

    std::vector<Date> sim_start(n_states);
    for (int s = 0; s < n_states; ++s) {
        const StateSpan& span = factual_panel.span(s);
        Date start = span.last() + 1; // sentinel: never simulate
        for (Date t = std::max(span.first, change.from); t <= span.last(); ++t) {
            int r = factual_panel.row_of(s, t);
            bool ok = !is_missing(factual_panel.value(outcome_col, r));
            for (std::size_t c = 0; ok && c < regressor_cols.size(); ++c)
                ok = !is_missing(factual_panel.value(regressor_cols[c], r));
            for (std::size_t c = 0; ok && c < covariate_cols.size(); ++c)
                ok = !is_missing(factual_panel.value(covariate_cols[c], r));
            if (ok) { start = t; break; }
        }
        sim_start[s] = start;
    }

    const int base_col = factual_panel.column_index(base);
    const int logdiff_col = factual_panel.column_index(base + "_logdiff");
    const int growth_col = outcome_col;
    int nat_col = -1, nat_logdiff_col = -1, nat_growth_col = -1;
    if (uses_national) {
        nat_col = factual_panel.column_index(base + "_national");
        nat_logdiff_col = factual_panel.column_index(base + "_national_logdiff");
        nat_growth_col = factual_panel.column_index(base + "_national_growth");
    }

    auto seeded_sim = [&](const PanelDataset& source) {
        SimState sim;
        sim.cum.resize(n_states);
        sim.logdiff.resize(n_states);
        sim.growth.resize(n_states);
        for (int s = 0; s < n_states; ++s) {
            const StateSpan& span = source.span(s);
            sim.cum[s].assign(span.n_days, missing_value());
            sim.logdiff[s].assign(span.n_days, missing_value());
            sim.growth[s].assign(span.n_days, missing_value());
            for (int i = 0; i < span.n_days; ++i) {
                sim.cum[s][i] = source.value(base_col, span.offset + i);
                sim.logdiff[s][i] = source.value(logdiff_col, span.offset + i);
                sim.growth[s][i] = source.value(growth_col, span.offset + i);
            }
        }
        if (uses_national) {
            sim.nat_cum.assign(n_dates, missing_value());
            sim.nat_logdiff.assign(n_dates, missing_value());
            sim.nat_growth.assign(n_dates, missing_value());
            for (int s = 0; s < n_states; ++s) {
                const StateSpan& span = source.span(s);
                for (int i = 0; i < span.n_days; ++i) {
                    int t = (span.first + i) - min_date;
                    sim.nat_cum[t] = source.value(nat_col, span.offset + i);
                    sim.nat_logdiff[t] = source.value(nat_logdiff_col, span.offset + i);
                    sim.nat_growth[t] = source.value(nat_growth_col, span.offset + i);
                }
            }
        }
        return sim;
    };

    auto iterate = [&](const PanelDataset& source, const Eigen::VectorXd& beta) {
        SimState sim = seeded_sim(source);
        for (Date t = min_date; t <= max_date; ++t) {
            for (int s = 0; s < n_states; ++s) {
                const StateSpan& span = source.span(s);
                if (t < sim_start[s] || t > span.last()) continue;
                const int i = t - span.first;
                const int r = span.offset + i;
                const std::string ym = t.year_month();
                double yhat = 0.0;
                for (int j = 0; j < k; ++j) {
                    const TermSource& src = sources[j];
                    double x;
                    switch (src.kind) {
                    case TermSource::Intercept: x = 1.0; break;
                    case TermSource::OwnGrowth: x = i >= src.lag ? sim.growth[s][i - src.lag]
                                                                 : missing_value(); break;
                    case TermSource::OwnLogdiff: x = i >= src.lag ? sim.logdiff[s][i - src.lag]
                                                                  : missing_value(); break;
                    case TermSource::NatGrowth: {
                        int idx = (t - min_date) - src.lag;
                        x = idx >= 0 ? sim.nat_growth[idx] : missing_value();
                        break;
                    }
                    case TermSource::NatLogdiff: {
                        int idx = (t - min_date) - src.lag;
                        x = idx >= 0 ? sim.nat_logdiff[idx] : missing_value();
                        break;
                    }
                    case TermSource::Interaction:
                        x = source.value(src.column, r);
                        if (!is_missing(x) && ym != src.month) x = 0.0;
                        break;
                    case TermSource::PanelColumn:
                    default: x = source.value(src.column, r); break;
                    }
                    if (is_missing(x))
                        fail("NonconvergentPath", "missing input for '" + fit.column_names[j] +
                                                      "' in " + span.state + " at " + t.to_string());
                    yhat += beta(j) * x;
                }
                if (i < d || is_missing(sim.logdiff[s][i - d]))
                    fail("NonconvergentPath", "no seeded log level for " + span.state + " at " +
                                                  t.to_string());
                double new_logdiff = sim.logdiff[s][i - d] + yhat;
                if (std::abs(new_logdiff) > 500.0)
                    fail("NonconvergentPath", "log weekly count diverged in " + span.state +
                                                  " at " + t.to_string());
                sim.logdiff[s][i] = new_logdiff;
                sim.growth[s][i] = yhat;
                sim.cum[s][i] = sim.cum[s][i - d] + std::exp(new_logdiff);
            }
            if (feed_national) {
                const int idx = t - min_date;
                double total = 0.0;
                bool any = false;
                for (int s = 0; s < n_states; ++s) {
                    const StateSpan& span = source.span(s);
                    if (!span.covers(t)) continue;
                    double v = sim.cum[s][t - span.first];
                    if (!is_missing(v)) { total += v; any = true; }
                }
                if (any) {
                    sim.nat_cum[idx] = total;
                    if (idx >= d && !is_missing(sim.nat_cum[idx - d])) {
                        sim.nat_logdiff[idx] =
                            std::log(std::max(total - sim.nat_cum[idx - d], floor));
                        if (!is_missing(sim.nat_logdiff[idx - d]))
                            sim.nat_growth[idx] = sim.nat_logdiff[idx] - sim.nat_logdiff[idx - d];
                    }
                }
            }
        }

        // Aggregate cumulative path over states present at each date.
        std::vector<double> agg(n_dates, missing_value());
        for (int s = 0; s < n_states; ++s) {
            const StateSpan& span = source.span(s);
            for (int i = 0; i < span.n_days; ++i) {
                double v = sim.cum[s][i];
                if (is_missing(v)) continue;
                int idx = (span.first + i) - min_date;
                agg[idx] = is_missing(agg[idx]) ? v : agg[idx] + v;
            }
        }
        return agg;
    };

    auto rel_path = [&](const Eigen::VectorXd& beta) {
        std::vector<double> f = iterate(factual_panel, beta);
        std::vector<double> c = iterate(cf_panel, beta);
        std::vector<double> rel(n_dates, missing_value());
        for (int t = 0; t < n_dates; ++t)
            if (!is_missing(f[t]) && f[t] != 0.0 && !is_missing(c[t]))
                rel[t] = c[t] / f[t] - 1.0;
        return std::tuple(std::move(f), std::move(c), std::move(rel));
    };

    CounterfactualResult result;
    result.n_draws = draws;
    result.level = level;
    result.dates.resize(n_dates);
    for (int t = 0; t < n_dates; ++t) result.dates[t] = min_date + t;
    auto [f0, c0, rel0] = rel_path(fit.beta);
    result.factual = std::move(f0);
    result.counterfactual = std::move(c0);
    result.rel_effect = std::move(rel0);
    result.lower = result.rel_effect;
    result.upper = result.rel_effect;

    if (draws > 0) {
        // PSD square root of the coefficient covariance.
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(fit.cov);
        Eigen::VectorXd lambda = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
        Eigen::MatrixXd root = eig.eigenvectors() * lambda.asDiagonal();

        std::vector<std::vector<double>> rel_draws(draws);
        for (int dr = 0; dr < draws; ++dr) {
            auto rng = make_engine(seed, static_cast<std::uint64_t>(dr) + 1);
            std::normal_distribution<double> normal(0.0, 1.0);
            Eigen::VectorXd z(k);
            for (int j = 0; j < k; ++j) z(j) = normal(rng);
            Eigen::VectorXd beta_draw = fit.beta + root * z;
            auto [fd, cd, rd] = rel_path(beta_draw);
            rel_draws[dr] = std::move(rd);
        }

        const double lo_p = (1.0 - level) / 2.0;
        std::vector<double> slice;
        for (int t = 0; t < n_dates; ++t) {
            if (is_missing(result.rel_effect[t])) continue;
            slice.clear();
            for (int dr = 0; dr < draws; ++dr)
                if (!is_missing(rel_draws[dr][t])) slice.push_back(rel_draws[dr][t]);
            if (slice.empty()) continue;
            std::sort(slice.begin(), slice.end());
            // bands contain the point path by construction
            result.lower[t] = std::min(quantile_sorted(slice, lo_p), result.rel_effect[t]);
            result.upper[t] = std::max(quantile_sorted(slice, 1.0 - lo_p), result.rel_effect[t]);
        }
    }
    return result;
}

} // namespace covpanel

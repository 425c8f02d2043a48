#ifndef COVPANEL_COUNTERFACTUAL_HPP
#define COVPANEL_COUNTERFACTUAL_HPP

#include "covpanel/pipeline.hpp"
#include "covpanel/sir.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace covpanel {

/// Default growth-regression template for simulated cohorts: the four policy
/// indicators at `policy_lag`, lag-14 outcome growth and log-level, and
/// linear/quadratic trend controls, on the sample window
/// [policy_lag+10, policy_lag+60] where the uniform onset draws make the
/// policy prevalence curve linear in time.
TransformPipeline recovery_pipeline(int policy_lag);
RegressionSpec recovery_spec(int policy_lag, Date base_date);

struct RecoveryRow {
    std::string policy;
    double coef = 0.0;
    double se = 0.0;
};

struct RecoveryResult {
    std::vector<RecoveryRow> rows; // the four policy coefficients
    PanelFit panel_fit;
    TransformPipeline pipeline;
    RegressionSpec spec;
};

RecoveryResult run_recovery(const PanelDataset& cohort_panel, const TransformPipeline& pipeline,
                            const RegressionSpec& spec);
RecoveryResult recovery_experiment(const PanelDataset& cohort_panel, int policy_lag);

/// Sets `column` to `new_value` from `from` onward, in every state.
struct PolicyChange {
    std::string column;
    double new_value = 0.0;
    Date from;
};

struct CounterfactualResult {
    std::vector<Date> dates;
    std::vector<double> factual;        // model-iterated aggregate cumulative path
    std::vector<double> counterfactual;
    std::vector<double> rel_effect;     // counterfactual/factual - 1
    std::vector<double> lower;          // level-quantile bands over coefficient draws
    std::vector<double> upper;
    int n_draws = 0;
    double level = 0.90;
};

/// Iterates the fitted growth equation forward under factual and
/// counterfactual policies, feeding back the dynamically updated lagged
/// outcome terms (own and, when national_feedback is set, the national
/// aggregate recomputed from the simulated states) while holding all other
/// regressors at their (counterfactually edited) panel values. Interval
/// bands come from `draws` multivariate-normal coefficient draws around
/// (beta, cov), each iterated identically.
CounterfactualResult regression_counterfactual(const FitResult& fit, const PanelDataset& raw_panel,
                                               const TransformPipeline& pipeline,
                                               const RegressionSpec& spec,
                                               const PolicyChange& change, int draws, double level,
                                               std::uint64_t seed, bool national_feedback);

} // namespace covpanel

#endif

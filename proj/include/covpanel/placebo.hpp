#ifndef COVPANEL_PLACEBO_HPP
#define COVPANEL_PLACEBO_HPP

#include "covpanel/pipeline.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace covpanel {

struct PlaceboConfig {
    int n_reps = 500;
    std::uint64_t seed = 0;
    std::vector<std::string> permuted_columns; // raw policy columns, moved jointly
    std::vector<std::string> track;            // coefficients to record; empty: policy regressors
    int n_threads = 1;

    void validate() const;
};

/// Reassigns whole state-level series: state s receives state perm[s]'s
/// series for every listed column, under one shared permutation. Values are
/// aligned by date; dates outside the source state's span become missing.
PanelDataset permute_masks(const PanelDataset& panel, const std::vector<std::string>& columns,
                           const std::vector<int>& perm);

struct PlaceboResult {
    std::vector<std::string> columns;           // tracked coefficient names
    std::vector<std::vector<double>> estimates; // [column][replicate], NaN = failed
    std::vector<std::vector<int>> permutations; // [replicate] -> pi
    std::uint64_t seed = 0;
    int n_reps = 0;
    int n_failed = 0;
};

/// Per-replicate flow: draw a permutation from a stream seeded by
/// (seed, replicate), permute the raw policy columns, re-run the transform
/// pipeline, re-estimate the model, and record the tracked coefficients.
/// Rank-deficient or empty replicates are recorded as failed. Results are
/// identical for any n_threads.
PlaceboResult run_placebo(const PanelDataset& raw_panel, const TransformPipeline& pipeline,
                          const RegressionSpec& spec, const PlaceboConfig& config);

struct PlaceboSummary {
    std::string column;
    double mean = 0.0, min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
    double p5 = 0.0, p95 = 0.0;
    int n_ok = 0;
    int n_failed = 0;
};

/// Box-plot-ready five-number summaries (type-7 quantiles). Columns whose
/// replicates all failed are reported with the failure count and no
/// quantiles.
std::vector<PlaceboSummary> summarize_placebo(const PlaceboResult& result);

} // namespace covpanel

#endif

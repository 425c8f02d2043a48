#include "covpanel/placebo.hpp"

#include "covpanel/errors.hpp"
#include "covpanel/rng.hpp"
#include "covpanel/stats.hpp"

#include <algorithm>
#include <mutex>
#include <thread>

namespace covpanel {

void PlaceboConfig::validate() const {
    if (n_reps < 1) fail("InvalidConfig", "n_reps must be >= 1");
    if (permuted_columns.empty()) fail("InvalidConfig", "no columns to permute");
    if (n_threads < 1) fail("InvalidConfig", "n_threads must be >= 1");
}

PanelDataset permute_masks(const PanelDataset& panel, const std::vector<std::string>& columns,
                           const std::vector<int>& perm) {
    if (static_cast<int>(perm.size()) != panel.n_states())
        fail("InvalidConfig", "permutation length differs from state count");

    PanelDataset out = panel;
    for (const auto& name : columns) {
        int col = out.column_index(name);
        const auto& src = panel.column(col);
        std::vector<double> values(panel.n_rows(), missing_value());
        for (int s = 0; s < panel.n_states(); ++s) {
            const StateSpan& dst_span = panel.span(s);
            const StateSpan& src_span = panel.span(perm[s]);
            for (int i = 0; i < dst_span.n_days; ++i) {
                Date d = dst_span.first + i;
                if (!src_span.covers(d)) continue;
                values[dst_span.offset + i] = src[src_span.offset + (d - src_span.first)];
            }
        }
        out = out.with_replaced_column(name, std::move(values));
    }
    return out;
}

namespace {

std::vector<std::string> tracked_columns(const PanelDataset& raw, const TransformPipeline& pipeline,
                                         const RegressionSpec& spec, const PlaceboConfig& config) {
    if (!config.track.empty()) return config.track;
    // Default: the model's policy regressors, resolved on the base fit.
    PanelDataset transformed = pipeline.apply(raw);
    DesignMatrix design = build_design(transformed, spec);
    std::vector<std::string> cols;
    for (std::size_t i = 0; i < design.column_names.size(); ++i)
        if (design.is_policy[i]) cols.push_back(design.column_names[i]);
    if (cols.empty()) fail("InvalidConfig", "no policy regressors to track");
    return cols;
}

} // namespace

PlaceboResult run_placebo(const PanelDataset& raw_panel, const TransformPipeline& pipeline,
                          const RegressionSpec& spec, const PlaceboConfig& config) {
    config.validate();
    for (const auto& name : config.permuted_columns)
        if (raw_panel.role(name) != ColumnRole::Policy)
            fail("InvalidConfig", "'" + name + "' is not a policy column");

    // The base spec must fit on the unpermuted panel.
    fit_panel_spec(pipeline.apply(raw_panel), spec);

    PlaceboResult result;
    result.columns = tracked_columns(raw_panel, pipeline, spec, config);
    result.seed = config.seed;
    result.n_reps = config.n_reps;
    result.estimates.assign(result.columns.size(),
                            std::vector<double>(config.n_reps, missing_value()));
    result.permutations.assign(config.n_reps, {});

    std::vector<char> failed(config.n_reps, 0);

    auto run_replicate = [&](int r) {
        auto rng = make_engine(config.seed, static_cast<std::uint64_t>(r));
        std::vector<int> perm = random_permutation(raw_panel.n_states(), rng);
        result.permutations[r] = perm;
        try {
            PanelDataset permuted = permute_masks(raw_panel, config.permuted_columns, perm);
            PanelFit pf = fit_panel_spec(pipeline.apply(permuted), spec);
            for (std::size_t c = 0; c < result.columns.size(); ++c) {
                int j = pf.fit.column(result.columns[c]);
                result.estimates[c][r] = pf.fit.beta(j);
            }
        } catch (const Error& e) {
            if (e.code() == "RankDeficient" || e.code() == "EmptyDesign" ||
                e.code() == "Underdetermined") {
                failed[r] = 1;
            } else {
                throw;
            }
        }
    };

    if (config.n_threads == 1) {
        for (int r = 0; r < config.n_reps; ++r) run_replicate(r);
    } else {
        std::vector<std::thread> workers;
        std::exception_ptr error;
        std::mutex error_mutex;
        for (int t = 0; t < config.n_threads; ++t) {
            workers.emplace_back([&, t] {
                try {
                    for (int r = t; r < config.n_reps; r += config.n_threads) run_replicate(r);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            });
        }
        for (auto& w : workers) w.join();
        if (error) std::rethrow_exception(error);
    }

    result.n_failed = static_cast<int>(std::count(failed.begin(), failed.end(), 1));
    if (result.n_failed == config.n_reps)
        fail("AllReplicatesFailed", "every placebo replicate failed to fit");
    return result;
}

std::vector<PlaceboSummary> summarize_placebo(const PlaceboResult& result) {
    std::vector<PlaceboSummary> out;
    for (std::size_t c = 0; c < result.columns.size(); ++c) {
        PlaceboSummary s;
        s.column = result.columns[c];
        std::vector<double> ok;
        for (double v : result.estimates[c])
            if (!is_missing(v)) ok.push_back(v);
        s.n_ok = static_cast<int>(ok.size());
        s.n_failed = result.n_reps - s.n_ok;
        if (!ok.empty()) {
            std::sort(ok.begin(), ok.end());
            s.mean = mean(ok);
            s.min = ok.front();
            s.max = ok.back();
            s.q1 = quantile_sorted(ok, 0.25);
            s.median = quantile_sorted(ok, 0.50);
            s.q3 = quantile_sorted(ok, 0.75);
            s.p5 = quantile_sorted(ok, 0.05);
            s.p95 = quantile_sorted(ok, 0.95);
        }
        out.push_back(std::move(s));
    }
    return out;
}

} // namespace covpanel

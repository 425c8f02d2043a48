#include "covpanel/transforms.hpp"

#include "covpanel/errors.hpp"

#include <cmath>
#include <map>

namespace covpanel {

void TransformSpec::validate() const {
    if (ma_window < 1) fail("InvalidConfig", "ma_window must be >= 1");
    if (diff_window < 1) fail("InvalidConfig", "diff_window must be >= 1");
    if (lag_days < 0) fail("InvalidConfig", "lag_days must be >= 0");
    if (!(log_floor > 0.0)) fail("InvalidConfig", "log_floor must be > 0");
}

PanelDataset moving_average(const PanelDataset& panel, const std::string& column,
                            const TransformSpec& spec) {
    spec.validate();
    int src = panel.column_index(column);
    const auto& values = panel.column(src);
    const int w = spec.ma_window;

    for (const auto& span : panel.spans())
        if (span.n_days < w)
            fail("SeriesTooShort", "state " + span.state + " has " + std::to_string(span.n_days) +
                                       " days, window is " + std::to_string(w));

    std::vector<double> out(panel.n_rows(), missing_value());
    for (const auto& span : panel.spans()) {
        for (int i = w - 1; i < span.n_days; ++i) {
            double sum = 0.0;
            bool ok = true;
            for (int j = i - w + 1; j <= i; ++j) {
                double v = values[span.offset + j];
                if (is_missing(v)) { ok = false; break; }
                sum += v;
            }
            if (ok) out[span.offset + i] = sum / w;
        }
    }
    return panel.with_column(column + "_ma", panel.role(src), std::move(out));
}

PanelDataset weekly_log_growth(const PanelDataset& panel, const std::string& count_column,
                               const TransformSpec& spec) {
    spec.validate();
    int src = panel.column_index(count_column);
    ColumnRole role = panel.role(src);
    if (role != ColumnRole::Count && role != ColumnRole::TestCount)
        fail("InvalidConfig", "'" + count_column + "' is not a cumulative count column");

    const auto& values = panel.column(src);
    const int d = spec.diff_window;
    std::vector<double> diff(panel.n_rows(), missing_value());
    std::vector<double> logdiff(panel.n_rows(), missing_value());
    std::vector<double> floored(panel.n_rows(), missing_value());
    std::vector<double> growth(panel.n_rows(), missing_value());

    for (const auto& span : panel.spans()) {
        for (int i = d; i < span.n_days; ++i) {
            double cur = values[span.offset + i];
            double prev = values[span.offset + i - d];
            if (is_missing(cur) || is_missing(prev)) continue;
            double dv = cur - prev;
            diff[span.offset + i] = dv;
            floored[span.offset + i] = dv < spec.log_floor ? 1.0 : 0.0;
            logdiff[span.offset + i] = std::log(std::max(dv, spec.log_floor));
        }
        for (int i = 2 * d; i < span.n_days; ++i) {
            double cur = logdiff[span.offset + i];
            double prev = logdiff[span.offset + i - d];
            if (is_missing(cur) || is_missing(prev)) continue;
            growth[span.offset + i] = cur - prev;
        }
    }

    return panel.with_column(count_column + "_diff", ColumnRole::Derived, std::move(diff))
        .with_column(count_column + "_logdiff", ColumnRole::Derived, std::move(logdiff))
        .with_column(count_column + "_floored", ColumnRole::Derived, std::move(floored))
        .with_column(count_column + "_growth", ColumnRole::Derived, std::move(growth));
}

PanelDataset lag(const PanelDataset& panel, const std::string& column, int k) {
    if (k < 0) fail("InvalidConfig", "lag must be non-negative");
    int src = panel.column_index(column);
    const auto& values = panel.column(src);
    std::vector<double> out(panel.n_rows(), missing_value());
    for (const auto& span : panel.spans())
        for (int i = k; i < span.n_days; ++i)
            out[span.offset + i] = values[span.offset + i - k];
    return panel.with_column(column + "_lag" + std::to_string(k), panel.role(src), std::move(out));
}

PanelDataset national_aggregate(const PanelDataset& panel, const std::string& column) {
    int src = panel.column_index(column);
    ColumnRole role = panel.role(src);
    if (role != ColumnRole::Count && role != ColumnRole::TestCount)
        fail("InvalidConfig", "'" + column + "' is not a count column");
    const auto& values = panel.column(src);

    // date serial -> running sum over states holding a value that day
    std::map<int, double> sums;
    for (const auto& span : panel.spans()) {
        for (int i = 0; i < span.n_days; ++i) {
            double v = values[span.offset + i];
            if (is_missing(v)) continue;
            sums[(span.first + i).serial()] += v;
        }
    }

    std::vector<double> out(panel.n_rows(), missing_value());
    for (const auto& span : panel.spans()) {
        for (int i = 0; i < span.n_days; ++i) {
            auto it = sums.find((span.first + i).serial());
            if (it != sums.end()) out[span.offset + i] = it->second;
        }
    }
    return panel.with_column(column + "_national", role, std::move(out));
}

PanelDataset encode_mask_policies(const PanelDataset& panel, const std::string& employee_col,
                                  const std::string& public_col) {
    int emp = panel.column_index(employee_col);
    int pub = panel.column_index(public_col);
    if (panel.role(emp) != ColumnRole::Policy || panel.role(pub) != ColumnRole::Policy)
        fail("InvalidConfig", "mask encoding requires policy-role columns");

    const auto& e = panel.column(emp);
    const auto& p = panel.column(pub);
    std::vector<double> only(panel.n_rows(), missing_value());
    std::vector<double> all(panel.n_rows(), missing_value());
    for (int r = 0; r < panel.n_rows(); ++r) {
        if (is_missing(e[r]) || is_missing(p[r])) continue;
        only[r] = e[r] * (1.0 - p[r]);
        all[r] = p[r];
    }
    return panel.with_column("masks_employees_only", ColumnRole::Policy, std::move(only))
        .with_column("masks_public", ColumnRole::Policy, std::move(all));
}

} // namespace covpanel

#ifndef COVPANEL_TRANSFORMS_HPP
#define COVPANEL_TRANSFORMS_HPP

#include "covpanel/panel.hpp"

#include <string>

namespace covpanel {

/// Windows and defaults for the series transforms. The weekly difference
/// (diff_window) and trailing moving average both default to 7 days; lags of
/// policies and outcome terms default to 14 days.
struct TransformSpec {
    int ma_window = 7;
    int diff_window = 7;
    int lag_days = 14;
    double log_floor = 1.0;

    void validate() const;
};

/// Adds `<column>_ma`: trailing mean over ma_window days (t-6..t for window
/// 7) per state; the first ma_window-1 days of each state are missing. The
/// new column inherits the source role.
PanelDataset moving_average(const PanelDataset& panel, const std::string& column,
                            const TransformSpec& spec = {});

/// Adds the weekly growth chain for a cumulative count column C:
///   `<C>_diff`     = C_t - C_{t-diff_window}
///   `<C>_logdiff`  = ln(max(diff, log_floor))
///   `<C>_floored`  = 1 where the floor bound, 0 elsewhere
///   `<C>_growth`   = logdiff_t - logdiff_{t-diff_window}
PanelDataset weekly_log_growth(const PanelDataset& panel, const std::string& count_column,
                               const TransformSpec& spec = {});

/// Adds `<column>_lag<k>`: value at (s, t) is the source at (s, t-k);
/// missing before the state's first date + k. Inherits the source role.
PanelDataset lag(const PanelDataset& panel, const std::string& column, int k);

/// Adds `<column>_national`: the sum of the column over all states at each
/// date, replicated into every state's rows. Count role so the growth chain
/// applies downstream.
PanelDataset national_aggregate(const PanelDataset& panel, const std::string& column);

/// Adds the observed-combination mask encoding:
///   `masks_employees_only` = employee * (1 - public)
///   `masks_public`         = public indicator unchanged
/// Original columns are retained.
PanelDataset encode_mask_policies(const PanelDataset& panel, const std::string& employee_col,
                                  const std::string& public_col);

} // namespace covpanel

#endif

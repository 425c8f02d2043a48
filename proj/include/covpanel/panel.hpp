#ifndef COVPANEL_PANEL_HPP
#define COVPANEL_PANEL_HPP

#include "covpanel/dates.hpp"

#include <cmath>
#include <iosfwd>
#include <limits>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

namespace covpanel {

enum class ColumnRole { Count, TestCount, Policy, Covariate, Derived };

ColumnRole role_from_string(const std::string& s);
std::string role_to_string(ColumnRole role);

inline double missing_value() { return std::numeric_limits<double>::quiet_NaN(); }
inline bool is_missing(double x) { return std::isnan(x); }

/// Per-state contiguous daily span and its offset into the row-major layout.
struct StateSpan {
    std::string state;
    Date first;
    int n_days = 0;
    int offset = 0;

    Date last() const { return first + (n_days - 1); }
    bool covers(Date d) const { return d >= first && d <= last(); }
};

/// Column roles, keyed by panel column name. Loaded from a JSON document of
/// the form {"columns": {"cases": "count", "mask_public": "policy", ...}}.
struct Schema {
    std::map<std::string, ColumnRole> columns;

    static Schema load(const std::string& path);
    static Schema from_json_text(const std::string& text);
};

/// State-by-day table of named series. Immutable after construction: all
/// transforms return a new dataset. Rows are laid out state-major, each
/// state's dates contiguous and ascending; states sorted by identifier.
class PanelDataset {
public:
    PanelDataset() = default;

    /// Assembles and validates a panel from parallel row vectors (any order).
    static PanelDataset build(std::vector<std::string> states, std::vector<Date> dates,
                              std::vector<std::string> column_names, std::vector<ColumnRole> roles,
                              std::vector<std::vector<double>> columns);

    int n_rows() const { return n_rows_; }
    int n_states() const { return static_cast<int>(spans_.size()); }
    const std::vector<StateSpan>& spans() const { return spans_; }
    const StateSpan& span(int state_idx) const { return spans_[state_idx]; }
    int state_index(const std::string& state) const; // -1 if absent

    Date min_date() const;
    Date max_date() const;

    const std::vector<std::string>& column_names() const { return column_names_; }
    bool has_column(const std::string& name) const;
    int column_index(const std::string& name) const; // throws UnknownColumn
    ColumnRole role(int col_idx) const { return roles_[col_idx]; }
    ColumnRole role(const std::string& name) const { return roles_[column_index(name)]; }

    const std::vector<double>& column(int col_idx) const { return data_[col_idx]; }
    const std::vector<double>& column(const std::string& name) const { return data_[column_index(name)]; }

    int row_of(int state_idx, Date d) const {
        const StateSpan& s = spans_[state_idx];
        if (!s.covers(d)) return -1;
        return s.offset + (d - s.first);
    }
    int state_of_row(int row) const { return row_state_[row]; }
    Date date_of_row(int row) const {
        const StateSpan& s = spans_[row_state_[row]];
        return s.first + (row - s.offset);
    }

    double value(int col_idx, int row) const { return data_[col_idx][row]; }

    PanelDataset with_column(const std::string& name, ColumnRole role, std::vector<double> values) const;
    PanelDataset with_replaced_column(const std::string& name, std::vector<double> values) const;

private:
    std::vector<StateSpan> spans_;
    std::vector<int> row_state_; // row -> state index
    int n_rows_ = 0;
    std::vector<std::string> column_names_;
    std::vector<ColumnRole> roles_;
    std::vector<std::vector<double>> data_; // [column][row]
    std::unordered_map<std::string, int> column_lookup_;

    void rebuild_lookup();
};

/// Loads and validates a panel CSV (`state`, `date` plus schema-mapped value
/// columns). Header columns absent from the schema are ignored.
PanelDataset load_panel(const std::string& path, const Schema& schema);
PanelDataset load_panel_stream(std::istream& in, const Schema& schema, const std::string& origin);

/// Emits a panel as CSV keyed by (state, date); missing cells become empty
/// fields.
void write_panel_csv(const PanelDataset& panel, std::ostream& out);

} // namespace covpanel

#endif

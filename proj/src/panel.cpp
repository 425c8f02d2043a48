#include "covpanel/panel.hpp"

#include "covpanel/csv.hpp"
#include "covpanel/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace covpanel {

ColumnRole role_from_string(const std::string& s) {
    if (s == "count") return ColumnRole::Count;
    if (s == "test_count") return ColumnRole::TestCount;
    if (s == "policy") return ColumnRole::Policy;
    if (s == "covariate") return ColumnRole::Covariate;
    if (s == "derived") return ColumnRole::Derived;
    fail("BadSchema", "unknown column role '" + s + "'");
}

std::string role_to_string(ColumnRole role) {
    switch (role) {
    case ColumnRole::Count: return "count";
    case ColumnRole::TestCount: return "test_count";
    case ColumnRole::Policy: return "policy";
    case ColumnRole::Covariate: return "covariate";
    case ColumnRole::Derived: return "derived";
    }
    return "derived";
}

Schema Schema::from_json_text(const std::string& text) {
    nlohmann::json doc = nlohmann::json::parse(text);
    if (!doc.contains("columns") || !doc["columns"].is_object())
        fail("BadSchema", "schema JSON must contain a \"columns\" object");
    Schema schema;
    for (auto& [name, role] : doc["columns"].items())
        schema.columns[name] = role_from_string(role.get<std::string>());
    return schema;
}

Schema Schema::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("FileNotFound", "cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

int PanelDataset::state_index(const std::string& state) const {
    for (std::size_t i = 0; i < spans_.size(); ++i)
        if (spans_[i].state == state) return static_cast<int>(i);
    return -1;
}

Date PanelDataset::min_date() const {
    Date d = spans_.front().first;
    for (const auto& s : spans_) d = std::min(d, s.first);
    return d;
}

Date PanelDataset::max_date() const {
    Date d = spans_.front().last();
    for (const auto& s : spans_) d = std::max(d, s.last());
    return d;
}

bool PanelDataset::has_column(const std::string& name) const {
    return column_lookup_.count(name) > 0;
}

int PanelDataset::column_index(const std::string& name) const {
    auto it = column_lookup_.find(name);
    if (it == column_lookup_.end()) fail("UnknownColumn", "no column named '" + name + "'");
    return it->second;
}

void PanelDataset::rebuild_lookup() {
    column_lookup_.clear();
    for (std::size_t i = 0; i < column_names_.size(); ++i)
        column_lookup_[column_names_[i]] = static_cast<int>(i);
}

PanelDataset PanelDataset::with_column(const std::string& name, ColumnRole role,
                                       std::vector<double> values) const {
    if (has_column(name)) fail("DuplicateColumn", "column '" + name + "' already exists");
    if (static_cast<int>(values.size()) != n_rows_)
        fail("DimensionMismatch", "column '" + name + "' has " + std::to_string(values.size()) +
                                      " values for " + std::to_string(n_rows_) + " rows");
    PanelDataset out = *this;
    out.column_names_.push_back(name);
    out.roles_.push_back(role);
    out.data_.push_back(std::move(values));
    out.rebuild_lookup();
    return out;
}

PanelDataset PanelDataset::with_replaced_column(const std::string& name,
                                                std::vector<double> values) const {
    int idx = column_index(name);
    if (static_cast<int>(values.size()) != n_rows_)
        fail("DimensionMismatch", "column '" + name + "' has " + std::to_string(values.size()) +
                                      " values for " + std::to_string(n_rows_) + " rows");
    PanelDataset out = *this;
    out.data_[idx] = std::move(values);
    return out;
}

PanelDataset PanelDataset::build(std::vector<std::string> states, std::vector<Date> dates,
                                 std::vector<std::string> column_names, std::vector<ColumnRole> roles,
                                 std::vector<std::vector<double>> columns) {
    const std::size_t n = states.size();
    if (dates.size() != n) fail("DimensionMismatch", "states and dates differ in length");
    for (const auto& col : columns)
        if (col.size() != n) fail("DimensionMismatch", "column length differs from row count");
    if (n == 0) fail("EmptyPanel", "panel has no rows");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (states[a] != states[b]) return states[a] < states[b];
        return dates[a] < dates[b];
    });

    PanelDataset panel;
    panel.n_rows_ = static_cast<int>(n);
    panel.column_names_ = std::move(column_names);
    panel.roles_ = std::move(roles);
    panel.data_.assign(panel.column_names_.size(), std::vector<double>(n));
    panel.row_state_.resize(n);

    for (std::size_t r = 0; r < n; ++r) {
        std::size_t src = order[r];
        if (r > 0) {
            std::size_t prev = order[r - 1];
            if (states[prev] == states[src]) {
                if (dates[prev] == dates[src])
                    fail("DuplicateRow", "duplicate (state, date) " + states[src] + ", " +
                                             dates[src].to_string());
                if (dates[src] - dates[prev] != 1)
                    fail("GapInDates", states[src] + " jumps from " + dates[prev].to_string() +
                                           " to " + dates[src].to_string());
            }
        }
        if (panel.spans_.empty() || panel.spans_.back().state != states[src]) {
            panel.spans_.push_back({states[src], dates[src], 0, static_cast<int>(r)});
        }
        panel.spans_.back().n_days += 1;
        panel.row_state_[r] = static_cast<int>(panel.spans_.size()) - 1;
        for (std::size_t c = 0; c < panel.data_.size(); ++c)
            panel.data_[c][r] = columns[c][src];
    }
    panel.rebuild_lookup();

    // Count columns are cumulative: non-negative and non-decreasing within
    // state (over non-missing cells). Raw policy indicators live in [0, 1].
    for (std::size_t c = 0; c < panel.data_.size(); ++c) {
        const auto& col = panel.data_[c];
        if (panel.roles_[c] == ColumnRole::Count || panel.roles_[c] == ColumnRole::TestCount) {
            for (const auto& span : panel.spans_) {
                double prev = -1.0;
                for (int i = 0; i < span.n_days; ++i) {
                    double v = col[span.offset + i];
                    if (is_missing(v)) continue;
                    if (v < 0.0 || v < prev)
                        fail("NonMonotoneCumulative",
                             "column '" + panel.column_names_[c] + "' decreases in state " +
                                 span.state + " at " + (span.first + i).to_string());
                    prev = v;
                }
            }
        } else if (panel.roles_[c] == ColumnRole::Policy) {
            for (const auto& span : panel.spans_) {
                for (int i = 0; i < span.n_days; ++i) {
                    double v = col[span.offset + i];
                    if (!is_missing(v) && (v < 0.0 || v > 1.0))
                        fail("InvalidValue", "policy column '" + panel.column_names_[c] +
                                                 "' outside [0,1] in state " + span.state +
                                                 " at " + (span.first + i).to_string());
                }
            }
        }
    }
    return panel;
}

PanelDataset load_panel_stream(std::istream& in, const Schema& schema, const std::string& origin) {
    CsvTable table = read_csv_stream(in, origin);
    int state_col = table.column("state");
    int date_col = table.column("date");
    if (state_col < 0) fail("MissingColumn", origin + " lacks required column 'state'");
    if (date_col < 0) fail("MissingColumn", origin + " lacks required column 'date'");

    std::vector<std::string> names;
    std::vector<ColumnRole> roles;
    std::vector<int> sources;
    for (const auto& [name, role] : schema.columns) {
        int idx = table.column(name);
        if (idx < 0) fail("MissingColumn", origin + " lacks schema column '" + name + "'");
        names.push_back(name);
        roles.push_back(role);
        sources.push_back(idx);
    }

    const std::size_t n = table.rows.size();
    std::vector<std::string> states(n);
    std::vector<Date> dates(n);
    std::vector<std::vector<double>> columns(names.size(), std::vector<double>(n));
    for (std::size_t r = 0; r < n; ++r) {
        const auto& row = table.rows[r];
        states[r] = row[state_col];
        dates[r] = Date::parse(row[date_col]);
        for (std::size_t c = 0; c < sources.size(); ++c) {
            const std::string& field = row[sources[c]];
            if (field.empty()) {
                columns[c][r] = missing_value();
            } else {
                double v;
                auto res = std::from_chars(field.data(), field.data() + field.size(), v);
                if (res.ec != std::errc{} || res.ptr != field.data() + field.size())
                    fail("InvalidValue", origin + ": non-numeric value '" + field +
                                             "' in column '" + names[c] + "'");
                columns[c][r] = v;
            }
        }
    }
    return PanelDataset::build(std::move(states), std::move(dates), std::move(names),
                               std::move(roles), std::move(columns));
}

PanelDataset load_panel(const std::string& path, const Schema& schema) {
    std::ifstream in(path);
    if (!in) fail("FileNotFound", "cannot open " + path);
    return load_panel_stream(in, schema, path);
}

void write_panel_csv(const PanelDataset& panel, std::ostream& out) {
    out << "state,date";
    for (const auto& name : panel.column_names()) out << ',' << csv_quote(name);
    out << '\n';
    for (int s = 0; s < panel.n_states(); ++s) {
        const StateSpan& span = panel.span(s);
        for (int i = 0; i < span.n_days; ++i) {
            int row = span.offset + i;
            out << csv_quote(span.state) << ',' << (span.first + i).to_string();
            for (std::size_t c = 0; c < panel.column_names().size(); ++c)
                out << ',' << format_number(panel.value(static_cast<int>(c), row));
            out << '\n';
        }
    }
}

} // namespace covpanel

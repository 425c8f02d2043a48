#include "covpanel/corrections.hpp"

#include "covpanel/csv.hpp"
#include "covpanel/errors.hpp"

namespace covpanel {

CorrectionSet CorrectionSet::load(const std::string& path) {
    CsvTable table = read_csv(path);
    int state = table.column("state");
    int column = table.column("column");
    int old_start = table.column("old_start");
    int new_start = table.column("new_start");
    int note = table.column("note");
    if (state < 0 || column < 0 || old_start < 0 || new_start < 0)
        fail("MissingColumn", path + " needs columns state,column,old_start,new_start");
    CorrectionSet set;
    for (const auto& row : table.rows) {
        Correction c;
        c.state = row[state];
        c.column = row[column];
        c.old_start = Date::parse(row[old_start]);
        c.new_start = Date::parse(row[new_start]);
        if (note >= 0) c.note = row[note];
        set.items.push_back(std::move(c));
    }
    return set;
}

PanelDataset apply_corrections(const PanelDataset& panel, const CorrectionSet& corrections) {
    PanelDataset out = panel;
    for (const auto& c : corrections.items) {
        int state_idx = out.state_index(c.state);
        if (state_idx < 0) fail("UnknownState", "no state named '" + c.state + "'");
        int col = out.column_index(c.column);
        if (out.role(col) != ColumnRole::Policy)
            fail("InvalidConfig", "'" + c.column + "' is not a policy column");

        const StateSpan& span = out.span(state_idx);
        std::vector<double> values = out.column(col);

        // Locate the episode: the first 1-run at or after the earlier of the
        // two start dates, and its end (first return to 0).
        Date scan_from = std::min(c.old_start, c.new_start);
        int begin = std::max(0, scan_from - span.first);
        int run_start = -1;
        for (int i = begin; i < span.n_days; ++i) {
            double v = values[span.offset + i];
            if (!is_missing(v) && v >= 0.5) { run_start = i; break; }
        }
        int run_end = span.n_days; // exclusive index of the recorded end
        if (run_start >= 0) {
            for (int i = run_start; i < span.n_days; ++i) {
                double v = values[span.offset + i];
                if (!is_missing(v) && v < 0.5) { run_end = i; break; }
            }
        }

        // 0 before new_start, 1 from new_start to the recorded end; cells
        // from the recorded end onward stay as they are.
        int new_idx = c.new_start - span.first;
        for (int i = 0; i < run_end; ++i)
            values[span.offset + i] = i < new_idx ? 0.0 : 1.0;
        out = out.with_replaced_column(c.column, std::move(values));
    }
    return out;
}

} // namespace covpanel

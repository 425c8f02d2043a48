#ifndef COVPANEL_CORRECTIONS_HPP
#define COVPANEL_CORRECTIONS_HPP

#include "covpanel/panel.hpp"

#include <string>
#include <vector>

namespace covpanel {

/// One policy-start-date fix: the indicator's episode that the source data
/// began at `old_start` actually began at `new_start`.
struct Correction {
    std::string state;
    std::string column;
    Date old_start;
    Date new_start;
    std::string note;
};

struct CorrectionSet {
    std::vector<Correction> items;

    /// CSV with columns state,column,old_start,new_start,note.
    static CorrectionSet load(const std::string& path);
};

/// Moves each corrected policy episode: indicator is 0 before new_start and
/// 1 from new_start until the episode's recorded end (the first 1->0
/// transition of the run found at or after min(old_start, new_start); open
/// if none). Cells after the recorded end, and all other columns, are
/// unchanged. Idempotent.
PanelDataset apply_corrections(const PanelDataset& panel, const CorrectionSet& corrections);

} // namespace covpanel

#endif

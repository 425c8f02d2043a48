#ifndef COVPANEL_INFLUENCE_HPP
#define COVPANEL_INFLUENCE_HPP

#include "covpanel/regression.hpp"

#include <string>
#include <vector>

namespace covpanel {

/// Leave-one-out displacement of one coefficient: delta_beta is
/// beta(without the row) - beta, so positive values mean the row pushes the
/// estimate downward.
struct InfluenceRecord {
    std::string state;
    Date date;
    std::string target;
    double delta_beta = 0.0;
    double leverage = 0.0;
    double residual = 0.0;
};

/// Closed-form DFBETA for every observation:
///   delta_beta_i = -[(X'X)^{-1} x_i]_target * e_i / (1 - h_i).
std::vector<InfluenceRecord> dfbeta(const FitResult& fit, const DesignMatrix& design,
                                    const std::string& target);

struct StateInfluence {
    std::string state;
    double sum = 0.0;
    double max_abs = 0.0;
    int count = 0;
};

/// Per-state sums of influence records, sorted by |sum| descending.
std::vector<StateInfluence> state_influence(const std::vector<InfluenceRecord>& records);

/// Exact refit-without-row difference for the target coefficient; the
/// verification oracle for dfbeta.
double loo_oracle(const DesignMatrix& design, int row, const std::string& target);

} // namespace covpanel

#endif

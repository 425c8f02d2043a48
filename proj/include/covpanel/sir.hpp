#ifndef COVPANEL_SIR_HPP
#define COVPANEL_SIR_HPP

#include "covpanel/panel.hpp"

#include <nlohmann/json_fwd.hpp>

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace covpanel {

inline constexpr int kNumPolicies = 4;

extern const std::array<std::string, kNumPolicies> kPolicyColumns;

/// SIR world with four additive interventions. Dynamics are deterministic
/// given the policy onset days; stochasticity enters only through the
/// uniform onset draws. Integration uses steps_per_day forward-Euler
/// substeps of the daily update so that long-run attack rates track the
/// continuous final-size equation.
struct SirConfig {
    double population = 1e6;
    double r0 = 2.5;
    double infectious_period = 7.0;
    std::array<double, kNumPolicies> policy_effects = {0.525, 0.525, 0.525, 0.525};
    int onset_min = 10;
    int onset_max = 60;
    int horizon = 120;
    double initial_infected = 100.0;
    double reporting = 1.0;
    int report_delay = 11; // days from infection to a recorded case
    int steps_per_day = 20;

    void validate() const;
    static SirConfig from_json(const nlohmann::json& doc);
    nlohmann::json to_json() const;
};

struct EpidemicPath {
    std::vector<double> susceptible; // day 0..horizon
    std::vector<double> infected;
    std::vector<double> recovered;
    std::vector<double> new_cases; // reported cases per day
    std::vector<double> cum_cases;
    std::array<int, kNumPolicies> onsets = {0, 0, 0, 0};
    double attack_rate = 0.0;

    int horizon() const { return static_cast<int>(susceptible.size()) - 1; }
};

/// Onset days drawn uniformly on [onset_min, onset_max] from a stream seeded
/// by `seed`, then the deterministic dynamics.
EpidemicPath simulate_sir(const SirConfig& config, std::uint64_t seed);

/// Deterministic core with fixed onsets; `removed_policy` zeroes one
/// policy's effect (the counterfactual in which it never happens).
EpidemicPath simulate_sir_with(const SirConfig& config,
                               const std::array<int, kNumPolicies>& onsets,
                               std::optional<int> removed_policy = std::nullopt);

struct CohortSpec {
    int n_generate = 1500;
    int n_select = 50;
    double attack_min = 0.005;
    double attack_max = 0.10;
    std::uint64_t seed = 0;

    void validate() const;
    static CohortSpec from_json(const nlohmann::json& doc);
};

struct Cohort {
    std::vector<EpidemicPath> paths;
    std::vector<int> generated_index; // which generated epidemic each member is
    int n_survivors = 0;
};

/// Generates n_generate epidemics (member i's onsets depend only on
/// (seed, i)), keeps those with attack rate inside the band, and uniformly
/// samples n_select without replacement.
Cohort generate_cohort(const SirConfig& config, const CohortSpec& cohort);

/// One synthetic state per path: cumulative reported cases (count role),
/// linear cumulative tests (so test growth is identically zero), the four
/// policy indicators stepping at their onsets, and trend covariates
/// (day/100 and its square) for use as regression controls. Day 0 maps to
/// 2020-01-01.
PanelDataset paths_to_panel(const std::vector<EpidemicPath>& paths);

struct SirCounterfactual {
    std::vector<double> median; // relative effect per day across the cohort
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<std::vector<double>> member_rel; // [member][day]
    double level = 0.90;
};

/// Re-simulates every cohort member with one policy removed and reports the
/// per-day distribution of relative effects cumulative_cf/cumulative - 1.
SirCounterfactual sir_counterfactual(const SirConfig& config, const CohortSpec& cohort,
                                     int removed_policy, double level = 0.90);

} // namespace covpanel

#endif

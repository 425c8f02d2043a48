#include "covpanel/sir.hpp"

#include "covpanel/errors.hpp"
#include "covpanel/rng.hpp"
#include "covpanel/stats.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>

namespace covpanel {

const std::array<std::string, kNumPolicies> kPolicyColumns = {
    "policy_masks", "policy_schools", "policy_stayhome", "policy_business"};

void SirConfig::validate() const {
    if (population <= 0) fail("InvalidConfig", "population must be positive");
    if (r0 <= 0) fail("InvalidConfig", "r0 must be positive");
    if (infectious_period < 1.0) fail("InvalidConfig", "infectious_period must be >= 1 day");
    for (double e : policy_effects)
        if (e < 0) fail("InvalidConfig", "policy effects must be non-negative");
    if (horizon < 1) fail("InvalidConfig", "horizon must be >= 1");
    if (onset_min > onset_max) fail("InvalidConfig", "onset range is empty");
    if (initial_infected <= 0 || initial_infected > population)
        fail("InvalidConfig", "initial_infected must be in (0, population]");
    if (reporting < 0 || reporting > 1) fail("InvalidConfig", "reporting must be in [0,1]");
    if (report_delay < 0) fail("InvalidConfig", "report_delay must be >= 0");
    if (steps_per_day < 1) fail("InvalidConfig", "steps_per_day must be >= 1");
}

SirConfig SirConfig::from_json(const nlohmann::json& doc) {
    SirConfig c;
    if (doc.contains("population")) c.population = doc["population"].get<double>();
    if (doc.contains("r0")) c.r0 = doc["r0"].get<double>();
    if (doc.contains("infectious_period")) c.infectious_period = doc["infectious_period"].get<double>();
    if (doc.contains("policy_effects")) {
        auto v = doc["policy_effects"].get<std::vector<double>>();
        if (v.size() != kNumPolicies)
            fail("InvalidConfig", "policy_effects must list 4 values");
        std::copy(v.begin(), v.end(), c.policy_effects.begin());
    }
    if (doc.contains("onset_range")) {
        const auto& r = doc["onset_range"];
        if (!r.is_array() || r.size() != 2) fail("InvalidConfig", "onset_range must be [min, max]");
        c.onset_min = r[0].get<int>();
        c.onset_max = r[1].get<int>();
    }
    if (doc.contains("horizon")) c.horizon = doc["horizon"].get<int>();
    if (doc.contains("initial_infected")) c.initial_infected = doc["initial_infected"].get<double>();
    if (doc.contains("reporting")) c.reporting = doc["reporting"].get<double>();
    if (doc.contains("report_delay")) c.report_delay = doc["report_delay"].get<int>();
    if (doc.contains("steps_per_day")) c.steps_per_day = doc["steps_per_day"].get<int>();
    c.validate();
    return c;
}

nlohmann::json SirConfig::to_json() const {
    nlohmann::json doc;
    doc["population"] = population;
    doc["r0"] = r0;
    doc["infectious_period"] = infectious_period;
    doc["policy_effects"] = policy_effects;
    doc["onset_range"] = {onset_min, onset_max};
    doc["horizon"] = horizon;
    doc["initial_infected"] = initial_infected;
    doc["reporting"] = reporting;
    doc["report_delay"] = report_delay;
    doc["steps_per_day"] = steps_per_day;
    return doc;
}

EpidemicPath simulate_sir_with(const SirConfig& config,
                               const std::array<int, kNumPolicies>& onsets,
                               std::optional<int> removed_policy) {
    config.validate();
    const double n = config.population;
    const double gamma = 1.0 / config.infectious_period;
    const double dt = 1.0 / config.steps_per_day;
    const int horizon = config.horizon;

    EpidemicPath path;
    path.onsets = onsets;
    path.susceptible.resize(horizon + 1);
    path.infected.resize(horizon + 1);
    path.recovered.resize(horizon + 1);
    path.new_cases.assign(horizon + 1, 0.0);
    path.cum_cases.resize(horizon + 1);

    double s = n - config.initial_infected;
    double infected = config.initial_infected;
    path.susceptible[0] = s;
    path.infected[0] = infected;
    path.recovered[0] = 0.0;

    std::vector<double> new_infections(horizon + 1, 0.0);
    for (int day = 1; day <= horizon; ++day) {
        double effect = 0.0;
        for (int j = 0; j < kNumPolicies; ++j) {
            if (removed_policy && *removed_policy == j) continue;
            if (day - 1 >= onsets[j]) effect += config.policy_effects[j];
        }
        const double beta = std::max(config.r0 - effect, 0.0) * gamma;
        double infections_today = 0.0;
        for (int step = 0; step < config.steps_per_day; ++step) {
            double newinf = std::min(beta * s * infected / n * dt, s);
            double recov = gamma * infected * dt;
            s -= newinf;
            infected += newinf - recov;
            infections_today += newinf;
        }
        new_infections[day] = infections_today;
        path.susceptible[day] = s;
        path.infected[day] = infected;
        // recovered by balance keeps the conservation identity exact
        path.recovered[day] = n - s - infected;
    }

    path.cum_cases[0] = config.reporting * config.initial_infected;
    for (int day = 1; day <= horizon; ++day) {
        int src = day - config.report_delay;
        path.new_cases[day] = src >= 1 ? config.reporting * new_infections[src] : 0.0;
        path.cum_cases[day] = path.cum_cases[day - 1] + path.new_cases[day];
    }
    path.attack_rate = (n - s) / n;
    return path;
}

EpidemicPath simulate_sir(const SirConfig& config, std::uint64_t seed) {
    config.validate();
    auto rng = make_engine(seed, 0);
    std::array<int, kNumPolicies> onsets;
    for (int j = 0; j < kNumPolicies; ++j)
        onsets[j] = uniform_int(rng, config.onset_min, config.onset_max);
    return simulate_sir_with(config, onsets);
}

void CohortSpec::validate() const {
    if (n_generate < 1) fail("InvalidConfig", "n_generate must be >= 1");
    if (n_select < 1 || n_select > n_generate)
        fail("InvalidConfig", "n_select must be in [1, n_generate]");
    if (attack_min > attack_max) fail("InvalidConfig", "attack band is empty");
}

CohortSpec CohortSpec::from_json(const nlohmann::json& doc) {
    CohortSpec c;
    if (doc.contains("n_generate")) c.n_generate = doc["n_generate"].get<int>();
    if (doc.contains("n_select")) c.n_select = doc["n_select"].get<int>();
    if (doc.contains("attack_band")) {
        const auto& b = doc["attack_band"];
        if (!b.is_array() || b.size() != 2) fail("InvalidConfig", "attack_band must be [lo, hi]");
        c.attack_min = b[0].get<double>();
        c.attack_max = b[1].get<double>();
    }
    if (doc.contains("seed")) c.seed = doc["seed"].get<std::uint64_t>();
    c.validate();
    return c;
}

Cohort generate_cohort(const SirConfig& config, const CohortSpec& cohort) {
    config.validate();
    cohort.validate();

    std::vector<EpidemicPath> generated;
    generated.reserve(cohort.n_generate);
    std::vector<int> survivors;
    for (int i = 0; i < cohort.n_generate; ++i) {
        EpidemicPath path = simulate_sir(config, mix_seed(cohort.seed, static_cast<std::uint64_t>(i)));
        if (path.attack_rate >= cohort.attack_min && path.attack_rate <= cohort.attack_max)
            survivors.push_back(i);
        generated.push_back(std::move(path));
    }
    if (static_cast<int>(survivors.size()) < cohort.n_select)
        fail("InsufficientSurvivors",
             std::to_string(survivors.size()) + " epidemics in the attack band, need " +
                 std::to_string(cohort.n_select));

    auto rng = make_engine(cohort.seed, 0x5e1ec7u);
    std::vector<int> picks = sample_without_replacement(static_cast<int>(survivors.size()),
                                                        cohort.n_select, rng);
    std::sort(picks.begin(), picks.end());

    Cohort out;
    out.n_survivors = static_cast<int>(survivors.size());
    for (int p : picks) {
        out.generated_index.push_back(survivors[p]);
        out.paths.push_back(generated[survivors[p]]);
    }
    return out;
}

PanelDataset paths_to_panel(const std::vector<EpidemicPath>& paths) {
    if (paths.empty()) fail("InvalidConfig", "no epidemic paths");
    const int horizon = paths.front().horizon();
    for (const auto& p : paths)
        if (p.horizon() != horizon)
            fail("HorizonMismatch", "cohort members have different horizons");

    const Date base = Date::from_ymd(2020, 1, 1);
    const int days = horizon + 1;
    const std::size_t n_rows = paths.size() * static_cast<std::size_t>(days);

    std::vector<std::string> states(n_rows);
    std::vector<Date> dates(n_rows);
    std::vector<std::string> names = {"cases", "tests"};
    std::vector<ColumnRole> roles = {ColumnRole::Count, ColumnRole::TestCount};
    for (const auto& p : kPolicyColumns) {
        names.push_back(p);
        roles.push_back(ColumnRole::Policy);
    }
    names.push_back("trend");
    roles.push_back(ColumnRole::Covariate);
    names.push_back("trend_sq");
    roles.push_back(ColumnRole::Covariate);

    std::vector<std::vector<double>> columns(names.size(), std::vector<double>(n_rows));
    std::size_t r = 0;
    for (std::size_t s = 0; s < paths.size(); ++s) {
        char label[16];
        std::snprintf(label, sizeof(label), "sim%03zu", s + 1);
        for (int t = 0; t < days; ++t, ++r) {
            states[r] = label;
            dates[r] = base + t;
            columns[0][r] = paths[s].cum_cases[t];
            columns[1][r] = 1000.0 * (t + 1);
            for (int j = 0; j < kNumPolicies; ++j)
                columns[2 + j][r] = t >= paths[s].onsets[j] ? 1.0 : 0.0;
            const double trend = t / 100.0;
            columns[2 + kNumPolicies][r] = trend;
            columns[3 + kNumPolicies][r] = trend * trend;
        }
    }
    return PanelDataset::build(std::move(states), std::move(dates), std::move(names),
                               std::move(roles), std::move(columns));
}

SirCounterfactual sir_counterfactual(const SirConfig& config, const CohortSpec& cohort,
                                     int removed_policy, double level) {
    if (removed_policy < 0 || removed_policy >= kNumPolicies)
        fail("InvalidConfig", "policy index out of range");
    if (level <= 0.0 || level >= 1.0) fail("InvalidConfig", "level must be in (0,1)");

    Cohort members = generate_cohort(config, cohort);
    const int horizon = config.horizon;

    SirCounterfactual out;
    out.level = level;
    out.member_rel.reserve(members.paths.size());
    for (const auto& factual : members.paths) {
        EpidemicPath cf = simulate_sir_with(config, factual.onsets, removed_policy);
        std::vector<double> rel(horizon + 1, 0.0);
        for (int t = 0; t <= horizon; ++t)
            rel[t] = factual.cum_cases[t] > 0.0 ? cf.cum_cases[t] / factual.cum_cases[t] - 1.0
                                                : 0.0;
        out.member_rel.push_back(std::move(rel));
    }

    const double lo_p = (1.0 - level) / 2.0;
    out.median.resize(horizon + 1);
    out.lower.resize(horizon + 1);
    out.upper.resize(horizon + 1);
    std::vector<double> slice(members.paths.size());
    for (int t = 0; t <= horizon; ++t) {
        for (std::size_t m = 0; m < out.member_rel.size(); ++m) slice[m] = out.member_rel[m][t];
        std::sort(slice.begin(), slice.end());
        out.median[t] = quantile_sorted(slice, 0.5);
        out.lower[t] = quantile_sorted(slice, lo_p);
        out.upper[t] = quantile_sorted(slice, 1.0 - lo_p);
    }
    return out;
}

} // namespace covpanel

#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "covid.hpp"
#include "duration.hpp"
#include "infectivity.hpp"
#include "volterra.hpp"

namespace epivolt {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace cfg_detail {

using nlohmann::json;

inline void reject_unknown(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.count(it.key()))
            throw ConfigError(path + ": unknown key \"" + it.key() + "\"");
    }
}

inline const json& require(const json& obj, const std::string& path, const std::string& key) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ConfigError(path + ": missing required key \"" + key + "\"");
    return *it;
}

inline double num(const json& v, const std::string& path) {
    if (!v.is_number()) throw ConfigError(path + ": expected a number");
    return v.get<double>();
}

inline std::uint64_t uint(const json& v, const std::string& path) {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
        throw ConfigError(path + ": expected a nonnegative integer");
    return v.get<std::uint64_t>();
}

inline std::string str(const json& v, const std::string& path) {
    if (!v.is_string()) throw ConfigError(path + ": expected a string");
    return v.get<std::string>();
}

} // namespace cfg_detail

struct DurationSpec {
    enum class Kind { deterministic, exponential, beta_affine } kind = Kind::deterministic;
    double value = 0.0, rate = 0.0, a = 0.0, b = 0.0, shift = 0.0, scale = 0.0;

    DurationLaw build() const {
        switch (kind) {
            case Kind::deterministic: return DurationLaw::deterministic(value);
            case Kind::exponential: return DurationLaw::exponential(rate);
            case Kind::beta_affine: return DurationLaw::beta_affine(a, b, shift, scale);
        }
        throw std::logic_error("DurationSpec: unknown kind");
    }
};

struct LawSpec {
    enum class Kind { constant, triangular, covid_mixture } kind = Kind::constant;
    double beta = 0.0;
    double alpha_scale = 1.0, peak_fraction = 0.2;
    std::optional<DurationSpec> zeta, eta;
    std::vector<JointDurationLaw::Atom> joint_table;
    double p_reported = 0.8, alpha = 0.7;  // covid mixture

    JointDurationLaw joint() const {
        if (!joint_table.empty()) return JointDurationLaw::table(joint_table);
        return JointDurationLaw::independent(zeta->build(), eta->build());
    }

    InfectivityLaw build(const LawOptions& opts) const {
        switch (kind) {
            case Kind::constant: return make_law_constant(beta, joint(), opts);
            case Kind::triangular: return make_law_triangular(alpha_scale, peak_fraction, joint(), opts);
            case Kind::covid_mixture: {
                CovidScenario sc;
                sc.p_reported = p_reported;
                sc.alpha = alpha;
                sc.peak_fraction = peak_fraction;
                return build_covid_law(sc, opts);
            }
        }
        throw std::logic_error("LawSpec: unknown kind");
    }
};

struct ModelSection {
    LimitVariant variant = LimitVariant::merged;
    LawSpec law;
    std::optional<LawSpec> law0;
    std::uint64_t population = 0;
    std::optional<std::uint64_t> initial_infected;
    std::optional<double> initial_infected_fraction;
    double horizon = 0.0;
    double solver_dt = 0.01;
    double grid_step = 0.1;
    double law_grid_step = 0.01;
    double fp_tol = 1e-10;
    std::size_t fp_max_iter = 200;
    bool stationary_age_initials = false;

    std::uint64_t resolve_I0() const {
        if (initial_infected) return *initial_infected;
        return static_cast<std::uint64_t>(
            std::llround(*initial_infected_fraction * static_cast<double>(population)));
    }

    double resolve_I0_fraction() const {
        if (initial_infected_fraction) return *initial_infected_fraction;
        return static_cast<double>(*initial_infected) / static_cast<double>(population);
    }
};

struct ExperimentConfig {
    enum class Kind { flln_compare, early_growth, heatmap, growth_summary, solve_only } kind;
    std::uint64_t seed = 0;
    std::string output_dir = "out";
    std::optional<std::size_t> threads;

    std::optional<ModelSection> model;
    std::size_t replicates = 1;
    bool emit_event_log = false;
    std::size_t sample_trajectories = 0;  // emit the first k per-replicate trajectory CSVs

    // early_growth knobs
    double hitting_alpha = 0.5;
    double hitting_epsilon = 0.1;
    double fit_window_lo_exp = 0.3;
    double fit_window_hi_exp = 0.7;
    double extinction_alpha = 0.25;

    // heatmap knobs
    double heatmap_rho = 0.0;
    std::size_t heatmap_alpha_cells = 101;
    std::size_t heatmap_pR_cells = 101;
    double heatmap_peak_fraction = 0.2;

    // growth_summary knobs
    std::uint64_t gs_initial_infected = 1;
    double gs_susceptible_fraction = 1.0;
    std::uint64_t gs_mc_samples = 100000;
};

namespace cfg_detail {

inline DurationSpec parse_duration(const json& j, const std::string& path) {
    if (!j.is_object()) throw ConfigError(path + ": expected an object");
    DurationSpec d;
    std::string kind = str(require(j, path, "kind"), path + ".kind");
    if (kind == "deterministic") {
        reject_unknown(j, path, {"kind", "value"});
        d.kind = DurationSpec::Kind::deterministic;
        d.value = num(require(j, path, "value"), path + ".value");
        if (d.value < 0.0) throw ConfigError(path + ".value: must be >= 0");
    } else if (kind == "exponential") {
        reject_unknown(j, path, {"kind", "rate"});
        d.kind = DurationSpec::Kind::exponential;
        d.rate = num(require(j, path, "rate"), path + ".rate");
        if (!(d.rate > 0.0)) throw ConfigError(path + ".rate: must be > 0");
    } else if (kind == "beta_affine") {
        reject_unknown(j, path, {"kind", "a", "b", "shift", "scale"});
        d.kind = DurationSpec::Kind::beta_affine;
        d.a = num(require(j, path, "a"), path + ".a");
        d.b = num(require(j, path, "b"), path + ".b");
        d.shift = num(require(j, path, "shift"), path + ".shift");
        d.scale = num(require(j, path, "scale"), path + ".scale");
        if (!(d.a > 0.0 && d.b > 0.0)) throw ConfigError(path + ": a and b must be > 0");
        if (!(d.scale > 0.0) || d.shift < 0.0) throw ConfigError(path + ": need scale > 0 and shift >= 0");
    } else {
        throw ConfigError(path + ".kind: must be deterministic | exponential | beta_affine");
    }
    return d;
}

inline LawSpec parse_law(const json& j, const std::string& path) {
    if (!j.is_object()) throw ConfigError(path + ": expected an object");
    LawSpec law;
    std::string kind = str(require(j, path, "kind"), path + ".kind");
    auto parse_durations = [&](LawSpec& l) {
        bool has_joint = j.contains("joint_table");
        bool has_marginals = j.contains("zeta") || j.contains("eta");
        if (has_joint && has_marginals)
            throw ConfigError(path + ": give either zeta/eta marginals or joint_table, not both");
        if (has_joint) {
            const json& t = j["joint_table"];
            if (!t.is_array() || t.empty()) throw ConfigError(path + ".joint_table: expected a nonempty array");
            for (std::size_t i = 0; i < t.size(); ++i) {
                const json& row = t[i];
                std::string rp = path + ".joint_table[" + std::to_string(i) + "]";
                if (!row.is_array() || row.size() != 3) throw ConfigError(rp + ": expected [zeta, eta, weight]");
                JointDurationLaw::Atom a{num(row[0], rp), num(row[1], rp), num(row[2], rp)};
                if (a.zeta < 0.0 || a.eta < 0.0 || !(a.weight > 0.0))
                    throw ConfigError(rp + ": need zeta, eta >= 0 and weight > 0");
                l.joint_table.push_back(a);
            }
        } else {
            l.zeta = parse_duration(require(j, path, "zeta"), path + ".zeta");
            l.eta = parse_duration(require(j, path, "eta"), path + ".eta");
        }
    };
    if (kind == "constant") {
        reject_unknown(j, path, {"kind", "beta", "zeta", "eta", "joint_table"});
        law.kind = LawSpec::Kind::constant;
        law.beta = num(require(j, path, "beta"), path + ".beta");
        if (!(law.beta > 0.0)) throw ConfigError(path + ".beta: must be > 0");
        parse_durations(law);
    } else if (kind == "triangular") {
        reject_unknown(j, path, {"kind", "alpha_scale", "peak_fraction", "zeta", "eta", "joint_table"});
        law.kind = LawSpec::Kind::triangular;
        law.alpha_scale = num(require(j, path, "alpha_scale"), path + ".alpha_scale");
        if (j.contains("peak_fraction")) law.peak_fraction = num(j["peak_fraction"], path + ".peak_fraction");
        if (!(law.alpha_scale > 0.0 && law.alpha_scale <= 1.0))
            throw ConfigError(path + ".alpha_scale: must lie in (0, 1]");
        if (!(law.peak_fraction > 0.0 && law.peak_fraction < 1.0))
            throw ConfigError(path + ".peak_fraction: must lie in (0, 1)");
        parse_durations(law);
    } else if (kind == "covid_mixture") {
        reject_unknown(j, path, {"kind", "p_reported", "alpha", "peak_fraction"});
        law.kind = LawSpec::Kind::covid_mixture;
        law.p_reported = num(require(j, path, "p_reported"), path + ".p_reported");
        law.alpha = num(require(j, path, "alpha"), path + ".alpha");
        if (j.contains("peak_fraction")) law.peak_fraction = num(j["peak_fraction"], path + ".peak_fraction");
        if (!(law.p_reported >= 0.0 && law.p_reported <= 1.0))
            throw ConfigError(path + ".p_reported: must lie in [0, 1]");
        if (!(law.alpha > 0.0 && law.alpha <= 1.0)) throw ConfigError(path + ".alpha: must lie in (0, 1]");
    } else {
        throw ConfigError(path + ".kind: must be constant | triangular | covid_mixture");
    }
    return law;
}

inline ModelSection parse_model(const json& j, const std::string& path) {
    if (!j.is_object()) throw ConfigError(path + ": expected an object");
    reject_unknown(j, path,
                   {"variant", "law", "law0", "population", "initial_infected", "initial_infected_fraction",
                    "horizon", "solver_dt", "grid_step", "law_grid_step", "fp_tol", "fp_max_iter",
                    "initial_age"});
    ModelSection m;
    std::string variant = str(require(j, path, "variant"), path + ".variant");
    if (variant == "seir") m.variant = LimitVariant::seir;
    else if (variant == "merged") m.variant = LimitVariant::merged;
    else if (variant == "sis") m.variant = LimitVariant::sis;
    else if (variant == "sirs") m.variant = LimitVariant::sirs;
    else throw ConfigError(path + ".variant: must be seir | merged | sis | sirs");

    m.law = parse_law(require(j, path, "law"), path + ".law");
    if (j.contains("law0")) m.law0 = parse_law(j["law0"], path + ".law0");
    if (j.contains("law0") && j.contains("initial_age"))
        throw ConfigError(path + ": give either an explicit law0 or initial_age, not both");

    m.population = uint(require(j, path, "population"), path + ".population");
    if (m.population < 2) throw ConfigError(path + ".population: must be >= 2");

    bool has_count = j.contains("initial_infected");
    bool has_frac = j.contains("initial_infected_fraction");
    if (has_count == has_frac)
        throw ConfigError(path + ": give exactly one of initial_infected | initial_infected_fraction");
    if (has_count) m.initial_infected = uint(j["initial_infected"], path + ".initial_infected");
    if (has_frac) m.initial_infected_fraction = num(j["initial_infected_fraction"], path + ".initial_infected_fraction");

    double i0_frac = has_frac ? *m.initial_infected_fraction
                              : static_cast<double>(*m.initial_infected) / static_cast<double>(m.population);
    if (i0_frac < 0.0 || !(i0_frac > 0.0) || !(i0_frac < 1.0))
        throw ConfigError(path + ": initial infected fraction must satisfy 0 < E(0)+I(0) < 1 "
                          "(the limit theorems assume it)");

    m.horizon = num(require(j, path, "horizon"), path + ".horizon");
    if (!(m.horizon > 0.0)) throw ConfigError(path + ".horizon: must be > 0");
    if (j.contains("solver_dt")) m.solver_dt = num(j["solver_dt"], path + ".solver_dt");
    if (!(m.solver_dt > 0.0)) throw ConfigError(path + ".solver_dt: must be > 0");
    if (j.contains("grid_step")) m.grid_step = num(j["grid_step"], path + ".grid_step");
    if (!(m.grid_step > 0.0)) throw ConfigError(path + ".grid_step: must be > 0");
    double ratio = m.grid_step / m.solver_dt;
    if (std::abs(ratio - std::round(ratio)) > 1e-9)
        throw ConfigError(path + ".grid_step: must be an integer multiple of solver_dt");
    if (j.contains("law_grid_step")) m.law_grid_step = num(j["law_grid_step"], path + ".law_grid_step");
    if (!(m.law_grid_step > 0.0)) throw ConfigError(path + ".law_grid_step: must be > 0");
    if (j.contains("fp_tol")) m.fp_tol = num(j["fp_tol"], path + ".fp_tol");
    if (!(m.fp_tol > 0.0)) throw ConfigError(path + ".fp_tol: must be > 0");
    if (j.contains("fp_max_iter")) m.fp_max_iter = uint(j["fp_max_iter"], path + ".fp_max_iter");
    if (m.fp_max_iter == 0) throw ConfigError(path + ".fp_max_iter: must be >= 1");
    if (j.contains("initial_age")) {
        std::string mode = str(j["initial_age"], path + ".initial_age");
        if (mode == "fresh") m.stationary_age_initials = false;
        else if (mode == "stationary") m.stationary_age_initials = true;
        else throw ConfigError(path + ".initial_age: must be fresh | stationary");
        if (m.stationary_age_initials && m.variant != LimitVariant::merged)
            throw ConfigError(path + ".initial_age: stationary-age initials are defined for the merged variant");
    }
    return m;
}

} // namespace cfg_detail

inline ExperimentConfig parse_config(const nlohmann::json& j) {
    using namespace cfg_detail;
    if (!j.is_object()) throw ConfigError("config: top level must be an object");
    reject_unknown(j, "config",
                   {"experiment", "seed", "output_dir", "threads", "model", "ensemble", "early_growth",
                    "heatmap", "growth_summary"});
    ExperimentConfig c;

    std::string kind = str(require(j, "config", "experiment"), "config.experiment");
    if (kind == "flln_compare") c.kind = ExperimentConfig::Kind::flln_compare;
    else if (kind == "early_growth") c.kind = ExperimentConfig::Kind::early_growth;
    else if (kind == "heatmap") c.kind = ExperimentConfig::Kind::heatmap;
    else if (kind == "growth_summary") c.kind = ExperimentConfig::Kind::growth_summary;
    else if (kind == "solve_only") c.kind = ExperimentConfig::Kind::solve_only;
    else throw ConfigError("config.experiment: must be flln_compare | early_growth | heatmap | "
                           "growth_summary | solve_only");

    // reproducibility is mandatory, even for deterministic experiments
    c.seed = uint(require(j, "config", "seed"), "config.seed");

    if (j.contains("output_dir")) c.output_dir = str(j["output_dir"], "config.output_dir");
    if (j.contains("threads")) c.threads = uint(j["threads"], "config.threads");

    bool needs_model = c.kind != ExperimentConfig::Kind::heatmap;
    if (needs_model) c.model = parse_model(require(j, "config", "model"), "config.model");
    else if (j.contains("model")) c.model = parse_model(j["model"], "config.model");

    if (j.contains("ensemble")) {
        const auto& e = j["ensemble"];
        reject_unknown(e, "config.ensemble", {"replicates", "event_log", "sample_trajectories"});
        c.replicates = uint(require(e, "config.ensemble", "replicates"), "config.ensemble.replicates");
        if (c.replicates == 0) throw ConfigError("config.ensemble.replicates: must be >= 1");
        if (e.contains("event_log")) {
            if (!e["event_log"].is_boolean()) throw ConfigError("config.ensemble.event_log: expected a bool");
            c.emit_event_log = e["event_log"].get<bool>();
        }
        if (e.contains("sample_trajectories")) {
            c.sample_trajectories = uint(e["sample_trajectories"], "config.ensemble.sample_trajectories");
            if (c.sample_trajectories > c.replicates)
                throw ConfigError("config.ensemble.sample_trajectories: cannot exceed replicates");
        }
    }
    if (c.kind == ExperimentConfig::Kind::flln_compare || c.kind == ExperimentConfig::Kind::early_growth) {
        if (!j.contains("ensemble"))
            throw ConfigError("config: experiment \"" + kind + "\" requires an ensemble section");
        if (c.model && (c.model->variant == LimitVariant::sis || c.model->variant == LimitVariant::sirs))
            throw ConfigError("config.model.variant: stochastic simulation covers the seir and merged "
                              "variants only (sis/sirs limits are available through solve_only)");
    }

    if (j.contains("early_growth")) {
        const auto& g = j["early_growth"];
        reject_unknown(g, "config.early_growth",
                       {"alpha", "epsilon", "fit_window_exponents", "extinction_alpha"});
        if (g.contains("alpha")) c.hitting_alpha = num(g["alpha"], "config.early_growth.alpha");
        if (g.contains("epsilon")) c.hitting_epsilon = num(g["epsilon"], "config.early_growth.epsilon");
        if (g.contains("extinction_alpha"))
            c.extinction_alpha = num(g["extinction_alpha"], "config.early_growth.extinction_alpha");
        if (g.contains("fit_window_exponents")) {
            const auto& w = g["fit_window_exponents"];
            if (!w.is_array() || w.size() != 2)
                throw ConfigError("config.early_growth.fit_window_exponents: expected [lo, hi]");
            c.fit_window_lo_exp = num(w[0], "config.early_growth.fit_window_exponents[0]");
            c.fit_window_hi_exp = num(w[1], "config.early_growth.fit_window_exponents[1]");
        }
        if (!(c.hitting_alpha > 0.0 && c.hitting_alpha < 1.0))
            throw ConfigError("config.early_growth.alpha: must lie in (0,1)");
        if (!(c.hitting_epsilon > 0.0 && c.hitting_epsilon < 1.0))
            throw ConfigError("config.early_growth.epsilon: must lie in (0,1)");
        if (!(c.fit_window_lo_exp > 0.0 && c.fit_window_lo_exp < c.fit_window_hi_exp &&
              c.fit_window_hi_exp < 1.0))
            throw ConfigError("config.early_growth.fit_window_exponents: need 0 < lo < hi < 1");
    }

    if (c.kind == ExperimentConfig::Kind::heatmap) {
        const auto& h = require(j, "config", "heatmap");
        reject_unknown(h, "config.heatmap",
                       {"rho", "doubling_time", "halving_time", "alpha_cells", "p_reported_cells",
                        "peak_fraction"});
        int given = h.contains("rho") + h.contains("doubling_time") + h.contains("halving_time");
        if (given != 1)
            throw ConfigError("config.heatmap: give exactly one of rho | doubling_time | halving_time");
        if (h.contains("rho")) c.heatmap_rho = cfg_detail::num(h["rho"], "config.heatmap.rho");
        if (h.contains("doubling_time"))
            c.heatmap_rho = doubling_time_to_rho(cfg_detail::num(h["doubling_time"], "config.heatmap.doubling_time"));
        if (h.contains("halving_time"))
            c.heatmap_rho = doubling_time_to_rho(cfg_detail::num(h["halving_time"], "config.heatmap.halving_time"), true);
        if (h.contains("alpha_cells")) c.heatmap_alpha_cells = cfg_detail::uint(h["alpha_cells"], "config.heatmap.alpha_cells");
        if (h.contains("p_reported_cells"))
            c.heatmap_pR_cells = cfg_detail::uint(h["p_reported_cells"], "config.heatmap.p_reported_cells");
        if (c.heatmap_alpha_cells < 2 || c.heatmap_pR_cells < 2)
            throw ConfigError("config.heatmap: grids need at least 2 cells per axis");
        if (h.contains("peak_fraction"))
            c.heatmap_peak_fraction = cfg_detail::num(h["peak_fraction"], "config.heatmap.peak_fraction");
    } else if (j.contains("heatmap")) {
        throw ConfigError("config.heatmap: only valid for the heatmap experiment");
    }

    if (j.contains("growth_summary")) {
        const auto& g = j["growth_summary"];
        reject_unknown(g, "config.growth_summary",
                       {"initial_infected", "susceptible_fraction", "mc_samples"});
        if (g.contains("initial_infected"))
            c.gs_initial_infected = cfg_detail::uint(g["initial_infected"], "config.growth_summary.initial_infected");
        if (g.contains("susceptible_fraction"))
            c.gs_susceptible_fraction = cfg_detail::num(g["susceptible_fraction"], "config.growth_summary.susceptible_fraction");
        if (g.contains("mc_samples"))
            c.gs_mc_samples = cfg_detail::uint(g["mc_samples"], "config.growth_summary.mc_samples");
        if (c.gs_initial_infected == 0)
            throw ConfigError("config.growth_summary.initial_infected: must be >= 1");
    }

    if (needs_model) {
        std::uint64_t i0 = c.model->resolve_I0();
        if (i0 == 0 || i0 >= c.model->population)
            throw ConfigError("config.model: resolved initial infected count must satisfy 0 < I0 < N");
    }
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(f);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return parse_config(j);
}

} // namespace epivolt

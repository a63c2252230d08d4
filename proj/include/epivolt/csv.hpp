#pragma once

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ensemble.hpp"
#include "simulation.hpp"

namespace epivolt {

/// Fixed-format double rendering; identical input bits give identical text,
/// which keeps emitted files byte-reproducible.
inline std::string fmt_g(double x, int sig = 12) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.*g", sig, x);
    return buf;
}

/// Trajectory CSV shared by the stochastic and deterministic producers:
/// t,S_bar,Ifrak_bar,E_bar,I_bar,R_bar,A. The A column is the cumulative
/// infection count for stochastic runs and the cumulative infected fraction
/// for deterministic solutions.
inline std::string trajectory_csv(const Trajectory& traj) {
    std::string out = "t,S_bar,Ifrak_bar,E_bar,I_bar,R_bar,A\n";
    for (std::size_t i = 0; i < traj.size(); ++i) {
        out += fmt_g(traj.t[i]) + ',' + fmt_g(traj.S[i]) + ',' + fmt_g(traj.Ifrak[i]) + ',' +
               fmt_g(traj.E[i]) + ',' + fmt_g(traj.I[i]) + ',' + fmt_g(traj.R[i]) + ',' +
               fmt_g(traj.A[i]) + '\n';
    }
    return out;
}

inline std::string ensemble_csv(const EnsembleSummary& s) {
    static const char* comps[] = {"S", "Ifrak", "E", "I", "R", "A"};
    const EnsembleSummary::ComponentStats* stats[] = {&s.S, &s.Ifrak, &s.E, &s.I, &s.R, &s.A};
    std::string out = "t";
    for (const char* c : comps) {
        out += std::string(",mean_") + c + ",p2.5_" + c + ",p25_" + c + ",p75_" + c + ",p97.5_" + c;
    }
    out += '\n';
    for (std::size_t k = 0; k < s.t.size(); ++k) {
        out += fmt_g(s.t[k]);
        for (const auto* st : stats) {
            out += ',' + fmt_g(st->mean[k]) + ',' + fmt_g(st->p2_5[k]) + ',' + fmt_g(st->p25[k]) + ',' +
                   fmt_g(st->p75[k]) + ',' + fmt_g(st->p97_5[k]);
        }
        out += '\n';
    }
    return out;
}

/// Event log: one row per accepted infection (i, tau, zeta, eta).
inline std::string event_log_csv(const EpidemicState& state) {
    std::string out = "i,tau,zeta,eta\n";
    for (std::size_t i = 0; i < state.infections.size(); ++i) {
        const auto& inf = state.infections[i];
        out += std::to_string(i + 1) + ',' + fmt_g(inf.tau) + ',' + fmt_g(inf.fn.zeta()) + ',' +
               fmt_g(inf.fn.eta()) + '\n';
    }
    return out;
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw std::runtime_error("write failed: " + path);
}

} // namespace epivolt

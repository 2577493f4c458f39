#pragma once

#include <string>
#include <vector>

#include "fraccyl/study.hpp"

namespace fraccyl {

/// Flat view of the run configuration file. Sections: [problem], [grid],
/// [quadrature], [solver], [study]. An empty file yields all defaults;
/// loading collects every violation before failing. Canonical serialization
/// is byte-stable (fixed key order, shortest round-trip floats).
struct Config {
    // [problem]
    double s = 0.9;
    double p = 2.5;
    std::string forcing = "constant";  // zero | constant | bump
    double forcing_value = 1.0;
    double forcing_radius = 1.0;
    std::string u0 = "bump";
    double u0_value = 1.0;
    double u0_radius = 1.0;
    double t_end = 1.0;
    double tau = 0.05;
    // [grid]
    double omega_lo = -1.0;
    double omega_hi = 1.0;
    double h = 0.25;
    double ell = 2.0;
    double h1 = 0.0;  // 0 = same as h
    // [quadrature]
    int near_split = 4;
    int far_order = 3;
    double tail_radius = 0.0;
    double pair_cutoff = 0.0;
    // [solver]
    double grad_tol = 1e-8;
    int max_iters = 100000;
    double backtrack_shrink = 0.5;
    double armijo_c = 1e-4;
    // [study]
    std::vector<double> ell_list = {2.0, 4.0, 8.0, 16.0};
    double ell0 = 1.0;
    double slack = 0.5;
    int save_every = 1;

    static Config parse(const std::string& text);
    static Config load(const std::string& path);

    std::string canonical_text() const;
    /// FNV-1a 64-bit hash of the canonical text, as 16 hex digits.
    std::string digest() const;

    ForcingSpec forcing_spec() const;
    ForcingSpec u0_spec() const;
    QuadratureSpec quadrature_spec() const;
    SolverOptions solver_options() const;
    RateStudyConfig rate_config() const;
};

}  // namespace fraccyl

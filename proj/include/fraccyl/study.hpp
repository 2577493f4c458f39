#pragma once

#include <string>
#include <utility>
#include <vector>

#include "fraccyl/analysis.hpp"
#include "fraccyl/solver.hpp"

namespace fraccyl {

/// Configuration of an ell-sweep rate study. All cylinders share the same
/// spacing so that errors compare like with like.
struct RateStudyConfig {
    double s = 0.9;
    double p = 2.5;
    double omega_lo = -1.0;
    double omega_hi = 1.0;
    double h = 0.25;
    double h1 = 0.0;  // 0 = same as h
    std::vector<double> ell_list = {2.0, 4.0, 8.0, 16.0};
    double ell0 = 1.0;
    ForcingSpec forcing = ForcingSpec::constant(1.0);
    ForcingSpec u0 = ForcingSpec::bump(1.0);  // parabolic initial datum
    double t_end = 1.0;
    double tau = 0.05;
    int save_every = 1;
    double slack = 0.5;
    QuadratureSpec quad;
    SolverOptions solver;

    double axial_h() const { return h1 > 0.0 ? h1 : h; }
    /// Enforces the rate-regime hypotheses (p > 2, s in (1/p-prime, 1)) and the
    /// structural invariants; throws ConfigError listing every violation.
    void validate(bool parabolic = false) const;
};

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    double theoretical = 0.0;
    double slack = 0.5;
    bool passed = false;
    bool trivial = false;  // all-zero ordinates short-circuit
};

/// Guaranteed asymptotic decay exponent of the elliptic error bound:
/// min(s(p-1) - (p-1)/p, s - (p-1)/p) / (p-1).
double theoretical_elliptic_rate(double s, double p);

/// Parabolic counterpart: min(sp - 1, sp/(p-1) - 1).
double theoretical_parabolic_rate(double s, double p);

/// Least squares on (log ell, log error). Points with zero ordinate are
/// dropped; all-zero input returns a trivially-passed degenerate fit.
RateFit fit_loglog_slope(const std::vector<std::pair<double, double>>& points,
                         double theoretical, double slack = 0.5);

struct EllipticRateResult {
    std::vector<std::pair<double, double>> errors;  // (ell, windowed L^p)
    RateFit fit;
    bool monotone_decreasing = false;  // 5% non-monotonicity allowance
    bool passed = false;
    DiscreteFunction u_inf;
    std::vector<DiscreteFunction> solutions;  // one per ell

    std::string errors_csv() const;
    std::string loglog_csv() const;
};
EllipticRateResult elliptic_rate_study(const RateStudyConfig& cfg);

struct ParabolicRateResult {
    struct Row {
        double ell;
        double sup_l2_sq;  // max over saved times of squared windowed L2
        double lplp;       // tau-weighted sum of p-th-power windowed L^p
        double combined;
    };
    std::vector<Row> rows;
    RateFit fit_sup;
    RateFit fit_lplp;
    RateFit fit_combined;
    bool monotone_decreasing = false;
    bool passed = false;

    std::string errors_csv() const;
    std::string loglog_csv() const;
};
ParabolicRateResult parabolic_rate_study(const RateStudyConfig& cfg);

}  // namespace fraccyl

#include "fraccyl/study.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace fraccyl {

namespace {

void append_num(std::string& out, double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

bool monotone_with_allowance(const std::vector<double>& vals) {
    for (std::size_t i = 0; i + 1 < vals.size(); ++i)
        if (vals[i + 1] > 1.05 * vals[i]) return false;
    return true;
}

}  // namespace

void RateStudyConfig::validate(bool parabolic) const {
    std::vector<std::string> errs;
    if (!(p > 2.0))
        errs.push_back("rate studies require p > 2");
    const double lower = (p - 1.0) / p;  // 1/p'
    if (!(s > lower && s < 1.0))
        errs.push_back("rate studies require s in (1/p', 1), i.e. s > " +
                       std::to_string(lower));
    if (ell_list.size() < 2) errs.push_back("ell_list needs at least 2 entries");
    for (std::size_t i = 0; i + 1 < ell_list.size(); ++i)
        if (!(ell_list[i] < ell_list[i + 1]))
            errs.push_back("ell_list must be strictly increasing");
    if (!ell_list.empty() && !(ell0 < ell_list.front()))
        errs.push_back("ell0 must be smaller than every ell");
    if (!(ell0 > 0.0)) errs.push_back("ell0 must be positive");
    if (!(slack > 0.0 && slack <= 1.0)) errs.push_back("slack must lie in (0,1]");
    if (parabolic) {
        if (!(tau > 0.0) || !(t_end > 0.0) || tau > t_end)
            errs.push_back("parabolic study requires 0 < tau <= t_end");
        const double ratio = t_end / tau;
        if (std::abs(ratio - std::round(ratio)) > 1e-12 * std::max(1.0, ratio))
            errs.push_back("t_end/tau must be an integer");
        if (save_every < 1) errs.push_back("save_every must be >= 1");
    }
    if (!errs.empty()) {
        std::string msg = "invalid study config:";
        for (const auto& e : errs) msg += "\n  - " + e;
        throw ConfigError(msg);
    }
}

double theoretical_elliptic_rate(double s, double p) {
    if (!(p > 2.0) || !(s > (p - 1.0) / p && s < 1.0))
        throw std::domain_error(
            "theoretical_elliptic_rate requires p > 2 and s in (1/p', 1)");
    const double e1 = s * (p - 1.0) - (p - 1.0) / p;
    const double e2 = s - (p - 1.0) / p;
    return std::min(e1, e2) / (p - 1.0);
}

double theoretical_parabolic_rate(double s, double p) {
    if (!(p > 2.0) || !(s > (p - 1.0) / p && s < 1.0))
        throw std::domain_error(
            "theoretical_parabolic_rate requires p > 2 and s in (1/p', 1)");
    return std::min(s * p - 1.0, s * p / (p - 1.0) - 1.0);
}

RateFit fit_loglog_slope(const std::vector<std::pair<double, double>>& points,
                         double theoretical, double slack) {
    RateFit fit;
    fit.theoretical = theoretical;
    fit.slack = slack;

    std::vector<std::pair<double, double>> usable;
    for (const auto& [x, y] : points) {
        if (!(x > 0.0)) throw std::domain_error("fit requires positive abscissas");
        if (y > 0.0) usable.emplace_back(std::log(x), std::log(y));
    }
    if (usable.empty()) {
        fit.trivial = true;
        fit.passed = true;
        fit.r_squared = 1.0;
        return fit;
    }
    if (usable.size() < 2)
        throw std::domain_error("fit requires at least 2 points with positive values");

    double mx = 0.0, my = 0.0;
    for (const auto& [x, y] : usable) {
        mx += x;
        my += y;
    }
    mx /= usable.size();
    my /= usable.size();
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const auto& [x, y] : usable) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    fit.passed = fit.slope <= -slack * theoretical;
    return fit;
}

EllipticRateResult elliptic_rate_study(const RateStudyConfig& cfg) {
    cfg.validate(false);
    const CrossSectionGrid omega =
        CrossSectionGrid::make(cfg.omega_lo, cfg.omega_hi, cfg.h);
    const FractionalParams params2 = FractionalParams::make(2, cfg.s, cfg.p);

    EllipticRateResult res;
    res.u_inf = solve_cross_section(omega, sample_forcing(cfg.forcing, omega),
                                    cfg.s, cfg.p, cfg.quad, cfg.solver);

    DiscreteFunction prev;
    bool have_prev = false;
    for (const double ell : cfg.ell_list) {
        const CylinderGrid grid = CylinderGrid::make(ell, omega, cfg.axial_h());
        const DiscreteFunction f = sample_forcing(cfg.forcing, grid);
        SolverOptions opts = cfg.solver;
        DiscreteFunction warm;
        if (have_prev) {
            warm = embed_cylinder(prev, grid);
            opts.init = &warm;
        }
        const DiscreteFunction u_ell =
            solve_elliptic(grid, f, params2, cfg.quad, opts);
        const DiscreteFunction diff =
            subtract(u_ell, extend_cross_section(res.u_inf, grid));
        res.errors.emplace_back(ell, lp_norm(diff, Window{cfg.ell0}, cfg.p));
        res.solutions.push_back(u_ell);
        prev = u_ell;
        have_prev = true;
    }

    res.fit = fit_loglog_slope(res.errors,
                               theoretical_elliptic_rate(cfg.s, cfg.p),
                               cfg.slack);
    std::vector<double> vals;
    for (const auto& [ell, e] : res.errors) vals.push_back(e);
    res.monotone_decreasing = monotone_with_allowance(vals);
    res.passed = res.fit.passed && res.monotone_decreasing;
    return res;
}

ParabolicRateResult parabolic_rate_study(const RateStudyConfig& cfg) {
    cfg.validate(true);
    const CrossSectionGrid omega =
        CrossSectionGrid::make(cfg.omega_lo, cfg.omega_hi, cfg.h);
    const FractionalParams params1 = FractionalParams::make(1, cfg.s, cfg.p);
    const FractionalParams params2 = FractionalParams::make(2, cfg.s, cfg.p);

    ParabolicOptions popts;
    popts.tau = cfg.tau;
    popts.t_end = cfg.t_end;
    popts.inner = cfg.solver;
    popts.save_every = cfg.save_every;

    const Trajectory traj_inf =
        solve_parabolic(omega, cfg.u0, cfg.forcing, params1, cfg.quad, popts);

    ParabolicRateResult res;
    const Window win{cfg.ell0};
    for (const double ell : cfg.ell_list) {
        const CylinderGrid grid = CylinderGrid::make(ell, omega, cfg.axial_h());
        const Trajectory traj =
            solve_parabolic(grid, cfg.u0, cfg.forcing, params2, cfg.quad, popts);
        double sup_l2_sq = 0.0;
        double lplp = 0.0;
        const double dt_saved = cfg.tau * cfg.save_every;
        for (std::size_t k = 0; k < traj.times.size(); ++k) {
            const DiscreteFunction diff = subtract(
                traj.states[k],
                extend_cross_section(traj_inf.states[k], grid));
            const double l2 = lp_norm(diff, win, 2.0);
            sup_l2_sq = std::max(sup_l2_sq, l2 * l2);
            if (k > 0)
                lplp += dt_saved * std::pow(lp_norm(diff, win, cfg.p), cfg.p);
        }
        res.rows.push_back({ell, sup_l2_sq, lplp, sup_l2_sq + lplp});
    }

    const double rate = theoretical_parabolic_rate(cfg.s, cfg.p);
    auto column = [&](auto proj) {
        std::vector<std::pair<double, double>> pts;
        for (const auto& r : res.rows) pts.emplace_back(r.ell, proj(r));
        return pts;
    };
    res.fit_sup = fit_loglog_slope(
        column([](const auto& r) { return r.sup_l2_sq; }), rate, cfg.slack);
    res.fit_lplp = fit_loglog_slope(
        column([](const auto& r) { return r.lplp; }), rate, cfg.slack);
    res.fit_combined = fit_loglog_slope(
        column([](const auto& r) { return r.combined; }), rate, cfg.slack);

    std::vector<double> vals;
    for (const auto& r : res.rows) vals.push_back(r.combined);
    res.monotone_decreasing = monotone_with_allowance(vals);
    res.passed = res.fit_combined.passed && res.monotone_decreasing;
    return res;
}

std::string EllipticRateResult::errors_csv() const {
    std::string s = "ell,error\n";
    for (const auto& [ell, e] : errors) {
        append_num(s, ell);
        s += ',';
        append_num(s, e);
        s += '\n';
    }
    return s;
}

std::string EllipticRateResult::loglog_csv() const {
    std::string s = "log_ell,log_error\n";
    for (const auto& [ell, e] : errors) {
        if (!(e > 0.0)) continue;
        append_num(s, std::log(ell));
        s += ',';
        append_num(s, std::log(e));
        s += '\n';
    }
    return s;
}

std::string ParabolicRateResult::errors_csv() const {
    std::string s = "ell,sup_l2_sq,lplp_p,combined\n";
    for (const auto& r : rows) {
        append_num(s, r.ell);
        s += ',';
        append_num(s, r.sup_l2_sq);
        s += ',';
        append_num(s, r.lplp);
        s += ',';
        append_num(s, r.combined);
        s += '\n';
    }
    return s;
}

std::string ParabolicRateResult::loglog_csv() const {
    std::string s = "log_ell,log_combined\n";
    for (const auto& r : rows) {
        if (!(r.combined > 0.0)) continue;
        append_num(s, std::log(r.ell));
        s += ',';
        append_num(s, std::log(r.combined));
        s += '\n';
    }
    return s;
}

}  // namespace fraccyl

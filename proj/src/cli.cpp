#include "fraccyl/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "fraccyl/analysis.hpp"
#include "fraccyl/config.hpp"
#include "fraccyl/constants.hpp"
#include "fraccyl/study.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace fraccyl {

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitCheckFailed = 2;

std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct Run {
    fs::path dir;
    Config cfg;
    std::string subcommand;
    std::string started;

    void write(const std::string& name, const std::string& content) const {
        std::ofstream out(dir / name, std::ios::binary);
        if (!out) throw ConfigError("cannot write " + (dir / name).string());
        out << content;
    }
    void finish(bool pass, const std::string& summary) const {
        json m;
        m["config_digest"] = cfg.digest();
        m["artifact_version"] = kVersion;
        m["subcommand"] = subcommand;
        m["started_utc"] = started;
        m["finished_utc"] = utc_now();
        m["pass"] = pass;
        m["summary"] = summary;
        write("manifest.json", m.dump(2) + "\n");
    }
};

Run open_run(const std::string& out_opt, const Config& cfg,
             const std::string& subcommand, bool force) {
    fs::path dir;
    if (!out_opt.empty()) {
        dir = out_opt;
    } else {
        const char* root = std::getenv("FRACCYL_OUT");
        dir = fs::path(root != nullptr ? root : "runs") /
              (subcommand + "-" + cfg.digest().substr(0, 8));
    }
    if (fs::exists(dir / "manifest.json") && !force)
        throw ConfigError("run directory " + dir.string() +
                          " already holds a manifest; pass --force to overwrite");
    fs::create_directories(dir);
    Run run{dir, cfg, subcommand, utc_now()};
    run.write("config.canonical", cfg.canonical_text());
    return run;
}

json fit_json(const RateFit& f) {
    return json{{"slope", f.slope},           {"intercept", f.intercept},
                {"r_squared", f.r_squared},   {"theoretical", f.theoretical},
                {"slack", f.slack},           {"passed", f.passed},
                {"trivial", f.trivial}};
}

json summary_json(const std::string& check, bool pass, double worst,
                  const json& params) {
    return json{{"check_name", check},
                {"pass", pass},
                {"worst_ratio", worst},
                {"parameters", params}};
}

int cmd_constants(int N, double s, double p, const std::string& out,
                  bool force) {
    const double cN = c_nsp(N, s, p);
    const double th = theta_np(N, s, p);
    std::cout << "C_{" << N << "," << s << "," << p << "} = " << cN << "\n";
    std::cout << "theta_{" << N << "," << p << "} = " << th << "\n";
    json j{{"N", N}, {"s", s}, {"p", p}, {"c_nsp", cN}, {"theta_np", th}};
    if (N >= 2) {
        const double cNm1 = c_nsp(N - 1, s, p);
        const double res = reduction_residual(N, s, p);
        std::cout << "C_{" << N - 1 << "," << s << "," << p << "} = " << cNm1
                  << "\n";
        std::cout << "reduction residual = " << res << "\n";
        j["c_nsp_lower"] = cNm1;
        j["reduction_residual"] = res;
    }
    if (!out.empty()) {
        Config cfg;
        cfg.s = s;
        cfg.p = p;
        Run run = open_run(out, cfg, "constants", force);
        run.write("constants.json", j.dump(2) + "\n");
        run.finish(true, "constants evaluated");
    }
    return kExitOk;
}

int cmd_solve_elliptic(const Config& cfg, const std::string& out, bool force,
                       int threads, bool cross_section) {
    Run run = open_run(out, cfg,
                       cross_section ? "solve-cross-section" : "solve-elliptic",
                       force);
    SolverOptions opts = cfg.solver_options();
    opts.threads = threads;
    const QuadratureSpec quad = cfg.quadrature_spec();
    const CrossSectionGrid omega =
        CrossSectionGrid::make(cfg.omega_lo, cfg.omega_hi, cfg.h);
    SolveInfo info;
    DiscreteFunction u, f;
    FractionalParams params = FractionalParams::make(cross_section ? 1 : 2,
                                                     cfg.s, cfg.p);
    if (cross_section) {
        f = sample_forcing(cfg.forcing_spec(), omega);
        u = solve_elliptic(omega, f, params, quad, opts, &info);
    } else {
        const CylinderGrid grid =
            CylinderGrid::make(cfg.ell, omega, cfg.h1 > 0 ? cfg.h1 : cfg.h);
        f = sample_forcing(cfg.forcing_spec(), grid);
        u = solve_elliptic(grid, f, params, quad, opts, &info);
    }
    run.write("solution.csv", to_csv(u));
    const EnergyReport rep = energy_report(u, f, params, quad, threads);
    json j{{"seminorm_p", rep.seminorm_p},
           {"interaction_part", rep.interaction_part},
           {"tail_part", rep.tail_part},
           {"load", rep.load},
           {"iterations", info.iterations},
           {"grad_norm", info.grad_norm},
           {"grad_tol_abs", info.grad_tol_abs},
           {"energy", info.energy_value}};
    run.write("report.json", j.dump(2) + "\n");
    run.finish(true, "converged in " + std::to_string(info.iterations) +
                         " iterations");
    std::cout << "solution written to " << run.dir.string() << " (iterations "
              << info.iterations << ", grad " << info.grad_norm << ")\n";
    return kExitOk;
}

int cmd_solve_parabolic(const Config& cfg, const std::string& out, bool force,
                        int threads) {
    Run run = open_run(out, cfg, "solve-parabolic", force);
    ParabolicOptions popts;
    popts.tau = cfg.tau;
    popts.t_end = cfg.t_end;
    popts.inner = cfg.solver_options();
    popts.inner.threads = threads;
    popts.save_every = cfg.save_every;
    const QuadratureSpec quad = cfg.quadrature_spec();
    const CrossSectionGrid omega =
        CrossSectionGrid::make(cfg.omega_lo, cfg.omega_hi, cfg.h);
    const CylinderGrid grid =
        CylinderGrid::make(cfg.ell, omega, cfg.h1 > 0 ? cfg.h1 : cfg.h);
    const Trajectory traj =
        solve_parabolic(grid, cfg.u0_spec(), cfg.forcing_spec(),
                        FractionalParams::make(2, cfg.s, cfg.p), quad, popts);

    json idx;
    idx["tau"] = traj.tau;
    idx["t_end"] = traj.t_end;
    idx["times"] = traj.times;
    json steps = json::array();
    for (const auto& s : traj.steps)
        steps.push_back(json{{"iterations", s.iterations},
                             {"grad_norm", s.grad_norm},
                             {"dissipation_ok", s.dissipation_ok},
                             {"j_value", s.j_value}});
    idx["steps"] = steps;
    json files = json::array();
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
        char name[32];
        std::snprintf(name, sizeof(name), "state_%04zu.csv", k);
        run.write(name, to_csv(traj.states[k]));
        files.push_back(name);
    }
    idx["files"] = files;
    run.write("index.json", idx.dump(2) + "\n");
    const bool ok = traj.all_dissipation_ok();
    run.finish(ok, ok ? "all steps dissipative" : "dissipation check failed");
    std::cout << traj.steps.size() << " steps written to " << run.dir.string()
              << "\n";
    return ok ? kExitOk : kExitCheckFailed;
}

int cmd_poincare(const Config& cfg, std::vector<double> ells,
                 const std::string& out, bool force, int threads) {
    Run run = open_run(out, cfg, "poincare", force);
    SolverOptions opts = cfg.solver_options();
    opts.threads = threads;
    const QuadratureSpec quad = cfg.quadrature_spec();
    const CrossSectionGrid omega =
        CrossSectionGrid::make(cfg.omega_lo, cfg.omega_hi, cfg.h);
    const FractionalParams params1 = FractionalParams::make(1, cfg.s, cfg.p);
    const FractionalParams params2 = FractionalParams::make(2, cfg.s, cfg.p);

    std::ostringstream csv;
    csv.precision(17);
    csv << "domain,ell,value,iterations\n";
    const PoincareEstimate base = poincare_constant(omega, params1, opts, quad);
    csv << "omega,0," << base.value << ',' << base.iterations << "\n";

    bool monotone = true, above = true;
    double prev_value = 0.0, worst = 0.0;
    DiscreteFunction warm;
    bool have_warm = false;
    for (std::size_t i = 0; i < ells.size(); ++i) {
        const CylinderGrid grid =
            CylinderGrid::make(ells[i], omega, cfg.h1 > 0 ? cfg.h1 : cfg.h);
        SolverOptions o = opts;
        DiscreteFunction embedded;
        if (have_warm) {
            embedded = embed_cylinder(warm, grid);
            o.init = &embedded;
        }
        const PoincareEstimate est = poincare_constant(grid, params2, o, quad);
        csv << "cylinder," << ells[i] << ',' << est.value << ','
            << est.iterations << "\n";
        if (i > 0 && est.value > prev_value * (1.0 + 1e-10)) monotone = false;
        if (est.value < base.value * 0.95) above = false;
        worst = std::max(worst, est.value / base.value);
        prev_value = est.value;
        warm = est.minimizer;
        have_warm = true;
    }
    const bool pass = monotone && above;
    run.write("poincare.csv", csv.str());
    run.write("summary.json",
              summary_json("poincare", pass, worst,
                           json{{"s", cfg.s}, {"p", cfg.p}, {"ells", ells}})
                      .dump(2) +
                  "\n");
    run.finish(pass, pass ? "estimates nonincreasing and above cross-section"
                          : "poincare check failed");
    return pass ? kExitOk : kExitCheckFailed;
}

int cmd_verify_cutoff(const Config& cfg, const std::string& out, bool force) {
    Run run = open_run(out, cfg, "verify-cutoff", force);
    const int n = 10000;
    bool ok = true;
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = -2.0 + 4.0 * i / (n - 1.0);
        const double r = rho(x);
        if (r < 0.0 || r > 1.0) ok = false;
        if (std::abs(x) <= 0.5 && r != 1.0) ok = false;
        if (std::abs(x) >= 1.0 && r != 0.0) ok = false;
        if (i > 0) {
            const double xp = -2.0 + 4.0 * (i - 1) / (n - 1.0);
            const double lip = std::abs(r - rho(xp)) / (x - xp);
            worst = std::max(worst, lip);
            if (lip > 2.0 + 1e-12) ok = false;
        }
    }
    std::ostringstream csv;
    csv << "check,pass\nrange," << ok << "\nplateau," << ok << "\nlipschitz,"
        << (worst <= 2.0 + 1e-12) << "\n";
    run.write("cutoff.csv", csv.str());
    run.write("summary.json",
              summary_json("cutoff", ok, worst / 2.0, json{{"samples", n}})
                      .dump(2) +
                  "\n");
    run.finish(ok, ok ? "cutoff constraints hold" : "cutoff check failed");
    return ok ? kExitOk : kExitCheckFailed;
}

int cmd_verify_hl(const Config& cfg, std::vector<double> ells,
                  const std::string& out, bool force) {
    Run run = open_run(out, cfg, "verify-hl", force);
    const QuadratureSpec quad = cfg.quadrature_spec();
    const HEllBoundReport rep = verify_h_ell_bound(ells, cfg.s, cfg.p, quad);
    // scaling of h_ell(0)
    double lo = 0.0, hi = 0.0;
    for (std::size_t i = 0; i < ells.size(); ++i) {
        const double v = std::pow(ells[i], cfg.s * cfg.p) *
                         h_ell(0.0, ells[i], cfg.s, cfg.p, quad);
        if (i == 0) lo = hi = v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const bool scaling_ok = hi <= 1.10 * lo;
    const bool pass = rep.passed && scaling_ok;
    run.write("h_ell.csv", rep.to_csv());
    run.write("summary.json",
              summary_json("h_ell", pass,
                           std::max(rep.inside_spread, rep.outside_worst),
                           json{{"s", cfg.s}, {"p", cfg.p}, {"ells", ells},
                                {"scaling_spread", lo > 0 ? hi / lo : 1.0}})
                      .dump(2) +
                  "\n");
    run.finish(pass, pass ? "h_ell bounds verified" : "h_ell check failed");
    return pass ? kExitOk : kExitCheckFailed;
}

int cmd_verify_fiber(const Config& cfg, const std::string& out, bool force) {
    Run run = open_run(out, cfg, "verify-fiber", force);
    const QuadratureSpec quad = cfg.quadrature_spec();
    std::ostringstream csv;
    csv.precision(17);
    csv << "delta,s,p,residual\n";
    double worst = 0.0;
    for (const double delta : {0.5, 1.0, 3.0})
        for (const double s : {0.3, 0.5, 0.9})
            for (const double p : {2.0, 2.5, 4.0}) {
                const double r = fiber_identity_residual(0.0, delta, s, p, quad);
                worst = std::max(worst, r);
                csv << delta << ',' << s << ',' << p << ',' << r << "\n";
            }
    const bool pass = worst < 1e-6;
    run.write("fiber.csv", csv.str());
    run.write("summary.json",
              summary_json("fiber_identity", pass, worst / 1e-6, json::object())
                      .dump(2) +
                  "\n");
    run.finish(pass, pass ? "fiber identity verified" : "fiber check failed");
    return pass ? kExitOk : kExitCheckFailed;
}

int cmd_verify_inequalities(double p, long long samples, std::uint64_t seed,
                            const std::string& out, bool force) {
    Config cfg;
    cfg.p = p;
    Run run = open_run(out, cfg, "verify-inequalities", force);
    const InequalityReport rep = check_elementary_inequalities(p, samples, seed);
    run.write("inequalities.csv", rep.to_csv());
    long long total = 0;
    for (const auto v : rep.violations) total += v;
    run.write("summary.json",
              summary_json("elementary_inequalities", rep.passed,
                           static_cast<double>(total),
                           json{{"p", p}, {"samples", samples}, {"seed", seed}})
                      .dump(2) +
                  "\n");
    run.finish(rep.passed, rep.passed ? "zero violations"
                                      : "inequality violations found");
    std::cout << "violations:";
    for (const auto v : rep.violations) std::cout << ' ' << v;
    std::cout << "\n";
    return rep.passed ? kExitOk : kExitCheckFailed;
}

int cmd_verify_energy_growth(const Config& cfg, std::vector<double> ells,
                             const std::string& out, bool force, int threads) {
    Run run = open_run(out, cfg, "verify-energy-growth", force);
    SolverOptions opts = cfg.solver_options();
    opts.threads = threads;
    const CrossSectionGrid omega =
        CrossSectionGrid::make(cfg.omega_lo, cfg.omega_hi, cfg.h);
    const EnergyGrowthReport rep = energy_growth_report(
        ells, cfg.forcing_spec(), omega, cfg.h1 > 0 ? cfg.h1 : cfg.h,
        FractionalParams::make(2, cfg.s, cfg.p), cfg.quadrature_spec(), opts);
    run.write("energy_growth.csv", rep.to_csv());
    run.write("summary.json",
              summary_json("energy_growth", rep.passed, rep.spread,
                           json{{"s", cfg.s}, {"p", cfg.p}, {"ells", ells}})
                      .dump(2) +
                  "\n");
    run.finish(rep.passed, rep.passed ? "linear growth confirmed"
                                      : "energy growth spread too large");
    return rep.passed ? kExitOk : kExitCheckFailed;
}

int cmd_rate_elliptic(const Config& cfg, const std::string& out, bool force,
                      int threads, bool save_solutions) {
    Run run = open_run(out, cfg, "rate-elliptic", force);
    RateStudyConfig rc = cfg.rate_config();
    rc.solver.threads = threads;
    const EllipticRateResult res = elliptic_rate_study(rc);
    run.write("errors.csv", res.errors_csv());
    run.write("loglog.csv", res.loglog_csv());
    if (save_solutions) {
        run.write("u_inf.csv", to_csv(res.u_inf));
        for (std::size_t i = 0; i < res.solutions.size(); ++i) {
            char name[32];
            std::snprintf(name, sizeof(name), "u_ell_%04zu.csv", i);
            run.write(name, to_csv(res.solutions[i]));
        }
    }
    json j;
    j["config_digest"] = cfg.digest();
    j["study"] = "rate-elliptic";
    j["errors"] = res.errors;
    j["fit"] = fit_json(res.fit);
    j["monotone_decreasing"] = res.monotone_decreasing;
    j["passed"] = res.passed;
    run.write("study.json", j.dump(2) + "\n");
    run.finish(res.passed,
               "slope " + std::to_string(res.fit.slope) + " vs -" +
                   std::to_string(res.fit.slack * res.fit.theoretical));
    std::cout << "elliptic rate study: slope " << res.fit.slope
              << " (threshold " << -res.fit.slack * res.fit.theoretical
              << "), " << (res.passed ? "pass" : "FAIL") << "\n";
    return res.passed ? kExitOk : kExitCheckFailed;
}

int cmd_rate_parabolic(const Config& cfg, const std::string& out, bool force,
                       int threads) {
    Run run = open_run(out, cfg, "rate-parabolic", force);
    RateStudyConfig rc = cfg.rate_config();
    rc.solver.threads = threads;
    const ParabolicRateResult res = parabolic_rate_study(rc);
    run.write("errors.csv", res.errors_csv());
    run.write("loglog.csv", res.loglog_csv());
    json j;
    j["config_digest"] = cfg.digest();
    j["study"] = "rate-parabolic";
    json rows = json::array();
    for (const auto& r : res.rows)
        rows.push_back(json{{"ell", r.ell},
                            {"sup_l2_sq", r.sup_l2_sq},
                            {"lplp_p", r.lplp},
                            {"combined", r.combined}});
    j["rows"] = rows;
    j["fit_sup"] = fit_json(res.fit_sup);
    j["fit_lplp"] = fit_json(res.fit_lplp);
    j["fit_combined"] = fit_json(res.fit_combined);
    j["monotone_decreasing"] = res.monotone_decreasing;
    j["passed"] = res.passed;
    run.write("study.json", j.dump(2) + "\n");
    run.finish(res.passed,
               "combined slope " + std::to_string(res.fit_combined.slope));
    std::cout << "parabolic rate study: combined slope "
              << res.fit_combined.slope << " (threshold "
              << -res.fit_combined.slack * res.fit_combined.theoretical << "), "
              << (res.passed ? "pass" : "FAIL") << "\n";
    return res.passed ? kExitOk : kExitCheckFailed;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"fractional p-Laplacian cylinder studies"};
    app.require_subcommand(1);

    std::string config_path, out;
    bool force = false;
    int threads = 1;
    app.add_option("--config", config_path, "configuration file");
    app.add_option("--out", out, "output directory (default FRACCYL_OUT)");
    app.add_flag("--force", force, "overwrite an existing run directory");
    app.add_option("--threads", threads, "worker threads (1 = deterministic)")
        ->check(CLI::PositiveNumber);

    // constants
    auto* sc_const = app.add_subcommand("constants", "kernel constants");
    sc_const->fallthrough();
    int cN = 2;
    double cs = 0.9, cp = 2.5;
    sc_const->add_option("--N", cN);
    sc_const->add_option("--s", cs);
    sc_const->add_option("--p", cp);

    auto* sc_ell = app.add_subcommand("solve-elliptic", "cylinder solve");
    sc_ell->fallthrough();
    auto* sc_cross =
        app.add_subcommand("solve-cross-section", "cross-section solve");
    sc_cross->fallthrough();
    auto* sc_par = app.add_subcommand("solve-parabolic", "gradient-flow solve");
    sc_par->fallthrough();

    auto* sc_poin = app.add_subcommand("poincare", "Rayleigh quotient sweep");
    sc_poin->fallthrough();
    std::vector<double> poin_ells = {2.0, 4.0, 8.0};
    sc_poin->add_option("--ell", poin_ells, "cylinder lengths");

    auto* sc_verify = app.add_subcommand("verify", "identity and inequality checks");
    sc_verify->fallthrough();
    sc_verify->require_subcommand(1);
    auto* v_cutoff = sc_verify->add_subcommand("cutoff", "cutoff profile");
    v_cutoff->fallthrough();
    auto* v_hl = sc_verify->add_subcommand("hl", "h_ell two-regime bound");
    v_hl->fallthrough();
    std::vector<double> hl_ells = {2.0, 4.0, 8.0, 16.0};
    v_hl->add_option("--ell", hl_ells);
    auto* v_fiber = sc_verify->add_subcommand("fiber", "fiber integral identity");
    v_fiber->fallthrough();
    auto* v_ineq =
        sc_verify->add_subcommand("inequalities", "elementary inequalities");
    v_ineq->fallthrough();
    double ineq_p = 2.5;
    long long ineq_samples = 1000000;
    std::uint64_t ineq_seed = 7;
    v_ineq->add_option("--p", ineq_p);
    v_ineq->add_option("--samples", ineq_samples);
    v_ineq->add_option("--seed", ineq_seed);
    auto* v_growth =
        sc_verify->add_subcommand("energy-growth", "linear energy growth");
    v_growth->fallthrough();
    std::vector<double> growth_ells = {2.0, 4.0, 8.0};
    v_growth->add_option("--ell", growth_ells);

    auto* sc_re = app.add_subcommand("rate-elliptic", "elliptic convergence-rate study");
    sc_re->fallthrough();
    bool save_solutions = false;
    sc_re->add_flag("--save-solutions", save_solutions);
    auto* sc_rp = app.add_subcommand("rate-parabolic", "parabolic convergence-rate study");
    sc_rp->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitError;
    }

    try {
        Config cfg = config_path.empty() ? Config{} : Config::load(config_path);
        if (sc_const->parsed()) return cmd_constants(cN, cs, cp, out, force);
        if (sc_ell->parsed())
            return cmd_solve_elliptic(cfg, out, force, threads, false);
        if (sc_cross->parsed())
            return cmd_solve_elliptic(cfg, out, force, threads, true);
        if (sc_par->parsed()) return cmd_solve_parabolic(cfg, out, force, threads);
        if (sc_poin->parsed())
            return cmd_poincare(cfg, poin_ells, out, force, threads);
        if (v_cutoff->parsed()) return cmd_verify_cutoff(cfg, out, force);
        if (v_hl->parsed()) return cmd_verify_hl(cfg, hl_ells, out, force);
        if (v_fiber->parsed()) return cmd_verify_fiber(cfg, out, force);
        if (v_ineq->parsed())
            return cmd_verify_inequalities(ineq_p, ineq_samples, ineq_seed, out,
                                           force);
        if (v_growth->parsed())
            return cmd_verify_energy_growth(cfg, growth_ells, out, force,
                                            threads);
        if (sc_re->parsed())
            return cmd_rate_elliptic(cfg, out, force, threads, save_solutions);
        if (sc_rp->parsed()) return cmd_rate_parabolic(cfg, out, force, threads);
        std::cerr << "no subcommand selected\n";
        return kExitError;
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitError;
    } catch (const SolveError& e) {
        std::cerr << "solver error: " << e.what() << " (grad " << e.grad_norm
                  << " after " << e.iterations << " iterations)\n";
        return kExitError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
}

}  // namespace fraccyl

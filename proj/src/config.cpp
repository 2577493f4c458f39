#include "fraccyl/config.hpp"

#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace fraccyl {

namespace {

std::string fmt(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

struct Field {
    std::function<void(Config&, const std::string&, std::vector<std::string>&)>
        set;
    std::function<std::string(const Config&)> get;
};

bool parse_double(const std::string& v, double& out) {
    try {
        std::size_t pos = 0;
        out = std::stod(v, &pos);
        return pos == v.size();
    } catch (...) {
        return false;
    }
}

bool parse_int(const std::string& v, int& out) {
    try {
        std::size_t pos = 0;
        out = std::stoi(v, &pos);
        return pos == v.size();
    } catch (...) {
        return false;
    }
}

Field dbl_field(double Config::*member) {
    return {[member](Config& c, const std::string& v,
                     std::vector<std::string>& errs) {
                double d;
                if (parse_double(v, d))
                    c.*member = d;
                else
                    errs.push_back("expected a number, got '" + v + "'");
            },
            [member](const Config& c) { return fmt(c.*member); }};
}

Field int_field(int Config::*member) {
    return {[member](Config& c, const std::string& v,
                     std::vector<std::string>& errs) {
                int i;
                if (parse_int(v, i))
                    c.*member = i;
                else
                    errs.push_back("expected an integer, got '" + v + "'");
            },
            [member](const Config& c) { return std::to_string(c.*member); }};
}

Field str_field(std::string Config::*member,
                std::vector<std::string> allowed) {
    return {[member, allowed](Config& c, const std::string& v,
                              std::vector<std::string>& errs) {
                for (const auto& a : allowed)
                    if (v == a) {
                        c.*member = v;
                        return;
                    }
                std::string msg = "expected one of {";
                for (const auto& a : allowed) msg += a + ",";
                msg.back() = '}';
                errs.push_back(msg + ", got '" + v + "'");
            },
            [member](const Config& c) { return c.*member; }};
}

Field list_field(std::vector<double> Config::*member) {
    return {[member](Config& c, const std::string& v,
                     std::vector<std::string>& errs) {
                std::vector<double> vals;
                std::stringstream ss(v);
                std::string item;
                while (std::getline(ss, item, ',')) {
                    double d;
                    if (!parse_double(trim(item), d)) {
                        errs.push_back("expected a comma list of numbers, got '" +
                                       v + "'");
                        return;
                    }
                    vals.push_back(d);
                }
                if (vals.empty()) {
                    errs.push_back("empty list");
                    return;
                }
                c.*member = std::move(vals);
            },
            [member](const Config& c) {
                std::string s;
                for (std::size_t i = 0; i < (c.*member).size(); ++i) {
                    if (i) s += ",";
                    s += fmt((c.*member)[i]);
                }
                return s;
            }};
}

// fixed section/key order: this is the canonical form
const std::vector<std::pair<std::string,
                            std::vector<std::pair<std::string, Field>>>>&
schema() {
    static const auto* s = new std::vector<
        std::pair<std::string, std::vector<std::pair<std::string, Field>>>>{
        {"problem",
         {{"s", dbl_field(&Config::s)},
          {"p", dbl_field(&Config::p)},
          {"forcing", str_field(&Config::forcing, {"zero", "constant", "bump"})},
          {"forcing_value", dbl_field(&Config::forcing_value)},
          {"forcing_radius", dbl_field(&Config::forcing_radius)},
          {"u0", str_field(&Config::u0, {"zero", "constant", "bump"})},
          {"u0_value", dbl_field(&Config::u0_value)},
          {"u0_radius", dbl_field(&Config::u0_radius)},
          {"t_end", dbl_field(&Config::t_end)},
          {"tau", dbl_field(&Config::tau)}}},
        {"grid",
         {{"omega_lo", dbl_field(&Config::omega_lo)},
          {"omega_hi", dbl_field(&Config::omega_hi)},
          {"h", dbl_field(&Config::h)},
          {"ell", dbl_field(&Config::ell)},
          {"h1", dbl_field(&Config::h1)}}},
        {"quadrature",
         {{"near_split", int_field(&Config::near_split)},
          {"far_order", int_field(&Config::far_order)},
          {"tail_radius", dbl_field(&Config::tail_radius)},
          {"pair_cutoff", dbl_field(&Config::pair_cutoff)}}},
        {"solver",
         {{"grad_tol", dbl_field(&Config::grad_tol)},
          {"max_iters", int_field(&Config::max_iters)},
          {"backtrack_shrink", dbl_field(&Config::backtrack_shrink)},
          {"armijo_c", dbl_field(&Config::armijo_c)}}},
        {"study",
         {{"ell_list", list_field(&Config::ell_list)},
          {"ell0", dbl_field(&Config::ell0)},
          {"slack", dbl_field(&Config::slack)},
          {"save_every", int_field(&Config::save_every)}}}};
    return *s;
}

}  // namespace

Config Config::parse(const std::string& text) {
    Config cfg;
    std::vector<std::string> errs;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']') {
                errs.push_back("line " + std::to_string(lineno) +
                               ": malformed section header");
                continue;
            }
            section = trim(t.substr(1, t.size() - 2));
            bool known = false;
            for (const auto& [name, fields] : schema())
                if (name == section) known = true;
            if (!known)
                errs.push_back("line " + std::to_string(lineno) +
                               ": unknown section [" + section + "]");
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            errs.push_back("line " + std::to_string(lineno) +
                           ": expected key = value");
            continue;
        }
        const std::string key = trim(t.substr(0, eq));
        const std::string val = trim(t.substr(eq + 1));
        bool found = false;
        for (const auto& [name, fields] : schema()) {
            if (name != section) continue;
            for (const auto& [k, f] : fields)
                if (k == key) {
                    found = true;
                    std::vector<std::string> ferrs;
                    f.set(cfg, val, ferrs);
                    for (const auto& e : ferrs)
                        errs.push_back("line " + std::to_string(lineno) + ": [" +
                                       section + "] " + key + ": " + e);
                }
        }
        if (!found)
            errs.push_back("line " + std::to_string(lineno) + ": unknown key '" +
                           key + "' in section [" + section + "]");
    }

    // structural validation (collect everything before throwing)
    if (!(cfg.s > 0.0 && cfg.s < 1.0)) errs.push_back("[problem] s must lie in (0,1)");
    if (!(cfg.p >= 2.0)) errs.push_back("[problem] p must be >= 2");
    if (!(cfg.omega_lo < cfg.omega_hi))
        errs.push_back("[grid] omega_lo must be < omega_hi");
    if (!(cfg.h > 0.0)) errs.push_back("[grid] h must be > 0");
    if (!(cfg.ell > 0.0)) errs.push_back("[grid] ell must be > 0");
    if (cfg.near_split < 2) errs.push_back("[quadrature] near_split must be >= 2");
    if (cfg.far_order < 2) errs.push_back("[quadrature] far_order must be >= 2");
    if (!(cfg.grad_tol > 0.0)) errs.push_back("[solver] grad_tol must be > 0");
    if (cfg.max_iters < 1) errs.push_back("[solver] max_iters must be >= 1");
    if (!(cfg.backtrack_shrink > 0.0 && cfg.backtrack_shrink < 1.0))
        errs.push_back("[solver] backtrack_shrink must lie in (0,1)");
    if (!(cfg.armijo_c > 0.0 && cfg.armijo_c < 1.0))
        errs.push_back("[solver] armijo_c must lie in (0,1)");
    if (!(cfg.ell0 > 0.0)) errs.push_back("[study] ell0 must be > 0");
    if (cfg.save_every < 1) errs.push_back("[study] save_every must be >= 1");

    if (!errs.empty()) {
        std::string msg = "configuration errors:";
        for (const auto& e : errs) msg += "\n  - " + e;
        throw ConfigError(msg);
    }
    return cfg;
}

Config Config::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::string Config::canonical_text() const {
    std::string out;
    for (const auto& [name, fields] : schema()) {
        out += "[" + name + "]\n";
        for (const auto& [k, f] : fields) out += k + " = " + f.get(*this) + "\n";
        out += "\n";
    }
    return out;
}

std::string Config::digest() const {
    const std::string text = canonical_text();
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a 64
    for (const unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    static const char* hex = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[i] = hex[h & 0xf];
        h >>= 4;
    }
    return s;
}

ForcingSpec Config::forcing_spec() const {
    if (forcing == "zero") return ForcingSpec::zero();
    if (forcing == "constant") return ForcingSpec::constant(forcing_value);
    return ForcingSpec::bump(forcing_radius);
}

ForcingSpec Config::u0_spec() const {
    if (u0 == "zero") return ForcingSpec::zero();
    if (u0 == "constant") return ForcingSpec::constant(u0_value);
    return ForcingSpec::bump(u0_radius);
}

QuadratureSpec Config::quadrature_spec() const {
    QuadratureSpec q;
    q.near_split = near_split;
    q.far_order = far_order;
    q.tail_radius = tail_radius;
    q.pair_cutoff = pair_cutoff;
    return q;
}

SolverOptions Config::solver_options() const {
    SolverOptions o;
    o.grad_tol = grad_tol;
    o.max_iters = max_iters;
    o.backtrack_shrink = backtrack_shrink;
    o.armijo_c = armijo_c;
    return o;
}

RateStudyConfig Config::rate_config() const {
    RateStudyConfig rc;
    rc.s = s;
    rc.p = p;
    rc.omega_lo = omega_lo;
    rc.omega_hi = omega_hi;
    rc.h = h;
    rc.h1 = h1;
    rc.ell_list = ell_list;
    rc.ell0 = ell0;
    rc.forcing = forcing_spec();
    rc.u0 = u0_spec();
    rc.t_end = t_end;
    rc.tau = tau;
    rc.save_every = save_every;
    rc.slack = slack;
    rc.quad = quadrature_spec();
    rc.solver = solver_options();
    return rc;
}

}  // namespace fraccyl

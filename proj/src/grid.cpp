#include "fraccyl/grid.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "fraccyl/quadrature.hpp"

namespace fraccyl {

namespace {

// (hi - lo)/h must be an integer within 1e-12 relative.
int checked_cell_count(double lo, double hi, double h, const char* what) {
    if (!(h > 0.0)) throw ConfigError(std::string(what) + ": spacing must be > 0");
    if (!(lo < hi)) throw ConfigError(std::string(what) + ": empty interval");
    const double ratio = (hi - lo) / h;
    const double rounded = std::round(ratio);
    if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-12 * std::max(1.0, ratio))
        throw ConfigError(std::string(what) +
                          ": spacing does not divide the interval");
    return static_cast<int>(rounded);
}

void format_double(std::string& out, double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

}  // namespace

CrossSectionGrid CrossSectionGrid::make(double lo, double hi, double h) {
    const int cells = checked_cell_count(lo, hi, h, "cross-section grid");
    CrossSectionGrid g;
    g.lo = lo;
    g.hi = hi;
    g.h = h;
    g.n_nodes = cells + 1;
    if (g.n_dofs() < 1)
        throw ConfigError("cross-section grid has no interior node");
    return g;
}

CylinderGrid CylinderGrid::make(double ell, const CrossSectionGrid& cross,
                                double h1) {
    if (!(ell > 0.0)) throw ConfigError("cylinder grid: ell must be > 0");
    const int cells = checked_cell_count(-ell, ell, h1, "cylinder grid (axial)");
    CylinderGrid g;
    g.ell = ell;
    g.cross = cross;
    g.h1 = h1;
    g.n1 = cells + 1;
    if (g.n1 < 3) throw ConfigError("cylinder grid has no interior axial node");
    return g;
}

double CylinderGrid::diameter() const {
    return std::hypot(2.0 * ell, cross.diameter());
}

CrossSectionGrid make_cross_section_grid(double lo, double hi, double h) {
    return CrossSectionGrid::make(lo, hi, h);
}

CylinderGrid make_cylinder_grid(double ell, const CrossSectionGrid& cross,
                                double h1) {
    return CylinderGrid::make(ell, cross, h1);
}

DiscreteFunction::DiscreteFunction(CrossSectionGrid g)
    : grid_(g), values_(static_cast<std::size_t>(g.n_nodes), 0.0) {}

DiscreteFunction::DiscreteFunction(CylinderGrid g)
    : grid_(g), values_(static_cast<std::size_t>(g.n_nodes()), 0.0) {}

int DiscreteFunction::dimension() const { return is_cylinder() ? 2 : 1; }

bool DiscreteFunction::is_cylinder() const {
    return std::holds_alternative<CylinderGrid>(grid_);
}

const CrossSectionGrid& DiscreteFunction::cross_grid() const {
    return std::get<CrossSectionGrid>(grid_);
}

const CylinderGrid& DiscreteFunction::cylinder_grid() const {
    return std::get<CylinderGrid>(grid_);
}

void DiscreteFunction::set_value(int node, double v) {
    bool interior;
    if (is_cylinder()) {
        const auto& g = cylinder_grid();
        interior = g.interior(node / g.cross.n_nodes, node % g.cross.n_nodes);
    } else {
        interior = cross_grid().interior(node);
    }
    values_[node] = interior ? v : 0.0;
}

int DiscreteFunction::n_dofs() const {
    return is_cylinder() ? cylinder_grid().n_dofs() : cross_grid().n_dofs();
}

std::vector<double> DiscreteFunction::dofs() const {
    std::vector<double> d;
    d.reserve(n_dofs());
    if (is_cylinder()) {
        const auto& g = cylinder_grid();
        for (int i1 = 1; i1 < g.n1 - 1; ++i1)
            for (int i2 = 1; i2 < g.cross.n_nodes - 1; ++i2)
                d.push_back(values_[i1 * g.cross.n_nodes + i2]);
    } else {
        const auto& g = cross_grid();
        for (int i = 1; i < g.n_nodes - 1; ++i) d.push_back(values_[i]);
    }
    return d;
}

void DiscreteFunction::set_dofs(const std::vector<double>& d) {
    if (static_cast<int>(d.size()) != n_dofs())
        throw std::domain_error("dof vector size mismatch");
    std::size_t k = 0;
    if (is_cylinder()) {
        const auto& g = cylinder_grid();
        for (int i1 = 1; i1 < g.n1 - 1; ++i1)
            for (int i2 = 1; i2 < g.cross.n_nodes - 1; ++i2)
                values_[i1 * g.cross.n_nodes + i2] = d[k++];
    } else {
        const auto& g = cross_grid();
        for (int i = 1; i < g.n_nodes - 1; ++i) values_[i] = d[k++];
    }
}

double DiscreteFunction::operator()(double x) const {
    if (is_cylinder())
        throw std::domain_error("1D evaluation on a cylinder function");
    const auto& g = cross_grid();
    if (x <= g.lo || x >= g.hi) return 0.0;
    int i = static_cast<int>((x - g.lo) / g.h);
    i = std::clamp(i, 0, g.n_cells() - 1);
    const double t = (x - g.node(i)) / g.h;
    return (1.0 - t) * values_[i] + t * values_[i + 1];
}

double DiscreteFunction::operator()(double x1, double x2) const {
    if (!is_cylinder())
        throw std::domain_error("2D evaluation on a cross-section function");
    const auto& g = cylinder_grid();
    if (x1 <= -g.ell || x1 >= g.ell || x2 <= g.cross.lo || x2 >= g.cross.hi)
        return 0.0;
    int i1 = static_cast<int>((x1 + g.ell) / g.h1);
    i1 = std::clamp(i1, 0, g.n1 - 2);
    int i2 = static_cast<int>((x2 - g.cross.lo) / g.cross.h);
    i2 = std::clamp(i2, 0, g.cross.n_cells() - 1);
    const double t1 = (x1 - g.node1(i1)) / g.h1;
    const double t2 = (x2 - g.cross.node(i2)) / g.cross.h;
    const int n2 = g.cross.n_nodes;
    const double v00 = values_[i1 * n2 + i2], v01 = values_[i1 * n2 + i2 + 1];
    const double v10 = values_[(i1 + 1) * n2 + i2],
                 v11 = values_[(i1 + 1) * n2 + i2 + 1];
    return (1.0 - t1) * ((1.0 - t2) * v00 + t2 * v01) +
           t1 * ((1.0 - t2) * v10 + t2 * v11);
}

namespace {

// Integrates |interp|^p over one clipped 1D cell.
double cell_lp_1d(const DiscreteFunction& u, double a, double b, double p) {
    const auto& xs = gl::nodes(kCellRuleOrder);
    const auto& ws = gl::weights(kCellRuleOrder);
    const double c = 0.5 * (a + b), r = 0.5 * (b - a);
    double acc = 0.0;
    for (std::size_t q = 0; q < xs.size(); ++q)
        acc += ws[q] * r * std::pow(std::abs(u(c + r * xs[q])), p);
    return acc;
}

double cell_lp_2d(const DiscreteFunction& u, double a1, double b1, double a2,
                  double b2, double p) {
    const auto& xs = gl::nodes(kCellRuleOrder);
    const auto& ws = gl::weights(kCellRuleOrder);
    const double c1 = 0.5 * (a1 + b1), r1 = 0.5 * (b1 - a1);
    const double c2 = 0.5 * (a2 + b2), r2 = 0.5 * (b2 - a2);
    double acc = 0.0;
    for (std::size_t q1 = 0; q1 < xs.size(); ++q1)
        for (std::size_t q2 = 0; q2 < xs.size(); ++q2)
            acc += ws[q1] * ws[q2] * r1 * r2 *
                   std::pow(std::abs(u(c1 + r1 * xs[q1], c2 + r2 * xs[q2])), p);
    return acc;
}

}  // namespace

double lp_norm(const DiscreteFunction& u, double p) {
    if (!(p >= 1.0)) throw std::domain_error("lp_norm requires p >= 1");
    double acc = 0.0;
    if (u.is_cylinder()) {
        const auto& g = u.cylinder_grid();
        for (int i1 = 0; i1 < g.n1 - 1; ++i1)
            for (int i2 = 0; i2 < g.cross.n_cells(); ++i2)
                acc += cell_lp_2d(u, g.node1(i1), g.node1(i1 + 1),
                                  g.cross.node(i2), g.cross.node(i2 + 1), p);
    } else {
        const auto& g = u.cross_grid();
        for (int i = 0; i < g.n_cells(); ++i)
            acc += cell_lp_1d(u, g.node(i), g.node(i + 1), p);
    }
    return std::pow(acc, 1.0 / p);
}

double lp_norm(const DiscreteFunction& u, const Window& window, double p) {
    if (!(p >= 1.0)) throw std::domain_error("lp_norm requires p >= 1");
    if (!(window.ell0 > 0.0)) throw std::domain_error("window must be nonempty");
    double acc = 0.0;
    if (u.is_cylinder()) {
        const auto& g = u.cylinder_grid();
        if (window.ell0 > g.ell + 1e-12)
            throw std::domain_error("window exceeds the cylinder length");
        for (int i1 = 0; i1 < g.n1 - 1; ++i1) {
            const double a1 = std::max(g.node1(i1), -window.ell0);
            const double b1 = std::min(g.node1(i1 + 1), window.ell0);
            if (b1 <= a1) continue;
            for (int i2 = 0; i2 < g.cross.n_cells(); ++i2)
                acc += cell_lp_2d(u, a1, b1, g.cross.node(i2),
                                  g.cross.node(i2 + 1), p);
        }
    } else {
        const auto& g = u.cross_grid();
        if (-window.ell0 < g.lo - 1e-12 || window.ell0 > g.hi + 1e-12)
            throw std::domain_error("window exceeds the cross-section");
        for (int i = 0; i < g.n_cells(); ++i) {
            const double a = std::max(g.node(i), -window.ell0);
            const double b = std::min(g.node(i + 1), window.ell0);
            if (b <= a) continue;
            acc += cell_lp_1d(u, a, b, p);
        }
    }
    return std::pow(acc, 1.0 / p);
}

double l2_inner(const DiscreteFunction& a, const DiscreteFunction& b) {
    if (!(a.grid() == b.grid())) throw std::domain_error("grid mismatch");
    double acc = 0.0;
    if (a.is_cylinder()) {
        const auto& g = a.cylinder_grid();
        const int n2 = g.cross.n_nodes;
        // Exact tensor P1 mass: 1D local mass (h/6)[2 1; 1 2] per axis.
        const double m1d = g.h1 / 6.0, m2d = g.cross.h / 6.0;
        for (int i1 = 0; i1 < g.n1 - 1; ++i1)
            for (int i2 = 0; i2 < g.cross.n_cells(); ++i2) {
                const int base = i1 * n2 + i2;
                const double av[4] = {a.value(base), a.value(base + 1),
                                      a.value(base + n2), a.value(base + n2 + 1)};
                const double bv[4] = {b.value(base), b.value(base + 1),
                                      b.value(base + n2), b.value(base + n2 + 1)};
                // tensor of [2 1; 1 2]/6 in each direction
                for (int r = 0; r < 4; ++r)
                    for (int c = 0; c < 4; ++c) {
                        const int r1 = r >> 1, r2 = r & 1, c1 = c >> 1, c2 = c & 1;
                        const double w = (r1 == c1 ? 2.0 : 1.0) * m1d *
                                         (r2 == c2 ? 2.0 : 1.0) * m2d;
                        acc += w * av[r] * bv[c];
                    }
            }
    } else {
        const auto& g = a.cross_grid();
        const double m = g.h / 6.0;
        for (int i = 0; i < g.n_cells(); ++i) {
            acc += m * (2.0 * a.value(i) * b.value(i) +
                        a.value(i) * b.value(i + 1) + a.value(i + 1) * b.value(i) +
                        2.0 * a.value(i + 1) * b.value(i + 1));
        }
    }
    return acc;
}

std::vector<double> apply_mass(const DiscreteFunction& w) {
    std::vector<double> out_nodes(w.n_nodes(), 0.0);
    if (w.is_cylinder()) {
        const auto& g = w.cylinder_grid();
        const int n2 = g.cross.n_nodes;
        const double m1d = g.h1 / 6.0, m2d = g.cross.h / 6.0;
        for (int i1 = 0; i1 < g.n1 - 1; ++i1)
            for (int i2 = 0; i2 < g.cross.n_cells(); ++i2) {
                const int base = i1 * n2 + i2;
                const int nd[4] = {base, base + 1, base + n2, base + n2 + 1};
                for (int r = 0; r < 4; ++r) {
                    double acc = 0.0;
                    for (int c = 0; c < 4; ++c) {
                        const int r1 = r >> 1, r2 = r & 1, c1 = c >> 1, c2 = c & 1;
                        acc += (r1 == c1 ? 2.0 : 1.0) * m1d *
                               (r2 == c2 ? 2.0 : 1.0) * m2d * w.value(nd[c]);
                    }
                    out_nodes[nd[r]] += acc;
                }
            }
        std::vector<double> out;
        out.reserve(g.n_dofs());
        for (int i1 = 1; i1 < g.n1 - 1; ++i1)
            for (int i2 = 1; i2 < n2 - 1; ++i2)
                out.push_back(out_nodes[i1 * n2 + i2]);
        return out;
    }
    const auto& g = w.cross_grid();
    const double m = g.h / 6.0;
    for (int i = 0; i < g.n_cells(); ++i) {
        out_nodes[i] += m * (2.0 * w.value(i) + w.value(i + 1));
        out_nodes[i + 1] += m * (w.value(i) + 2.0 * w.value(i + 1));
    }
    return {out_nodes.begin() + 1, out_nodes.end() - 1};
}

DiscreteFunction subtract(const DiscreteFunction& a, const DiscreteFunction& b) {
    if (!(a.grid() == b.grid())) throw std::domain_error("grid mismatch");
    DiscreteFunction out = a;
    std::vector<double> d = a.dofs();
    const std::vector<double> db = b.dofs();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] -= db[i];
    out.set_dofs(d);
    return out;
}

DiscreteFunction extend_cross_section(const DiscreteFunction& u_inf,
                                      const CylinderGrid& grid) {
    if (u_inf.is_cylinder())
        throw std::domain_error("extend_cross_section expects a cross-section function");
    if (!(u_inf.cross_grid() == grid.cross))
        throw std::domain_error("cross-section mismatch");
    DiscreteFunction out(grid);
    const int n2 = grid.cross.n_nodes;
    for (int i1 = 1; i1 < grid.n1 - 1; ++i1)
        for (int i2 = 1; i2 < n2 - 1; ++i2)
            out.set_value(i1 * n2 + i2, u_inf.value(i2));
    return out;
}

ForcingSpec ForcingSpec::zero() {
    ForcingSpec f;
    f.family = Family::Zero;
    return f;
}

ForcingSpec ForcingSpec::constant(double c) {
    ForcingSpec f;
    f.family = Family::Constant;
    f.value = c;
    return f;
}

ForcingSpec ForcingSpec::bump(double r) {
    if (!(r > 0.0)) throw ConfigError("bump radius must be > 0");
    ForcingSpec f;
    f.family = Family::Bump;
    f.radius = r;
    return f;
}

ForcingSpec ForcingSpec::tabulated(std::vector<double> nodal) {
    ForcingSpec f;
    f.family = Family::Tabulated;
    f.table = std::move(nodal);
    return f;
}

ForcingSpec ForcingSpec::custom(std::function<double(double, double)> fn) {
    ForcingSpec f;
    f.family = Family::Custom;
    f.fn = std::move(fn);
    return f;
}

double ForcingSpec::eval(double x2, double t, const CrossSectionGrid& cross) const {
    switch (family) {
        case Family::Zero:
            return 0.0;
        case Family::Constant:
            return value;
        case Family::Bump: {
            const double w = 1.0 - (x2 / radius) * (x2 / radius);
            return w > 0.0 ? w * w : 0.0;
        }
        case Family::Tabulated: {
            if (static_cast<int>(table.size()) != cross.n_nodes)
                throw ConfigError("tabulated forcing: one value per node required");
            const double idx = (x2 - cross.lo) / cross.h;
            const int i = static_cast<int>(std::round(idx));
            if (std::abs(idx - i) > 1e-9)
                throw ConfigError("tabulated forcing sampled off-node");
            return table[std::clamp(i, 0, cross.n_nodes - 1)];
        }
        case Family::Custom:
            return fn(x2, t);
    }
    throw ConfigError("unknown forcing family");
}

DiscreteFunction sample_forcing(const ForcingSpec& spec,
                                const CrossSectionGrid& grid, double t) {
    DiscreteFunction f(grid);
    for (int i = 1; i < grid.n_nodes - 1; ++i)
        f.set_value(i, spec.eval(grid.node(i), t, grid));
    return f;
}

DiscreteFunction sample_forcing(const ForcingSpec& spec,
                                const CylinderGrid& grid, double t) {
    DiscreteFunction f(grid);
    const int n2 = grid.cross.n_nodes;
    for (int i1 = 1; i1 < grid.n1 - 1; ++i1)
        for (int i2 = 1; i2 < n2 - 1; ++i2)
            f.set_value(i1 * n2 + i2,
                        spec.eval(grid.cross.node(i2), t, grid.cross));
    return f;
}

void write_csv(const DiscreteFunction& u, std::ostream& out) {
    out << to_csv(u);
}

std::string to_csv(const DiscreteFunction& u) {
    std::string s;
    if (u.is_cylinder()) {
        const auto& g = u.cylinder_grid();
        s += "x1,x2,value\n";
        const int n2 = g.cross.n_nodes;
        for (int i1 = 0; i1 < g.n1; ++i1)
            for (int i2 = 0; i2 < n2; ++i2) {
                format_double(s, g.node1(i1));
                s += ',';
                format_double(s, g.cross.node(i2));
                s += ',';
                format_double(s, u.value(i1 * n2 + i2));
                s += '\n';
            }
    } else {
        const auto& g = u.cross_grid();
        s += "x2,value\n";
        for (int i = 0; i < g.n_nodes; ++i) {
            format_double(s, g.node(i));
            s += ',';
            format_double(s, u.value(i));
            s += '\n';
        }
    }
    return s;
}

DiscreteFunction read_csv(const Grid& grid, std::istream& in) {
    DiscreteFunction u = std::holds_alternative<CylinderGrid>(grid)
                             ? DiscreteFunction(std::get<CylinderGrid>(grid))
                             : DiscreteFunction(std::get<CrossSectionGrid>(grid));
    std::string line;
    std::getline(in, line);  // header
    int node = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (node >= u.n_nodes()) throw ConfigError("csv has too many rows");
        const auto pos = line.rfind(',');
        if (pos == std::string::npos) throw ConfigError("malformed csv row");
        u.set_value(node++, std::stod(line.substr(pos + 1)));
    }
    if (node != u.n_nodes()) throw ConfigError("csv row count mismatch");
    return u;
}

}  // namespace fraccyl

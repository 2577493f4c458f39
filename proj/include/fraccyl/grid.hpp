#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace fraccyl {

/// Raised by builders and config loaders on invalid setups.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Uniform 1D grid on omega = (lo, hi). Boundary nodes carry no dof.
struct CrossSectionGrid {
    double lo = -1.0;
    double hi = 1.0;
    double h = 0.25;
    int n_nodes = 9;

    static CrossSectionGrid make(double lo, double hi, double h);

    int n_cells() const { return n_nodes - 1; }
    int n_dofs() const { return n_nodes - 2; }
    double node(int i) const { return lo + i * h; }
    bool interior(int i) const { return i > 0 && i < n_nodes - 1; }
    double diameter() const { return hi - lo; }

    bool operator==(const CrossSectionGrid& o) const {
        return lo == o.lo && hi == o.hi && h == o.h && n_nodes == o.n_nodes;
    }
};

/// Tensor grid on the cylinder (-ell, ell) x omega. Node index is
/// i1 * cross.n_nodes + i2 with the axial index outermost.
struct CylinderGrid {
    double ell = 2.0;
    CrossSectionGrid cross;
    double h1 = 0.25;
    int n1 = 17;

    static CylinderGrid make(double ell, const CrossSectionGrid& cross,
                             double h1);

    int n_nodes() const { return n1 * cross.n_nodes; }
    int n_cells() const { return (n1 - 1) * cross.n_cells(); }
    int n_dofs() const { return (n1 - 2) * cross.n_dofs(); }
    double node1(int i1) const { return -ell + i1 * h1; }
    bool interior(int i1, int i2) const {
        return i1 > 0 && i1 < n1 - 1 && cross.interior(i2);
    }
    double diameter() const;

    bool operator==(const CylinderGrid& o) const {
        return ell == o.ell && cross == o.cross && h1 == o.h1 && n1 == o.n1;
    }
};

using Grid = std::variant<CrossSectionGrid, CylinderGrid>;

/// Axial window (-ell0, ell0) x omega over which errors are measured.
struct Window {
    double ell0;
};

/// Nodal values of a piecewise-multilinear function, identically zero on
/// the Dirichlet complement. Evaluation is defined on all of R^N
/// (interpolation inside, exact zero outside).
class DiscreteFunction {
public:
    DiscreteFunction() = default;
    explicit DiscreteFunction(CrossSectionGrid g);
    explicit DiscreteFunction(CylinderGrid g);

    const Grid& grid() const { return grid_; }
    int dimension() const;
    const CrossSectionGrid& cross_grid() const;
    const CylinderGrid& cylinder_grid() const;
    bool is_cylinder() const;

    const std::vector<double>& values() const { return values_; }
    double value(int node) const { return values_[node]; }
    /// Sets a nodal value; boundary nodes stay pinned at zero.
    void set_value(int node, double v);

    int n_nodes() const { return static_cast<int>(values_.size()); }
    int n_dofs() const;

    /// Gather interior nodal values into a dof vector (and back).
    std::vector<double> dofs() const;
    void set_dofs(const std::vector<double>& d);

    /// Point evaluation with zero extension outside the open domain.
    double operator()(double x) const;
    double operator()(double x1, double x2) const;

private:
    Grid grid_;
    std::vector<double> values_;
};

CrossSectionGrid make_cross_section_grid(double lo, double hi, double h);
CylinderGrid make_cylinder_grid(double ell, const CrossSectionGrid& cross,
                                double h1);

/// ( integral over the window of |u|^p )^{1/p}, composite Gauss-Legendre of
/// order kCellRuleOrder per cell, cells clipped to the window. The window
/// constrains the axial coordinate (the only coordinate for 1D grids).
double lp_norm(const DiscreteFunction& u, double p);
double lp_norm(const DiscreteFunction& u, const Window& window, double p);

/// L2 inner product of two functions on the same grid (consistent mass).
double l2_inner(const DiscreteFunction& a, const DiscreteFunction& b);
inline double l2_norm(const DiscreteFunction& u) {
    return std::sqrt(l2_inner(u, u));
}

/// Nodal difference a - b (same grid required).
DiscreteFunction subtract(const DiscreteFunction& a, const DiscreteFunction& b);

/// Consistent-mass application (M w)_i = integral of w v_i, indexed by dofs.
std::vector<double> apply_mass(const DiscreteFunction& w);

/// Views a cross-section function as a function on the cylinder, constant
/// in x1 across interior axial nodes, zero on the boundary ring.
DiscreteFunction extend_cross_section(const DiscreteFunction& u_inf,
                                      const CylinderGrid& grid);

/// Forcing / initial-datum families. All profiles depend on the
/// cross-section coordinate only; `Custom` may also depend on time.
struct ForcingSpec {
    enum class Family { Zero, Constant, Bump, Tabulated, Custom };

    Family family = Family::Constant;
    double value = 1.0;   // Constant
    double radius = 1.0;  // Bump: (1 - |x2/r|^2)_+^2
    std::vector<double> table;  // Tabulated: one value per cross-section node
    std::function<double(double, double)> fn;  // Custom: fn(x2, t)

    static ForcingSpec zero();
    static ForcingSpec constant(double c);
    static ForcingSpec bump(double r);
    static ForcingSpec tabulated(std::vector<double> nodal);
    static ForcingSpec custom(std::function<double(double, double)> f);

    double eval(double x2, double t, const CrossSectionGrid& cross) const;
    bool time_dependent() const { return family == Family::Custom; }
};

DiscreteFunction sample_forcing(const ForcingSpec& spec,
                                const CrossSectionGrid& grid, double t = 0.0);
DiscreteFunction sample_forcing(const ForcingSpec& spec,
                                const CylinderGrid& grid, double t = 0.0);

/// CSV with header `x1,x2,value` (cylinder) or `x2,value` (cross-section),
/// rows in increasing node index. Shortest round-trip float formatting.
void write_csv(const DiscreteFunction& u, std::ostream& out);
std::string to_csv(const DiscreteFunction& u);
DiscreteFunction read_csv(const Grid& grid, std::istream& in);

}  // namespace fraccyl

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "fraccyl/constants.hpp"
#include "fraccyl/grid.hpp"
#include "fraccyl/quadrature.hpp"

namespace fraccyl {

/// phi_p(r) = |r|^{p-2} r, with phi_p(0) = 0.
double phi_p(double r, double p);

/// Integral over {|y - x| > R} of |x-y|^{-N-sp} dy = sigma_N R^{-sp}/(sp).
/// Independent of the base point by isotropy.
double tail_integral(double R, const FractionalParams& params);

/// Decomposition of the Gagliardo p-energy and the load term.
/// `interaction_part` collects everything evaluated by explicit quadrature
/// (the Omega x Omega pair sum plus the exterior strip out to tail_radius);
/// `tail_part` is the analytic contribution beyond tail_radius.
struct EnergyReport {
    double seminorm_p = 0.0;
    double interaction_part = 0.0;
    double tail_part = 0.0;
    double load = 0.0;

    std::string to_json() const;
    std::string to_kv_text() const;
};

/// Precomputed kernel quadrature for one (grid, params, quad) triple.
/// All evaluations are bitwise deterministic for any thread count
/// (fixed-order block reduction).
class NonlocalAssembler {
public:
    NonlocalAssembler(const CrossSectionGrid& grid, FractionalParams params,
                      QuadratureSpec quad);
    NonlocalAssembler(const CylinderGrid& grid, FractionalParams params,
                      QuadratureSpec quad);
    ~NonlocalAssembler();
    NonlocalAssembler(NonlocalAssembler&&) noexcept;
    NonlocalAssembler& operator=(NonlocalAssembler&&) noexcept;

    const FractionalParams& params() const;
    const QuadratureSpec& quad() const;  // resolved values
    const Grid& grid() const;
    int n_dofs() const;

    struct SeminormParts {
        double interaction = 0.0;  // pair sum + exterior strip
        double tail = 0.0;         // analytic beyond tail_radius
        double total() const { return interaction + tail; }
    };

    SeminormParts seminorm_parts(const DiscreteFunction& u, int threads = 1) const;
    double seminorm(const DiscreteFunction& u, int threads = 1) const;

    /// d(seminorm)/d(dof); exact derivative of the quadrature rule above.
    std::vector<double> seminorm_gradient(const DiscreteFunction& u,
                                          int threads = 1) const;
    /// Both at once (one pass).
    std::pair<double, std::vector<double>> seminorm_and_gradient(
        const DiscreteFunction& u, int threads = 1) const;

    /// load_i = integral of f * v_i (cell rule of order kCellRuleOrder).
    std::vector<double> load_vector(const DiscreteFunction& f) const;

    void check_function(const DiscreteFunction& u) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Quadrature approximation of [u]^p_{s,p,R^N} with zero extension.
double seminorm_p(const DiscreteFunction& u, const FractionalParams& params,
                  const QuadratureSpec& quad, int threads = 1);

/// E(u) = (C/(2p)) [u]^p - integral of f u.
double energy(const DiscreteFunction& u, const DiscreteFunction& f,
              const FractionalParams& params, const QuadratureSpec& quad,
              int threads = 1);

/// Exact derivative of `energy` with respect to the dof values.
std::vector<double> energy_gradient(const DiscreteFunction& u,
                                    const DiscreteFunction& f,
                                    const FractionalParams& params,
                                    const QuadratureSpec& quad,
                                    int threads = 1);

EnergyReport energy_report(const DiscreteFunction& u, const DiscreteFunction& f,
                           const FractionalParams& params,
                           const QuadratureSpec& quad, int threads = 1);

}  // namespace fraccyl

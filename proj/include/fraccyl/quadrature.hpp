#pragma once

#include <stdexcept>
#include <vector>

namespace fraccyl {

/// Quadrature controls for the singular-kernel double integrals.
///
/// Cell pairs whose closures touch are subdivided dyadically toward the
/// shared boundary (`near_split` levels); separated pairs use `far_order`
/// Gauss points per axis; pairs whose centers are farther apart than
/// `pair_cutoff` use a midpoint rule. The complement integral is evaluated
/// explicitly out to `tail_radius` and analytically beyond.
struct QuadratureSpec {
    int near_split = 4;
    int far_order = 3;
    double tail_radius = 0.0;   // 0 = auto: max(8, 2 * domain diameter)
    double pair_cutoff = 0.0;   // 0 = auto: 8 * max cell spacing

    /// Resolve the auto defaults for a concrete domain.
    QuadratureSpec resolved(double domain_diameter, double max_spacing) const;

    /// Invariants: near_split >= 2, far_order >= 2, tail_radius >= diameter.
    void validate(double domain_diameter) const;
};

namespace gl {

/// Gauss-Legendre nodes/weights on [-1, 1]; cached per order.
const std::vector<double>& nodes(int n);
const std::vector<double>& weights(int n);

}  // namespace gl

/// Fixed per-cell rule order for L^p norms, load vectors, and mass terms
/// (part of the reproducibility contract).
inline constexpr int kCellRuleOrder = 3;

}  // namespace fraccyl

#pragma once

#include <stdexcept>

namespace fraccyl {

struct QuadratureSpec;

/// Gamma function on the positive half-line. Relative accuracy ~1e-14
/// on [0.05, 50] (Lanczos approximation, g = 7, 9 terms).
double gamma_fn(double x);

/// Kernel constant of the fractional p-Laplacian,
///   C = s p 2^{2s-1} Gamma((N+ps)/2) / (2 pi^{(N-1)/2} Gamma(1-s) Gamma((p+1)/2)).
double c_nsp(int dim, double s, double p);

/// theta_{N,p} = integral over R of (1+z^2)^{-(N+sp)/2} dz
///             = sqrt(pi) Gamma((N+sp-1)/2) / Gamma((N+sp)/2).
double theta_np(int dim, double s, double p);

/// |c_nsp(N,s,p) * theta_np(N,s,p) - c_nsp(N-1,s,p)|. Requires dim >= 2.
double reduction_residual(int dim, double s, double p);

/// Numerical quadrature of integral over R of
/// (1 + |x-z|^2/a^2)^{-(N+sp)/2} dz, which equals a * theta_np(N,s,p).
double scaled_fiber_integral(double a, double x, int dim, double s, double p,
                             const QuadratureSpec& quad);

/// Direct quadrature of the theta integrand (independent of the closed form);
/// used as the oracle for theta_np.
double theta_np_quadrature(int dim, double s, double p);

/// Immutable problem parameters: dimension N, exponents s and p, and the
/// cached kernel constant. Rebuild instead of mutating.
class FractionalParams {
public:
    static FractionalParams make(int dim, double s, double p);

    /// Same parameter validation, but with an explicitly supplied kernel
    /// constant. Intended for dimensional-reduction experiments where the
    /// constant C_{N,s,p} * theta_{N,p} stands in for C_{N-1,s,p}.
    static FractionalParams with_kernel_constant(int dim, double s, double p,
                                                 double c_kernel);

    int dim() const { return dim_; }
    double s() const { return s_; }
    double p() const { return p_; }
    double c_kernel() const { return c_kernel_; }
    double p_conjugate() const { return p_ / (p_ - 1.0); }
    /// Kernel exponent N + s p.
    double kernel_power() const { return dim_ + s_ * p_; }

private:
    FractionalParams(int dim, double s, double p, double c)
        : dim_(dim), s_(s), p_(p), c_kernel_(c) {}

    int dim_;
    double s_;
    double p_;
    double c_kernel_;
};

}  // namespace fraccyl

#include "fraccyl/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <utility>

namespace fraccyl {

QuadratureSpec QuadratureSpec::resolved(double domain_diameter,
                                        double max_spacing) const {
    QuadratureSpec q = *this;
    if (q.tail_radius <= 0.0)
        q.tail_radius = std::max(8.0, 2.0 * domain_diameter);
    if (q.pair_cutoff <= 0.0) q.pair_cutoff = 8.0 * max_spacing;
    q.validate(domain_diameter);
    return q;
}

void QuadratureSpec::validate(double domain_diameter) const {
    if (near_split < 2)
        throw std::invalid_argument("QuadratureSpec: near_split must be >= 2");
    if (far_order < 2)
        throw std::invalid_argument("QuadratureSpec: far_order must be >= 2");
    if (tail_radius > 0.0 && tail_radius < domain_diameter)
        throw std::invalid_argument(
            "QuadratureSpec: tail_radius must cover the domain diameter");
    if (pair_cutoff < 0.0)
        throw std::invalid_argument("QuadratureSpec: pair_cutoff must be >= 0");
}

namespace gl {
namespace {

// Newton iteration on Legendre polynomials; nodes accurate to ~1e-15.
std::pair<std::vector<double>, std::vector<double>> compute(int n) {
    std::vector<double> x(n), w(n);
    for (int i = 0; i < n; ++i) {
        double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = t;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (t * p1 - p0) / (t * t - 1.0);
            double dt = p1 / dp;
            t -= dt;
            if (std::abs(dt) < 1e-16) break;
        }
        x[n - 1 - i] = t;
        w[n - 1 - i] = 2.0 / ((1.0 - t * t) * dp * dp);
    }
    return {std::move(x), std::move(w)};
}

std::map<int, std::pair<std::vector<double>, std::vector<double>>> cache;
std::mutex cache_mutex;

const std::pair<std::vector<double>, std::vector<double>>& get(int n) {
    if (n < 1) throw std::invalid_argument("gauss order must be >= 1");
    std::lock_guard<std::mutex> lock(cache_mutex);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, compute(n)).first;
    return it->second;
}

}  // namespace

const std::vector<double>& nodes(int n) { return get(n).first; }
const std::vector<double>& weights(int n) { return get(n).second; }

}  // namespace gl
}  // namespace fraccyl

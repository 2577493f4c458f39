#include "fraccyl/energy.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstring>
#include <map>
#include <sstream>
#include <thread>

namespace fraccyl {

namespace {

enum class PCase { Two, TwoHalf, Three, Four, Generic };

PCase classify_p(double p) {
    if (p == 2.0) return PCase::Two;
    if (p == 2.5) return PCase::TwoHalf;
    if (p == 3.0) return PCase::Three;
    if (p == 4.0) return PCase::Four;
    return PCase::Generic;
}

inline double pow_abs(double d, double p, PCase pc) {
    switch (pc) {
        case PCase::Two: return d * d;
        case PCase::TwoHalf: return d * d * std::sqrt(std::abs(d));
        case PCase::Three: { const double a = std::abs(d); return a * a * a; }
        case PCase::Four: { const double d2 = d * d; return d2 * d2; }
        case PCase::Generic: return std::pow(std::abs(d), p);
    }
    return 0.0;
}

// |d|^{p-2} d with the removable singularity at d = 0.
inline double phi_impl(double d, double p, PCase pc) {
    switch (pc) {
        case PCase::Two: return d;
        case PCase::TwoHalf: return d * std::sqrt(std::abs(d));
        case PCase::Three: return d * std::abs(d);
        case PCase::Four: return d * d * d;
        case PCase::Generic:
            return d == 0.0 ? 0.0 : std::pow(std::abs(d), p - 2.0) * d;
    }
    return 0.0;
}

struct Box {
    double lo[2];
    double len[2];
};

struct TablePoint {
    std::array<double, 4> basis_a;
    std::array<double, 4> basis_b;
    double wk;
};

// Kernel quadrature table generator for a uniform lattice of N-dimensional
// cells (h1 x h2), kernel |x-y|^{-beta}. Shared by the cylinder assembly and
// by the fiber-reduced cross-section assembly (which reduces an auxiliary
// 2D lattice).
struct TableGen {
    int N;
    double h1, h2;
    double beta;
    QuadratureSpec quad;

    double kernel(double dx1, double dx2) const {
        return std::pow(dx1 * dx1 + dx2 * dx2, -0.5 * beta);
    }

    std::array<double, 4> basis_at(const double* loc) const {
        if (N == 1) return {1.0 - loc[0], loc[0], 0.0, 0.0};
        const double t1 = loc[0], t2 = loc[1];
        return {(1 - t1) * (1 - t2), (1 - t1) * t2, t1 * (1 - t2), t1 * t2};
    }

    void emit_far(const Box& A, const Box& B, int d1, int d2,
                  std::vector<TablePoint>& out) const {
        const int eg = quad.far_order;
        const auto& gx = gl::nodes(eg);
        const auto& gw = gl::weights(eg);
        const int npts = N == 1 ? eg : eg * eg;

        auto local_points = [&](const Box& box,
                                std::vector<std::array<double, 2>>& loc,
                                std::vector<double>& w) {
            loc.resize(npts);
            w.resize(npts);
            int k = 0;
            if (N == 1) {
                for (int q = 0; q < eg; ++q) {
                    loc[k] = {box.lo[0] + box.len[0] * 0.5 * (1.0 + gx[q]), 0.0};
                    w[k++] = 0.5 * box.len[0] * h1 * gw[q];
                }
            } else {
                for (int q1 = 0; q1 < eg; ++q1)
                    for (int q2 = 0; q2 < eg; ++q2) {
                        loc[k] = {box.lo[0] + box.len[0] * 0.5 * (1.0 + gx[q1]),
                                  box.lo[1] + box.len[1] * 0.5 * (1.0 + gx[q2])};
                        w[k++] = 0.25 * box.len[0] * h1 * gw[q1] * box.len[1] *
                                 h2 * gw[q2];
                    }
            }
        };

        std::vector<std::array<double, 2>> la, lb;
        std::vector<double> wa, wb;
        local_points(A, la, wa);
        local_points(B, lb, wb);
        for (int qa = 0; qa < npts; ++qa)
            for (int qb = 0; qb < npts; ++qb) {
                const double dx1 = (la[qa][0] - lb[qb][0] - d1) * h1;
                const double dx2 =
                    N == 1 ? 0.0 : (la[qa][1] - lb[qb][1] - d2) * h2;
                out.push_back(TablePoint{basis_at(la[qa].data()),
                                         basis_at(lb[qb].data()),
                                         wa[qa] * wb[qb] * kernel(dx1, dx2)});
            }
    }

    void near_recursion(const Box& A, const Box& B, int d1, int d2, int level,
                        std::vector<TablePoint>& out) const {
        // Per-axis closure overlap; refine only toward contact of positive
        // measure (a shared facet; in 1D the facet is the contact point).
        // Point contact in 2D keeps the plain rule; its singular mass
        // shrinks geometrically with level.
        int positive_overlap = 0;
        bool separated = false;
        for (int ax = 0; ax < N; ++ax) {
            const double shift = ax == 0 ? d1 : d2;
            const double alo = A.lo[ax], ahi = A.lo[ax] + A.len[ax];
            const double blo = B.lo[ax] + shift, bhi = blo + B.len[ax];
            const double overlap = std::min(ahi, bhi) - std::max(alo, blo);
            if (overlap < -1e-12) separated = true;
            if (overlap > 1e-12) ++positive_overlap;
        }
        const bool refine = !separated && (N == 1 || positive_overlap == N - 1);
        if (!refine || level == 0) {
            emit_far(A, B, d1, d2, out);
            return;
        }
        const int halves = 1 << N;
        auto sub = [&](const Box& box, int k) {
            Box s = box;
            for (int ax = 0; ax < N; ++ax) {
                s.len[ax] = 0.5 * box.len[ax];
                if (k & (1 << ax)) s.lo[ax] = box.lo[ax] + s.len[ax];
            }
            return s;
        };
        for (int ka = 0; ka < halves; ++ka)
            for (int kb = 0; kb < halves; ++kb)
                near_recursion(sub(A, ka), sub(B, kb), d1, d2, level - 1, out);
    }

    std::vector<TablePoint> near_table(int d1, int d2) const {
        const Box unit = {{0.0, 0.0}, {1.0, N == 1 ? 0.0 : 1.0}};
        std::vector<TablePoint> pts;
        near_recursion(unit, unit, d1, d2, quad.near_split, pts);
        return pts;
    }

    // far-rule weight matrix wk[qa][qb] against the tensor Gauss points of
    // order far_order per axis (q1-major ordering in 2D)
    std::vector<double> far_wk(int d1, int d2) const {
        const int fo = quad.far_order;
        const int nq = N == 1 ? fo : fo * fo;
        const auto& gx = gl::nodes(fo);
        const auto& gw = gl::weights(fo);
        std::vector<std::array<double, 2>> loc;
        std::vector<double> w;
        if (N == 1) {
            for (int q = 0; q < fo; ++q) {
                loc.push_back({0.5 * (1.0 + gx[q]), 0.0});
                w.push_back(0.5 * h1 * gw[q]);
            }
        } else {
            for (int q1 = 0; q1 < fo; ++q1)
                for (int q2 = 0; q2 < fo; ++q2) {
                    loc.push_back({0.5 * (1.0 + gx[q1]), 0.5 * (1.0 + gx[q2])});
                    w.push_back(0.25 * h1 * h2 * gw[q1] * gw[q2]);
                }
        }
        std::vector<double> wk(static_cast<std::size_t>(nq) * nq);
        for (int qa = 0; qa < nq; ++qa)
            for (int qb = 0; qb < nq; ++qb) {
                const double dx1 = (loc[qa][0] - loc[qb][0] - d1) * h1;
                const double dx2 =
                    N == 1 ? 0.0 : (loc[qa][1] - loc[qb][1] - d2) * h2;
                wk[qa * nq + qb] = w[qa] * w[qb] * kernel(dx1, dx2);
            }
        return wk;
    }

    // kernel pair-mass integral over two cells at the given offset
    double pair_mass(int d1, int d2) const {
        const int n = 5;
        const auto& gx = gl::nodes(n);
        const auto& gw = gl::weights(n);
        double acc = 0.0;
        if (N == 1) {
            for (int qa = 0; qa < n; ++qa)
                for (int qb = 0; qb < n; ++qb) {
                    const double dx1 = (0.5 * (gx[qa] - gx[qb]) - d1) * h1;
                    acc += 0.25 * gw[qa] * gw[qb] * h1 * h1 * kernel(dx1, 0.0);
                }
            return acc;
        }
        for (int qa1 = 0; qa1 < n; ++qa1)
            for (int qa2 = 0; qa2 < n; ++qa2)
                for (int qb1 = 0; qb1 < n; ++qb1)
                    for (int qb2 = 0; qb2 < n; ++qb2) {
                        const double dx1 =
                            (0.5 * (gx[qa1] - gx[qb1]) - d1) * h1;
                        const double dx2 =
                            (0.5 * (gx[qa2] - gx[qb2]) - d2) * h2;
                        acc += 0.0625 * gw[qa1] * gw[qa2] * gw[qb1] * gw[qb2] *
                               h1 * h1 * h2 * h2 * kernel(dx1, dx2);
                    }
        return acc;
    }

    // Polar same-cell rule for a 2D cell: nodes (cos, sin, weight*A(theta))
    // for the integral of |grad u . dir|^p against the overlap-weighted
    // radial kernel moments; q = p - sp must be positive.
    void diag_polar(double q, std::vector<double>& ct, std::vector<double>& st,
                    std::vector<double>& wA) const {
        const double tstar = std::atan2(h2, h1);
        const std::array<double, 4> brk = {0.0, tstar, M_PI - tstar, M_PI};
        const auto& gx = gl::nodes(24);
        const auto& gw = gl::weights(24);
        for (int arc = 0; arc < 3; ++arc) {
            const double c0 = 0.5 * (brk[arc] + brk[arc + 1]);
            const double r0 = 0.5 * (brk[arc + 1] - brk[arc]);
            for (std::size_t k = 0; k < gx.size(); ++k) {
                const double th = c0 + r0 * gx[k];
                const double c = std::cos(th), s = std::sin(th);
                const double ac = std::abs(c), as = std::abs(s);
                const double R = std::min(ac > 1e-300 ? h1 / ac : 1e300,
                                          as > 1e-300 ? h2 / as : 1e300);
                const double A =
                    h1 * h2 * std::pow(R, q) / q -
                    (h1 * as + h2 * ac) * std::pow(R, q + 1.0) / (q + 1.0) +
                    ac * as * std::pow(R, q + 2.0) / (q + 2.0);
                ct.push_back(c);
                st.push_back(s);
                wA.push_back(2.0 * gw[k] * r0 * A);
            }
        }
    }
};

}  // namespace

double phi_p(double r, double p) {
    if (!(p >= 2.0)) throw std::domain_error("phi_p requires p >= 2");
    return phi_impl(r, p, classify_p(p));
}

double tail_integral(double R, const FractionalParams& params) {
    if (!(R > 0.0)) throw std::domain_error("tail_integral requires R > 0");
    const double sp = params.s() * params.p();
    const double sigma = params.dim() == 1 ? 2.0 : 2.0 * M_PI;
    return sigma * std::pow(R, -sp) / sp;
}

struct NonlocalAssembler::Impl {
    Grid grid_v;
    FractionalParams par;
    QuadratureSpec quad;  // resolved
    int N = 1;
    PCase pcase = PCase::Two;

    // cell layout
    int m1 = 0, m2 = 1;     // cells per axis (m2 = 1 in 1D)
    int nn2 = 1;            // nodes along axis 2 (1 in 1D)
    double h1 = 0, h2 = 0;  // spacings (h2 unused in 1D)
    double lo1 = 0, lo2 = 0;
    int n_cells = 0;
    int n_nodes = 0;
    std::vector<std::array<int, 4>> cell_nodes;
    std::vector<int> cell_c1, cell_c2;
    std::vector<int> node_dof;  // -1 for boundary nodes
    int n_dofs = 0;

    // far rule (same local points for every cell)
    int nq = 0;
    std::vector<std::array<double, 4>> far_basis;
    std::array<double, 4> mid_basis{};

    struct FarOffset {
        int d1, d2;
        std::vector<double> wk;  // nq * nq
    };
    std::vector<FarOffset> far_offsets;
    struct NearOffset {
        int d1, d2;
        std::vector<TablePoint> pts;
    };
    std::vector<NearOffset> near_offsets;
    std::vector<double> midW;   // offset -> far-field pair weight
    std::vector<int> classmap;  // 2D: 0 mid, k>0 far idx+1, k<0 near idx
    // 1D (fiber-reduced): per-offset triple dispatch
    std::vector<int> near_idx_1d, far_idx_1d;

    // same-cell rule
    std::vector<double> diag_ct, diag_st, diag_wA;  // 2D polar
    double diag_coeff_1d = 0.0;          // reduced polar coefficient
    std::vector<TablePoint> diag_pts;    // reduced near (axial neighbors)
    std::vector<double> diag_wk;         // reduced far (axial, same x2 cell)

    // exterior (complement) contributions at cell-rule points
    struct ExtPoint {
        int cell;
        std::array<double, 4> basis;
        double w_strip;
        double w_tail;
    };
    std::vector<ExtPoint> ext_pts;  // ordered by cell

    double sp() const { return par.s() * par.p(); }

    int offset_index(int d1, int d2) const {
        return d1 * (2 * m2 - 1) + (d2 + m2 - 1);
    }

    void build_far_points();
    void build_cylinder_tables();
    void build_reduced_cross_tables();
    void build_exterior(double a1, double b1, double a2, double b2);

    template <bool WithGrad>
    void accumulate(const std::vector<double>& nodal, int threads,
                    double& out_inter, double& out_tail,
                    std::vector<double>* grad_nodes) const;
};

void NonlocalAssembler::Impl::build_far_points() {
    const auto& gx = gl::nodes(quad.far_order);
    nq = N == 1 ? quad.far_order : quad.far_order * quad.far_order;
    far_basis.resize(nq);
    const TableGen gen{N, h1, h2, N + sp(), quad};
    int k = 0;
    if (N == 1) {
        for (int q = 0; q < quad.far_order; ++q) {
            const double loc[2] = {0.5 * (1.0 + gx[q]), 0.0};
            far_basis[k++] = gen.basis_at(loc);
        }
    } else {
        for (int q1 = 0; q1 < quad.far_order; ++q1)
            for (int q2 = 0; q2 < quad.far_order; ++q2) {
                const double loc[2] = {0.5 * (1.0 + gx[q1]),
                                       0.5 * (1.0 + gx[q2])};
                far_basis[k++] = gen.basis_at(loc);
            }
    }
    const double mid_loc[2] = {0.5, 0.5};
    mid_basis = gen.basis_at(mid_loc);
}

void NonlocalAssembler::Impl::build_cylinder_tables() {
    const TableGen gen{2, h1, h2, 2.0 + sp(), quad};
    midW.assign(static_cast<std::size_t>(m1) * (2 * m2 - 1), 0.0);
    classmap.assign(midW.size(), 0);

    for (int d1 = 0; d1 < m1; ++d1)
        for (int d2 = -(m2 - 1); d2 <= m2 - 1; ++d2) {
            if (d1 == 0 && d2 <= 0) continue;  // canonical: lexicographic > 0
            const int idx = offset_index(d1, d2);
            const double dist = std::hypot(d1 * h1, d2 * h2);
            const bool touch = d1 <= 1 && std::abs(d2) <= 1;
            if (touch) {
                classmap[idx] = -static_cast<int>(near_offsets.size()) - 1;
                near_offsets.push_back({d1, d2, gen.near_table(d1, d2)});
            } else if (dist <= quad.pair_cutoff) {
                classmap[idx] = static_cast<int>(far_offsets.size()) + 1;
                far_offsets.push_back({d1, d2, gen.far_wk(d1, d2)});
            }
            // far-field weight: the kernel pair-mass integral, so the
            // midpoint rule only approximates the u-difference factor
            midW[idx] = gen.pair_mass(d1, d2);
        }

    const double q = par.p() - sp();
    if (!(q > 0.0))
        throw std::domain_error("p - s p must be positive for P1 energies");
    gen.diag_polar(q, diag_ct, diag_st, diag_wA);
}

// Cross-section tables as the exact fiber reduction of an auxiliary square
// 2D lattice (axial spacing = h). For functions of the cross-section
// variable the 2D tensor basis collapses onto the 1D hats and the axial
// sums collapse by the fiber identity, so the cross-section assembly is
// discretely consistent with the cylinder assembly; dividing by theta_2
// recovers the plain 1D Gagliardo form.
void NonlocalAssembler::Impl::build_reduced_cross_tables() {
    const double hx = h1;  // 1D spacing = cross spacing of the aux lattice
    const double ha = hx;  // aux axial spacing
    const double spv = sp();
    const TableGen aux{2, ha, hx, 2.0 + spv, quad};
    const TableGen one{1, hx, 0.0, 1.0 + spv, quad};
    const double theta2 = theta_np(2, par.s(), par.p());
    const double inv = 1.0 / (theta2 * ha);

    const double q = par.p() - spv;
    if (!(q > 0.0))
        throw std::domain_error("p - s p must be positive for P1 energies");

    // reduced same-cell polar coefficient: gradient (0, m)
    {
        std::vector<double> ct, st, wA;
        aux.diag_polar(q, ct, st, wA);
        double polarS = 0.0;
        for (std::size_t k = 0; k < wA.size(); ++k)
            polarS += wA[k] * pow_abs(st[k], par.p(), pcase);
        diag_coeff_1d = polarS * inv;
    }

    const int i_cut =
        static_cast<int>(std::floor(quad.pair_cutoff / ha)) + 1;
    const int j_cut =
        static_cast<int>(std::floor(quad.pair_cutoff / hx)) + 1;

    auto reduce_basis = [](const std::array<double, 4>& b) {
        return std::array<double, 4>{b[0] + b[2], b[1] + b[3], 0.0, 0.0};
    };
    // merge reduced table points sharing the same (t2a, t2b) pair; `swap`
    // pairs the table's B points with the lower cross cell (offsets with
    // negative cross component have their A cell in the upper column)
    auto merge_into = [&](std::map<std::pair<double, double>, double>& acc,
                          const std::vector<TablePoint>& pts, double scale,
                          bool swap) {
        for (const auto& tp : pts) {
            const auto ra = reduce_basis(swap ? tp.basis_b : tp.basis_a);
            const auto rb = reduce_basis(swap ? tp.basis_a : tp.basis_b);
            acc[{ra[1], rb[1]}] += scale * tp.wk;
        }
    };
    auto emit_merged =
        [&](const std::map<std::pair<double, double>, double>& acc) {
            std::vector<TablePoint> out;
            out.reserve(acc.size());
            for (const auto& [key, w] : acc)
                out.push_back(TablePoint{
                    {1.0 - key.first, key.first, 0.0, 0.0},
                    {1.0 - key.second, key.second, 0.0, 0.0},
                    w});
            return out;
        };
    // collapse a 2D far matrix over the axial Gauss indices; `swap` as above
    const int fo = quad.far_order;
    auto collapse_far = [&](const std::vector<double>& wk2, double scale,
                            std::vector<double>& wk1, bool swap) {
        for (int qa1 = 0; qa1 < fo; ++qa1)
            for (int qa2 = 0; qa2 < fo; ++qa2)
                for (int qb1 = 0; qb1 < fo; ++qb1)
                    for (int qb2 = 0; qb2 < fo; ++qb2) {
                        const int row = swap ? qb2 : qa2;
                        const int col = swap ? qa2 : qb2;
                        wk1[row * fo + col] +=
                            scale * wk2[(qa1 * fo + qa2) * (fo * fo) +
                                        (qb1 * fo + qb2)];
                    }
    };
    auto classify = [&](int i, int j) {
        if (i <= 1 && std::abs(j) <= 1) return -1;  // near
        if (std::hypot(i * ha, j * hx) <= quad.pair_cutoff) return 1;  // far
        return 0;  // mid
    };

    // diagonal extras: axial neighbors of the same cross cell (j = 0),
    // counted for both axial directions
    {
        std::map<std::pair<double, double>, double> acc;
        merge_into(acc, aux.near_table(1, 0), 2.0 * inv, false);
        diag_pts = emit_merged(acc);
        diag_wk.assign(static_cast<std::size_t>(fo) * fo, 0.0);
        for (int i = 2; i <= i_cut; ++i)
            if (classify(i, 0) == 1)
                collapse_far(aux.far_wk(i, 0), 2.0 * inv, diag_wk, false);
        // farther axial pairs carry a zero u-difference at midpoints and
        // are dropped, exactly as the cylinder assembly drops them
    }

    midW.assign(m1, 0.0);
    near_idx_1d.assign(m1, -1);
    far_idx_1d.assign(m1, -1);
    classmap.assign(m1, 0);

    for (int j = 1; j < m1; ++j) {
        // gather 2D offsets {(0,j)} u {(i,+-j) : i >= 1}
        std::map<std::pair<double, double>, double> near_acc;
        std::vector<double> wk1(static_cast<std::size_t>(fo) * fo, 0.0);
        bool any_far = false;
        double table_mass = 0.0;
        auto add_offset = [&](int i, int jj) {
            const int cls = classify(i, std::abs(jj));
            const bool swap = jj < 0;
            if (cls == -1) {
                merge_into(near_acc, aux.near_table(i, jj), inv, swap);
                table_mass += aux.pair_mass(i, std::abs(jj));
            } else if (cls == 1) {
                collapse_far(aux.far_wk(i, jj), inv, wk1, swap);
                any_far = true;
                table_mass += aux.pair_mass(i, std::abs(jj));
            }
        };
        if (j <= j_cut) {
            add_offset(0, j);
            for (int i = 1; i <= i_cut; ++i) {
                add_offset(i, j);
                add_offset(i, -j);
            }
        }
        if (!near_acc.empty()) {
            near_idx_1d[j] = static_cast<int>(near_offsets.size());
            near_offsets.push_back({j, 0, emit_merged(near_acc)});
        }
        if (any_far) {
            far_idx_1d[j] = static_cast<int>(far_offsets.size());
            far_offsets.push_back({j, 0, std::move(wk1)});
        }
        // remaining axial offsets by the fiber identity:
        // sum_i mass2(i, j) = ha * theta2 * mass1(j)
        const double mass_all = ha * theta2 * one.pair_mass(j, 0);
        midW[j] = std::max(0.0, (mass_all - table_mass) * inv);
    }
}

void NonlocalAssembler::Impl::build_exterior(double a1, double b1, double a2,
                                             double b2) {
    const double spv = sp();
    const double R = quad.tail_radius;
    const double tail_const =
        (N == 1 ? 2.0 : 2.0 * M_PI) * std::pow(R, -spv) / spv;

    // Full complement integral via the convex exit-ray reduction:
    //   psi(x) = (1/sp) * integral over directions of r_exit(x,theta)^{-sp}.
    auto psi_full_1d = [&](double x) {
        return (std::pow(x - a1, -spv) + std::pow(b1 - x, -spv)) / spv;
    };
    auto psi_full_2d = [&](double x1, double x2) {
        std::array<double, 4> ang = {
            std::atan2(a2 - x2, a1 - x1), std::atan2(a2 - x2, b1 - x1),
            std::atan2(b2 - x2, a1 - x1), std::atan2(b2 - x2, b1 - x1)};
        std::sort(ang.begin(), ang.end());
        const auto& gx = gl::nodes(24);
        const auto& gw = gl::weights(24);
        double acc = 0.0;
        for (int arc = 0; arc < 4; ++arc) {
            const double t0 = ang[arc];
            const double t1 = arc == 3 ? ang[0] + 2.0 * M_PI : ang[arc + 1];
            if (t1 - t0 < 1e-14) continue;
            const double c0 = 0.5 * (t0 + t1), r0 = 0.5 * (t1 - t0);
            for (std::size_t k = 0; k < gx.size(); ++k) {
                const double th = c0 + r0 * gx[k];
                const double ct = std::cos(th), st = std::sin(th);
                double r = 1e300;
                if (ct > 1e-14) r = std::min(r, (b1 - x1) / ct);
                else if (ct < -1e-14) r = std::min(r, (a1 - x1) / ct);
                if (st > 1e-14) r = std::min(r, (b2 - x2) / st);
                else if (st < -1e-14) r = std::min(r, (a2 - x2) / st);
                acc += gw[k] * r0 * std::pow(r, -spv);
            }
        }
        return acc / spv;
    };

    const auto& gx = gl::nodes(kCellRuleOrder);
    const auto& gw = gl::weights(kCellRuleOrder);
    const TableGen gen{N, h1, h2, N + spv, quad};
    for (int c = 0; c < n_cells; ++c) {
        const double x1lo = a1 + cell_c1[c] * h1;
        if (N == 1) {
            for (int q = 0; q < kCellRuleOrder; ++q) {
                const double t = 0.5 * (1.0 + gx[q]);
                const double x = x1lo + t * h1;
                const double w = 0.5 * h1 * gw[q];
                const double psi = psi_full_1d(x);
                const double loc[2] = {t, 0.0};
                ext_pts.push_back({c, gen.basis_at(loc),
                                   w * (psi - tail_const), w * tail_const});
            }
        } else {
            const double x2lo = a2 + cell_c2[c] * h2;
            for (int q1 = 0; q1 < kCellRuleOrder; ++q1)
                for (int q2 = 0; q2 < kCellRuleOrder; ++q2) {
                    const double t1 = 0.5 * (1.0 + gx[q1]);
                    const double t2 = 0.5 * (1.0 + gx[q2]);
                    const double x1 = x1lo + t1 * h1, x2 = x2lo + t2 * h2;
                    const double w = 0.25 * h1 * h2 * gw[q1] * gw[q2];
                    const double psi = psi_full_2d(x1, x2);
                    const double loc[2] = {t1, t2};
                    ext_pts.push_back({c, gen.basis_at(loc),
                                       w * (psi - tail_const), w * tail_const});
                }
        }
    }
}

template <bool WithGrad>
void NonlocalAssembler::Impl::accumulate(const std::vector<double>& nodal,
                                         int threads, double& out_inter,
                                         double& out_tail,
                                         std::vector<double>* grad_nodes) const {
    const double p = par.p();
    const PCase pc = pcase;

    // per-cell values at far points and midpoints
    std::vector<double> farv(static_cast<std::size_t>(n_cells) * nq);
    std::vector<double> midv(n_cells);
    std::vector<std::array<double, 4>> cellv(n_cells);
    for (int c = 0; c < n_cells; ++c) {
        const auto& nd = cell_nodes[c];
        const std::array<double, 4> v = {nodal[nd[0]], nodal[nd[1]],
                                         nodal[nd[2]], nodal[nd[3]]};
        cellv[c] = v;
        for (int q = 0; q < nq; ++q) {
            const auto& b = far_basis[q];
            farv[c * nq + q] =
                b[0] * v[0] + b[1] * v[1] + b[2] * v[2] + b[3] * v[3];
        }
        midv[c] = mid_basis[0] * v[0] + mid_basis[1] * v[1] +
                  mid_basis[2] * v[2] + mid_basis[3] * v[3];
    }

    const int n_blocks = std::min(n_cells, 128);
    std::vector<double> part_inter(n_blocks, 0.0), part_tail(n_blocks, 0.0);
    std::vector<std::vector<double>> part_grad;
    if constexpr (WithGrad) part_grad.assign(n_blocks, {});

    const int ppc = static_cast<int>(ext_pts.size()) / std::max(n_cells, 1);

    auto process_block = [&](int blk) {
        const int a_begin = static_cast<int>(
            static_cast<long long>(blk) * n_cells / n_blocks);
        const int a_end = static_cast<int>(
            static_cast<long long>(blk + 1) * n_cells / n_blocks);
        double inter = 0.0, tail = 0.0;
        std::vector<double>* gp = nullptr;
        if constexpr (WithGrad) {
            part_grad[blk].assign(n_nodes, 0.0);
            gp = &part_grad[blk];
        }
        auto scatter = [&](const std::array<int, 4>& nodes,
                           const std::array<double, 4>& basis, double coef) {
            (*gp)[nodes[0]] += coef * basis[0];
            (*gp)[nodes[1]] += coef * basis[1];
            (*gp)[nodes[2]] += coef * basis[2];
            (*gp)[nodes[3]] += coef * basis[3];
        };
        auto near_pts_sum = [&](const std::vector<TablePoint>& pts,
                                const std::array<double, 4>& va,
                                const std::array<double, 4>& vb,
                                const std::array<int, 4>& na,
                                const std::array<int, 4>& nb, double factor) {
            for (const auto& tp : pts) {
                const double ua =
                    tp.basis_a[0] * va[0] + tp.basis_a[1] * va[1] +
                    tp.basis_a[2] * va[2] + tp.basis_a[3] * va[3];
                const double ub =
                    tp.basis_b[0] * vb[0] + tp.basis_b[1] * vb[1] +
                    tp.basis_b[2] * vb[2] + tp.basis_b[3] * vb[3];
                const double d = ua - ub;
                inter += factor * tp.wk * pow_abs(d, p, pc);
                if constexpr (WithGrad) {
                    const double coef =
                        factor * tp.wk * p * phi_impl(d, p, pc);
                    scatter(na, tp.basis_a, coef);
                    scatter(nb, tp.basis_b, -coef);
                }
            }
        };
        auto far_wk_sum = [&](const std::vector<double>& wk, const double* fa,
                              const double* fb, const std::array<int, 4>& na,
                              const std::array<int, 4>& nb, double factor) {
            for (int qa = 0; qa < nq; ++qa) {
                const double ua = fa[qa];
                for (int qb = 0; qb < nq; ++qb) {
                    const double w = wk[qa * nq + qb];
                    const double d = ua - fb[qb];
                    inter += factor * w * pow_abs(d, p, pc);
                    if constexpr (WithGrad) {
                        const double coef = factor * w * p * phi_impl(d, p, pc);
                        scatter(na, far_basis[qa], coef);
                        scatter(nb, far_basis[qb], -coef);
                    }
                }
            }
        };

        for (int a = a_begin; a < a_end; ++a) {
            const int ac1 = cell_c1[a], ac2 = cell_c2[a];
            const auto& va = cellv[a];
            const auto& na = cell_nodes[a];
            const double* fa = &farv[static_cast<std::size_t>(a) * nq];

            // same-cell contribution
            if (N == 1) {
                const double m = (va[1] - va[0]) / h1;
                inter += diag_coeff_1d * pow_abs(m, p, pc);
                if constexpr (WithGrad) {
                    const double dm =
                        diag_coeff_1d * p * phi_impl(m, p, pc) / h1;
                    (*gp)[na[0]] -= dm;
                    (*gp)[na[1]] += dm;
                }
                near_pts_sum(diag_pts, va, va, na, na, 1.0);
                far_wk_sum(diag_wk, fa, fa, na, na, 1.0);
            } else {
                const double g1 =
                    ((va[2] - va[0]) + (va[3] - va[1])) / (2.0 * h1);
                const double g2 =
                    ((va[1] - va[0]) + (va[3] - va[2])) / (2.0 * h2);
                for (std::size_t k = 0; k < diag_wA.size(); ++k) {
                    const double gdir = g1 * diag_ct[k] + g2 * diag_st[k];
                    inter += diag_wA[k] * pow_abs(gdir, p, pc);
                    if constexpr (WithGrad) {
                        const double dphi =
                            diag_wA[k] * p * phi_impl(gdir, p, pc);
                        const double d1c = dphi * diag_ct[k] / (2.0 * h1);
                        const double d2c = dphi * diag_st[k] / (2.0 * h2);
                        (*gp)[na[0]] += -d1c - d2c;
                        (*gp)[na[1]] += -d1c + d2c;
                        (*gp)[na[2]] += d1c - d2c;
                        (*gp)[na[3]] += d1c + d2c;
                    }
                }
            }

            // cell pairs b > a (kernel symmetry: ordered factor 2)
            for (int b = a + 1; b < n_cells; ++b) {
                const auto& nb = cell_nodes[b];
                const double* fb = &farv[static_cast<std::size_t>(b) * nq];
                if (N == 1) {
                    const int j = b - a;
                    if (near_idx_1d[j] >= 0)
                        near_pts_sum(near_offsets[near_idx_1d[j]].pts, va,
                                     cellv[b], na, nb, 2.0);
                    if (far_idx_1d[j] >= 0)
                        far_wk_sum(far_offsets[far_idx_1d[j]].wk, fa, fb, na,
                                   nb, 2.0);
                    const double w = midW[j];
                    if (w != 0.0) {
                        const double d = midv[a] - midv[b];
                        inter += 2.0 * w * pow_abs(d, p, pc);
                        if constexpr (WithGrad) {
                            const double coef =
                                2.0 * w * p * phi_impl(d, p, pc);
                            scatter(na, mid_basis, coef);
                            scatter(nb, mid_basis, -coef);
                        }
                    }
                    continue;
                }
                const int d1 = cell_c1[b] - ac1;
                const int d2 = cell_c2[b] - ac2;
                const int cls = classmap[offset_index(d1, d2)];
                if (cls == 0) {
                    const double d = midv[a] - midv[b];
                    const double w = midW[offset_index(d1, d2)];
                    inter += 2.0 * w * pow_abs(d, p, pc);
                    if constexpr (WithGrad) {
                        const double coef = 2.0 * w * p * phi_impl(d, p, pc);
                        scatter(na, mid_basis, coef);
                        scatter(nb, mid_basis, -coef);
                    }
                } else if (cls > 0) {
                    far_wk_sum(far_offsets[cls - 1].wk, fa, fb, na, nb, 2.0);
                } else {
                    near_pts_sum(near_offsets[-cls - 1].pts, va, cellv[b], na,
                                 nb, 2.0);
                }
            }

            // exterior strip + analytic tail at this cell's rule points
            for (int k = 0; k < ppc; ++k) {
                const auto& ep = ext_pts[static_cast<std::size_t>(a) * ppc + k];
                const double u = ep.basis[0] * va[0] + ep.basis[1] * va[1] +
                                 ep.basis[2] * va[2] + ep.basis[3] * va[3];
                const double up = pow_abs(u, p, pc);
                inter += 2.0 * ep.w_strip * up;
                tail += 2.0 * ep.w_tail * up;
                if constexpr (WithGrad) {
                    const double coef = 2.0 * (ep.w_strip + ep.w_tail) * p *
                                        phi_impl(u, p, pc);
                    scatter(na, ep.basis, coef);
                }
            }
        }
        part_inter[blk] = inter;
        part_tail[blk] = tail;
    };

    const int nt = std::clamp(threads, 1, n_blocks);
    if (nt == 1) {
        for (int blk = 0; blk < n_blocks; ++blk) process_block(blk);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        pool.reserve(nt);
        for (int t = 0; t < nt; ++t)
            pool.emplace_back([&] {
                int blk;
                while ((blk = next.fetch_add(1)) < n_blocks) process_block(blk);
            });
        for (auto& th : pool) th.join();
    }

    // fixed-order reduction: identical result for any thread count
    out_inter = 0.0;
    out_tail = 0.0;
    for (int blk = 0; blk < n_blocks; ++blk) {
        out_inter += part_inter[blk];
        out_tail += part_tail[blk];
    }
    if constexpr (WithGrad) {
        grad_nodes->assign(n_nodes, 0.0);
        for (int blk = 0; blk < n_blocks; ++blk)
            for (int n = 0; n < n_nodes; ++n)
                (*grad_nodes)[n] += part_grad[blk][n];
    }
}

NonlocalAssembler::NonlocalAssembler(const CrossSectionGrid& grid,
                                     FractionalParams params,
                                     QuadratureSpec quad)
    : impl_(std::make_unique<Impl>(Impl{Grid{grid}, params, QuadratureSpec{}})) {
    if (params.dim() != 1)
        throw std::domain_error("cross-section assembly requires dim == 1");
    Impl& im = *impl_;
    im.quad = quad.resolved(grid.diameter(), grid.h);
    im.pcase = classify_p(params.p());
    im.N = 1;
    im.m1 = grid.n_cells();
    im.m2 = 1;
    im.nn2 = 1;
    im.h1 = grid.h;
    im.lo1 = grid.lo;
    im.n_nodes = grid.n_nodes;
    im.n_dofs = grid.n_dofs();
    im.node_dof.assign(im.n_nodes, -1);
    for (int i = 1; i < grid.n_nodes - 1; ++i) im.node_dof[i] = i - 1;
    im.n_cells = im.m1;
    im.cell_nodes.resize(im.n_cells);
    im.cell_c1.resize(im.n_cells);
    im.cell_c2.assign(im.n_cells, 0);
    for (int c = 0; c < im.n_cells; ++c) {
        im.cell_c1[c] = c;
        im.cell_nodes[c] = {c, c + 1, c, c + 1};
    }
    im.build_far_points();
    im.build_reduced_cross_tables();
    im.build_exterior(grid.lo, grid.hi, 0.0, 0.0);
}

NonlocalAssembler::NonlocalAssembler(const CylinderGrid& grid,
                                     FractionalParams params,
                                     QuadratureSpec quad)
    : impl_(std::make_unique<Impl>(Impl{Grid{grid}, params, QuadratureSpec{}})) {
    if (params.dim() != 2)
        throw std::domain_error("cylinder assembly requires dim == 2");
    Impl& im = *impl_;
    im.quad = quad.resolved(grid.diameter(), std::max(grid.h1, grid.cross.h));
    im.pcase = classify_p(params.p());
    im.N = 2;
    im.m1 = grid.n1 - 1;
    im.m2 = grid.cross.n_cells();
    im.nn2 = grid.cross.n_nodes;
    im.h1 = grid.h1;
    im.h2 = grid.cross.h;
    im.lo1 = -grid.ell;
    im.lo2 = grid.cross.lo;
    im.n_nodes = grid.n_nodes();
    im.n_dofs = grid.n_dofs();
    im.node_dof.assign(im.n_nodes, -1);
    int k = 0;
    for (int i1 = 1; i1 < grid.n1 - 1; ++i1)
        for (int i2 = 1; i2 < grid.cross.n_nodes - 1; ++i2)
            im.node_dof[i1 * im.nn2 + i2] = k++;
    im.n_cells = im.m1 * im.m2;
    im.cell_nodes.resize(im.n_cells);
    im.cell_c1.resize(im.n_cells);
    im.cell_c2.resize(im.n_cells);
    for (int c1 = 0; c1 < im.m1; ++c1)
        for (int c2 = 0; c2 < im.m2; ++c2) {
            const int c = c1 * im.m2 + c2;
            im.cell_c1[c] = c1;
            im.cell_c2[c] = c2;
            const int base = c1 * im.nn2 + c2;
            im.cell_nodes[c] = {base, base + 1, base + im.nn2,
                                base + im.nn2 + 1};
        }
    im.build_far_points();
    im.build_cylinder_tables();
    im.build_exterior(-grid.ell, grid.ell, grid.cross.lo, grid.cross.hi);
}

NonlocalAssembler::~NonlocalAssembler() = default;
NonlocalAssembler::NonlocalAssembler(NonlocalAssembler&&) noexcept = default;
NonlocalAssembler& NonlocalAssembler::operator=(NonlocalAssembler&&) noexcept =
    default;

const FractionalParams& NonlocalAssembler::params() const { return impl_->par; }
const QuadratureSpec& NonlocalAssembler::quad() const { return impl_->quad; }
const Grid& NonlocalAssembler::grid() const { return impl_->grid_v; }
int NonlocalAssembler::n_dofs() const { return impl_->n_dofs; }

void NonlocalAssembler::check_function(const DiscreteFunction& u) const {
    if (!(u.grid() == impl_->grid_v))
        throw std::domain_error("function grid does not match the assembler");
}

NonlocalAssembler::SeminormParts NonlocalAssembler::seminorm_parts(
    const DiscreteFunction& u, int threads) const {
    check_function(u);
    SeminormParts parts;
    impl_->accumulate<false>(u.values(), threads, parts.interaction, parts.tail,
                             nullptr);
    return parts;
}

double NonlocalAssembler::seminorm(const DiscreteFunction& u, int threads) const {
    return seminorm_parts(u, threads).total();
}

std::vector<double> NonlocalAssembler::seminorm_gradient(
    const DiscreteFunction& u, int threads) const {
    return seminorm_and_gradient(u, threads).second;
}

std::pair<double, std::vector<double>> NonlocalAssembler::seminorm_and_gradient(
    const DiscreteFunction& u, int threads) const {
    check_function(u);
    double inter = 0.0, tail = 0.0;
    std::vector<double> gn;
    impl_->accumulate<true>(u.values(), threads, inter, tail, &gn);
    std::vector<double> gd(impl_->n_dofs, 0.0);
    for (int n = 0; n < impl_->n_nodes; ++n)
        if (impl_->node_dof[n] >= 0) gd[impl_->node_dof[n]] = gn[n];
    return {inter + tail, std::move(gd)};
}

std::vector<double> NonlocalAssembler::load_vector(const DiscreteFunction& f) const {
    check_function(f);
    const Impl& im = *impl_;
    std::vector<double> load(im.n_dofs, 0.0);
    const auto& gx = gl::nodes(kCellRuleOrder);
    const auto& gw = gl::weights(kCellRuleOrder);
    for (int c = 0; c < im.n_cells; ++c) {
        const auto& nd = im.cell_nodes[c];
        const std::array<double, 4> fv = {f.value(nd[0]), f.value(nd[1]),
                                          f.value(nd[2]), f.value(nd[3])};
        if (im.N == 1) {
            for (int q = 0; q < kCellRuleOrder; ++q) {
                const double t = 0.5 * (1.0 + gx[q]);
                const double w = 0.5 * im.h1 * gw[q];
                const double b[2] = {1.0 - t, t};
                const double fq = b[0] * fv[0] + b[1] * fv[1];
                for (int k = 0; k < 2; ++k)
                    if (im.node_dof[nd[k]] >= 0)
                        load[im.node_dof[nd[k]]] += w * fq * b[k];
            }
        } else {
            for (int q1 = 0; q1 < kCellRuleOrder; ++q1)
                for (int q2 = 0; q2 < kCellRuleOrder; ++q2) {
                    const double t1 = 0.5 * (1.0 + gx[q1]);
                    const double t2 = 0.5 * (1.0 + gx[q2]);
                    const double w = 0.25 * im.h1 * im.h2 * gw[q1] * gw[q2];
                    const double b[4] = {(1 - t1) * (1 - t2), (1 - t1) * t2,
                                         t1 * (1 - t2), t1 * t2};
                    const double fq = b[0] * fv[0] + b[1] * fv[1] +
                                      b[2] * fv[2] + b[3] * fv[3];
                    for (int k = 0; k < 4; ++k)
                        if (im.node_dof[nd[k]] >= 0)
                            load[im.node_dof[nd[k]]] += w * fq * b[k];
                }
        }
    }
    return load;
}

namespace {

double dot_dofs(const std::vector<double>& load, const DiscreteFunction& u) {
    const std::vector<double> d = u.dofs();
    double acc = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) acc += load[i] * d[i];
    return acc;
}

}  // namespace

double seminorm_p(const DiscreteFunction& u, const FractionalParams& params,
                  const QuadratureSpec& quad, int threads) {
    if (u.is_cylinder()) {
        NonlocalAssembler a(u.cylinder_grid(), params, quad);
        return a.seminorm(u, threads);
    }
    NonlocalAssembler a(u.cross_grid(), params, quad);
    return a.seminorm(u, threads);
}

double energy(const DiscreteFunction& u, const DiscreteFunction& f,
              const FractionalParams& params, const QuadratureSpec& quad,
              int threads) {
    if (!(u.grid() == f.grid())) throw std::domain_error("grid mismatch");
    NonlocalAssembler a =
        u.is_cylinder() ? NonlocalAssembler(u.cylinder_grid(), params, quad)
                        : NonlocalAssembler(u.cross_grid(), params, quad);
    return params.c_kernel() / (2.0 * params.p()) * a.seminorm(u, threads) -
           dot_dofs(a.load_vector(f), u);
}

std::vector<double> energy_gradient(const DiscreteFunction& u,
                                    const DiscreteFunction& f,
                                    const FractionalParams& params,
                                    const QuadratureSpec& quad, int threads) {
    if (!(u.grid() == f.grid())) throw std::domain_error("grid mismatch");
    NonlocalAssembler a =
        u.is_cylinder() ? NonlocalAssembler(u.cylinder_grid(), params, quad)
                        : NonlocalAssembler(u.cross_grid(), params, quad);
    std::vector<double> g = a.seminorm_gradient(u, threads);
    const std::vector<double> load = a.load_vector(f);
    const double scale = params.c_kernel() / (2.0 * params.p());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = scale * g[i] - load[i];
    return g;
}

EnergyReport energy_report(const DiscreteFunction& u, const DiscreteFunction& f,
                           const FractionalParams& params,
                           const QuadratureSpec& quad, int threads) {
    NonlocalAssembler a =
        u.is_cylinder() ? NonlocalAssembler(u.cylinder_grid(), params, quad)
                        : NonlocalAssembler(u.cross_grid(), params, quad);
    const auto parts = a.seminorm_parts(u, threads);
    EnergyReport rep;
    rep.seminorm_p = parts.total();
    rep.interaction_part = parts.interaction;
    rep.tail_part = parts.tail;
    rep.load = dot_dofs(a.load_vector(f), u);
    return rep;
}

std::string EnergyReport::to_json() const {
    std::ostringstream os;
    os.precision(17);
    os << "{\"seminorm_p\":" << seminorm_p
       << ",\"interaction_part\":" << interaction_part
       << ",\"tail_part\":" << tail_part << ",\"load\":" << load << "}";
    return os.str();
}

std::string EnergyReport::to_kv_text() const {
    std::ostringstream os;
    os.precision(17);
    os << "seminorm_p=" << seminorm_p << "\ninteraction_part=" << interaction_part
       << "\ntail_part=" << tail_part << "\nload=" << load << "\n";
    return os.str();
}

}  // namespace fraccyl

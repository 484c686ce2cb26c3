#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <utility>

#include <Eigen/Dense>

#include "hyperkahler.hpp"

namespace twistor {

struct ChartCoords {
    int n = 1;
    CVecN v;
    CVecN xi;
    cplx zeta{0, 0};

    ChartCoords() : v(CVecN::Zero(1)), xi(CVecN::Zero(1)) {}
    explicit ChartCoords(int n_) : n(n_), v(CVecN::Zero(n_)), xi(CVecN::Zero(n_)) {
        if (n_ < 1 || n_ > kMaxN) throw InvariantError("ChartCoords: n out of range");
    }
};

inline constexpr double kPoleTol = 1e-9;

inline cplx sphere_to_zeta(const SpherePoint& s) {
    if (s.distance(SpherePoint{-1, 0, 0}) < kPoleTol) throw PoleError("sphere_to_zeta: point (-1,0,0) is not in the chart");
    return cplx(-s.c, s.b) / (s.a + 1.0);
}

inline SpherePoint zeta_to_sphere(cplx zeta) {
    const double r2 = std::norm(zeta);
    const double d = 1.0 + r2;
    return {(1.0 - r2) / d, 2.0 * zeta.imag() / d, -2.0 * zeta.real() / d};
}

// [z0:z1] with zeta = z0/z1; [-c+ib : a+1] ~ [1-a : -c-ib].
inline std::pair<cplx, cplx> sphere_homogeneous(const SpherePoint& s) {
    const cplx p0(-s.c, s.b), p1(s.a + 1.0, 0.0);
    const cplx q0(1.0 - s.a, 0.0), q1(-s.c, -s.b);
    if (std::norm(p0) + std::norm(p1) >= std::norm(q0) + std::norm(q1)) return {p0, p1};
    return {q0, q1};
}

inline SpherePoint homogeneous_to_sphere(cplx z0, cplx z1) {
    const double n0 = std::norm(z0), n1 = std::norm(z1), d = n0 + n1;
    const cplx m = z0 * std::conj(z1);
    return {(n1 - n0) / d, 2.0 * m.imag() / d, -2.0 * m.real() / d};
}

struct SU2Matrix {
    cplx alpha{1, 0}, beta{0, 0};

    Eigen::Matrix2cd full() const {
        Eigen::Matrix2cd g;
        g << alpha, beta, -std::conj(beta), std::conj(alpha);
        return g;
    }
    SU2Matrix inverse() const { return {std::conj(alpha), -beta}; }
    cplx det() const { return std::norm(alpha) + std::norm(beta); }

    std::pair<cplx, cplx> act(cplx z0, cplx z1) const {
        return {alpha * z0 + beta * z1, -std::conj(beta) * z0 + std::conj(alpha) * z1};
    }

    SpherePoint act(const SpherePoint& s) const {
        auto [z0, z1] = sphere_homogeneous(s);
        auto [w0, w1] = act(z0, z1);
        return homogeneous_to_sphere(w0, w1);
    }

    // closed-form action on (a,b,c)
    SpherePoint act_abc(const SpherePoint& s) const {
        const cplx al = alpha, be = beta, alc = std::conj(alpha), bec = std::conj(beta);
        const cplx ab = al * bec;
        const double ap = (std::norm(al) - std::norm(be)) * s.a + 2 * ab.imag() * s.b + 2 * ab.real() * s.c;
        const double bp = (cplx(0, -1) * (al * be - alc * bec)).real() * s.a + (al * al + bec * bec).real() * s.b -
                          (al * al + bec * bec).imag() * s.c;
        const double cp = -(al * be + alc * bec).real() * s.a + (al * al - bec * bec).imag() * s.b +
                          (al * al - bec * bec).real() * s.c;
        return {ap, bp, cp};
    }
};

// Chart on the twistor space with the fibre over `removed` deleted.
struct RemovedFiberChart {
    SpherePoint removed{-1, 0, 0};
    cplx zeta0{0, 0};
    double psi = std::numbers::pi / 2;
    bool standard = true;

    static RemovedFiberChart standard_chart() { return {}; }

    static RemovedFiberChart general(const SpherePoint& removed, double psi = std::numbers::pi / 2) {
        removed.validate();
        RemovedFiberChart c;
        c.removed = removed;
        c.zeta0 = sphere_to_zeta(removed);
        c.psi = psi;
        c.standard = false;
        return c;
    }

    static RemovedFiberChart from_zeta0(cplx zeta0, double psi = std::numbers::pi / 2) {
        RemovedFiberChart c;
        c.removed = zeta_to_sphere(zeta0);
        c.zeta0 = zeta0;
        c.psi = psi;
        c.standard = false;
        return c;
    }

    cplx phase2() const { return std::polar(1.0, 2.0 * psi); }
};

inline SU2Matrix su2_for_removed_point(const RemovedFiberChart& chart) {
    if (chart.standard) return {};
    const double s = 1.0 / std::sqrt(1.0 + std::norm(chart.zeta0));
    const cplx em = std::polar(1.0, -chart.psi);
    return {-em * chart.zeta0 * s, std::conj(em) * s};
}

// zeta' of a sphere point in the chart.
inline cplx chart_zeta(const SpherePoint& s, const RemovedFiberChart& chart) {
    if (s.distance(chart.removed) < kPoleTol) throw PoleError("chart: point lies on the removed fibre");
    auto [z0, z1] = sphere_homogeneous(s);
    auto [w0, w1] = su2_for_removed_point(chart).inverse().act(z0, z1);
    return w0 / w1;
}

inline SpherePoint chart_zeta_to_sphere(cplx zp, const RemovedFiberChart& chart) {
    if (chart.standard) return zeta_to_sphere(zp);
    auto [z0, z1] = su2_for_removed_point(chart).act(zp, cplx(1, 0));
    return homogeneous_to_sphere(z0, z1);
}

// v' = p z + q conj(w), xi' = p w - q conj(z)
struct ChartPQ {
    cplx p, q, dp, dq;
};

inline ChartPQ chart_pq(cplx zp, const RemovedFiberChart& chart) {
    if (chart.standard) return {cplx(1, 0), zp, cplx(0, 0), cplx(1, 0)};
    const cplx e = chart.phase2();
    return {zp + e * std::conj(chart.zeta0), chart.zeta0 * zp - e, cplx(1, 0), chart.zeta0};
}

inline ChartCoords to_chart(const RealPoint4n& x, const SpherePoint& s, const RemovedFiberChart& chart) {
    const cplx zp = chart_zeta(s, chart);
    const ChartPQ pq = chart_pq(zp, chart);
    ChartCoords c(x.n);
    c.zeta = zp;
    for (int l = 0; l < x.n; ++l) {
        const cplx z = x.z(l), w = x.w(l);
        c.v[l] = pq.p * z + pq.q * std::conj(w);
        c.xi[l] = pq.p * w - pq.q * std::conj(z);
    }
    return c;
}

inline RealPoint4n point_from_chart(const ChartCoords& c, const RemovedFiberChart& chart) {
    const ChartPQ pq = chart_pq(c.zeta, chart);
    const double N = std::norm(pq.p) + std::norm(pq.q);
    CVecN z(c.n), w(c.n);
    const cplx pc = std::conj(pq.p);
    for (int l = 0; l < c.n; ++l) {
        z[l] = (pc * c.v[l] - pq.q * std::conj(c.xi[l])) / N;
        w[l] = (pq.q * std::conj(c.v[l]) + pc * c.xi[l]) / N;
    }
    return RealPoint4n::from_zw(z, w);
}

inline std::pair<RealPoint4n, SpherePoint> from_chart(const ChartCoords& c, const RemovedFiberChart& chart) {
    return {point_from_chart(c, chart), chart_zeta_to_sphere(c.zeta, chart)};
}

inline ChartCoords transition(const ChartCoords& c) {
    if (c.zeta == cplx(0, 0)) throw PoleError("transition: zeta = 0");
    ChartCoords t(c.n);
    const cplx inv = 1.0 / c.zeta;
    t.v = c.v * inv;
    t.xi = c.xi * inv;
    t.zeta = inv;
    return t;
}

// Complex 2n x 4n matrix of x -> (v', xi') at fixed zeta'.
inline Eigen::MatrixXcd fiber_matrix(cplx zp, int n, const RemovedFiberChart& chart) {
    const ChartPQ pq = chart_pq(zp, chart);
    const cplx I(0, 1);
    Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(2 * n, 4 * n);
    for (int l = 0; l < n; ++l) {
        M(l, 0 * n + l) = pq.p;
        M(l, 1 * n + l) = I * pq.p;
        M(l, 2 * n + l) = pq.q;
        M(l, 3 * n + l) = -I * pq.q;
        M(n + l, 0 * n + l) = -pq.q;
        M(n + l, 1 * n + l) = I * pq.q;
        M(n + l, 2 * n + l) = pq.p;
        M(n + l, 3 * n + l) = I * pq.p;
    }
    return M;
}

namespace detail {

inline void put_complex(Eigen::MatrixXd& Df, int row, int col, cplx d) {
    Df(2 * row, col) = d.real();
    Df(2 * row + 1, col) = d.imag();
}

} // namespace detail

// Real Jacobian of (x, t) -> (v', xi', zeta'), outputs interleaved (Re, Im),
// t a holomorphic coordinate on the sphere near s.
inline Eigen::MatrixXd chart_jacobian(const RealPoint4n& x, const SpherePoint& s, const RemovedFiberChart& chart) {
    const int n = x.n;
    const cplx zp = chart_zeta(s, chart);
    const ChartPQ pq = chart_pq(zp, chart);
    const Eigen::MatrixXcd F = fiber_matrix(zp, n, chart);

    cplx dzp_dt(1, 0);
    if (!chart.standard) {
        const Eigen::Matrix2cd gi = su2_for_removed_point(chart).inverse().full();
        auto [h0, h1] = sphere_homogeneous(s);
        if (std::abs(h0) <= std::abs(h1)) {
            const cplx t = h0 / h1;
            const cplx den = gi(1, 0) * t + gi(1, 1);
            dzp_dt = 1.0 / (den * den);
        } else {
            const cplx t = h1 / h0;
            const cplx den = gi(1, 0) + gi(1, 1) * t;
            dzp_dt = -1.0 / (den * den);
        }
    }

    const int rows = 2 * (2 * n + 1), cols = 4 * n + 2;
    Eigen::MatrixXd Df = Eigen::MatrixXd::Zero(rows, cols);
    for (int r = 0; r < 2 * n; ++r)
        for (int col = 0; col < 4 * n; ++col) detail::put_complex(Df, r, col, F(r, col));

    const cplx I(0, 1);
    for (int l = 0; l < n; ++l) {
        const cplx z = x.z(l), w = x.w(l);
        const cplx dv = (pq.dp * z + pq.dq * std::conj(w)) * dzp_dt;
        const cplx dxi = (pq.dp * w - pq.dq * std::conj(z)) * dzp_dt;
        detail::put_complex(Df, l, 4 * n, dv);
        detail::put_complex(Df, l, 4 * n + 1, I * dv);
        detail::put_complex(Df, n + l, 4 * n, dxi);
        detail::put_complex(Df, n + l, 4 * n + 1, I * dxi);
    }
    detail::put_complex(Df, 2 * n, 4 * n, dzp_dt);
    detail::put_complex(Df, 2 * n, 4 * n + 1, I * dzp_dt);
    return Df;
}

inline double holomorphy_residual(const RealPoint4n& x, const SpherePoint& s, const RemovedFiberChart& chart) {
    const int n = x.n;
    const Eigen::MatrixXd Df = chart_jacobian(x, s, chart);
    const int rows = static_cast<int>(Df.rows()), cols = static_cast<int>(Df.cols());

    Eigen::MatrixXd J0 = Eigen::MatrixXd::Zero(rows, rows);
    for (int i = 0; i < rows / 2; ++i) {
        J0(2 * i, 2 * i + 1) = -1;
        J0(2 * i + 1, 2 * i) = 1;
    }
    Eigen::MatrixXd AJ = Eigen::MatrixXd::Zero(cols, cols);
    AJ.topLeftCorner(4 * n, 4 * n) = structure_matrix(s, n).matrix;
    AJ(4 * n, 4 * n + 1) = -1;
    AJ(4 * n + 1, 4 * n) = 1;

    const Eigen::MatrixXd R = J0 * Df - Df * AJ;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(R);
    return svd.singularValues()(0);
}

} // namespace twistor

#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "error.hpp"

namespace twistor {

using cplx = std::complex<double>;

inline constexpr int kMaxN = 8;

template <typename T>
inline T ipow(T x, int e) {
    T r(1);
    while (e > 0) {
        if (e & 1) r *= x;
        x *= x;
        e >>= 1;
    }
    return r;
}

using RVec4n = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 4 * kMaxN, 1>;
using CVecN = Eigen::Matrix<cplx, Eigen::Dynamic, 1, 0, kMaxN, 1>;

// Point of R^{4n}; flat index m*n + l for block m in {0,1,2,3}, component l.
struct RealPoint4n {
    int n = 1;
    RVec4n x;

    RealPoint4n() : x(RVec4n::Zero(4)) {}
    explicit RealPoint4n(int n_) : n(n_) {
        if (n_ < 1 || n_ > kMaxN) throw InvariantError("RealPoint4n: n out of range");
        x = RVec4n::Zero(4 * n_);
    }

    double& operator()(int block, int l) { return x[block * n + l]; }
    double operator()(int block, int l) const { return x[block * n + l]; }

    cplx z(int l) const { return {x[l], x[n + l]}; }
    cplx w(int l) const { return {x[2 * n + l], x[3 * n + l]}; }

    static RealPoint4n from_zw(const CVecN& z, const CVecN& w) {
        RealPoint4n p(static_cast<int>(z.size()));
        for (int l = 0; l < p.n; ++l) {
            p(0, l) = z[l].real();
            p(1, l) = z[l].imag();
            p(2, l) = w[l].real();
            p(3, l) = w[l].imag();
        }
        return p;
    }
};

struct SpherePoint {
    double a = 1, b = 0, c = 0;

    static constexpr double kTol = 1e-12;

    static SpherePoint make(double a, double b, double c) {
        SpherePoint s{a, b, c};
        s.validate();
        return s;
    }
    void validate() const {
        if (!(std::abs(a * a + b * b + c * c - 1.0) <= kTol))
            throw InvariantError("SpherePoint: a^2+b^2+c^2 != 1");
    }
    double distance(const SpherePoint& o) const {
        return std::sqrt((a - o.a) * (a - o.a) + (b - o.b) * (b - o.b) + (c - o.c) * (c - o.c));
    }
};

namespace detail {

// n = 1 patterns of I, J, K.
inline const std::array<std::array<int, 4>, 4>& pattern_I() {
    static const std::array<std::array<int, 4>, 4> m{{{0, -1, 0, 0}, {1, 0, 0, 0}, {0, 0, 0, -1}, {0, 0, 1, 0}}};
    return m;
}
inline const std::array<std::array<int, 4>, 4>& pattern_J() {
    static const std::array<std::array<int, 4>, 4> m{{{0, 0, -1, 0}, {0, 0, 0, 1}, {1, 0, 0, 0}, {0, -1, 0, 0}}};
    return m;
}
inline const std::array<std::array<int, 4>, 4>& pattern_K() {
    static const std::array<std::array<int, 4>, 4> m{{{0, 0, 0, -1}, {0, 0, -1, 0}, {0, 1, 0, 0}, {1, 0, 0, 0}}};
    return m;
}

inline Eigen::MatrixXd expand_blocks(const std::array<std::array<int, 4>, 4>& p, int n) {
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(4 * n, 4 * n);
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c)
            if (p[r][c] != 0)
                for (int l = 0; l < n; ++l) M(r * n + l, c * n + l) = p[r][c];
    return M;
}

inline void check_n(int n) {
    if (n < 1 || n > kMaxN) throw InvariantError("n out of range");
}

} // namespace detail

inline Eigen::MatrixXd matrix_I(int n) { detail::check_n(n); return detail::expand_blocks(detail::pattern_I(), n); }
inline Eigen::MatrixXd matrix_J(int n) { detail::check_n(n); return detail::expand_blocks(detail::pattern_J(), n); }
inline Eigen::MatrixXd matrix_K(int n) { detail::check_n(n); return detail::expand_blocks(detail::pattern_K(), n); }

struct ComplexStructure {
    SpherePoint sphere;
    int n = 1;
    Eigen::MatrixXd matrix;
};

inline ComplexStructure structure_matrix(const SpherePoint& s, int n) {
    s.validate();
    detail::check_n(n);
    return {s, n, s.a * matrix_I(n) + s.b * matrix_J(n) + s.c * matrix_K(n)};
}

// omega(X, X') = X^T M X'
struct TwoForm4n {
    Eigen::MatrixXd coeff;

    double operator()(const Eigen::VectorXd& X, const Eigen::VectorXd& Xp) const {
        return X.dot(coeff * Xp);
    }
    int dim() const { return static_cast<int>(coeff.rows()); }

    static TwoForm4n basis(int dim, int i, int j) {
        TwoForm4n f{Eigen::MatrixXd::Zero(dim, dim)};
        f.coeff(i, j) = 1;
        f.coeff(j, i) = -1;
        return f;
    }
};

inline TwoForm4n kahler_form(const SpherePoint& s, int n) {
    return {structure_matrix(s, n).matrix.transpose()};
}

inline TwoForm4n omega_m_fiberwise(const SpherePoint& s, int n) { return kahler_form(s, n); }

namespace detail {

inline double pfaffian_expand(const Eigen::MatrixXd& A, std::vector<int>& idx) {
    const int m = static_cast<int>(idx.size());
    if (m == 0) return 1.0;
    if (m == 2) return A(idx[0], idx[1]);
    const int first = idx[0];
    double sum = 0;
    for (int j = 1; j < m; ++j) {
        const double a = A(first, idx[j]);
        if (a == 0) continue;
        std::vector<int> rest;
        rest.reserve(m - 2);
        for (int t = 1; t < m; ++t)
            if (t != j) rest.push_back(idx[t]);
        const double sign = (j % 2 == 1) ? 1.0 : -1.0;
        sum += sign * a * pfaffian_expand(A, rest);
    }
    return sum;
}

// Parlett-Reid style skew tridiagonalization with pivoting.
inline double pfaffian_ltl(Eigen::MatrixXd A) {
    const int m = static_cast<int>(A.rows());
    double pf = 1.0;
    for (int k = 0; k < m - 1; k += 2) {
        Eigen::Index kp;
        A.col(k).tail(m - k - 1).cwiseAbs().maxCoeff(&kp);
        kp += k + 1;
        if (kp != k + 1) {
            A.row(k + 1).swap(A.row(kp));
            A.col(k + 1).swap(A.col(kp));
            pf = -pf;
        }
        const double piv = A(k, k + 1);
        if (piv == 0.0) return 0.0;
        pf *= piv;
        if (k + 2 < m) {
            const int r = m - k - 2;
            Eigen::VectorXd tau = A.row(k).tail(r).transpose() / piv;
            Eigen::VectorXd u = A.col(k + 1).tail(r);
            A.bottomRightCorner(r, r) += tau * u.transpose() - u * tau.transpose();
        }
    }
    return pf;
}

} // namespace detail

inline double pfaffian(const Eigen::MatrixXd& A) {
    if (A.rows() != A.cols()) throw InvariantError("pfaffian: non-square");
    const int m = static_cast<int>(A.rows());
    if (m % 2 == 1) return 0.0;
    if (m <= 12) {
        std::vector<int> idx(m);
        for (int i = 0; i < m; ++i) idx[i] = i;
        return detail::pfaffian_expand(A, idx);
    }
    return detail::pfaffian_ltl(A);
}

// form^{2n} = lambda * (2n)! * dx_1 ^ ... ^ dx_{4n} in the flat coordinate order.
inline double top_wedge_coefficient(const TwoForm4n& form) { return pfaffian(form.coeff); }

} // namespace twistor

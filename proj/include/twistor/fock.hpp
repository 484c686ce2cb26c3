#pragma once

#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_int.hpp>

#include "charts.hpp"

namespace twistor {

inline constexpr const char* kBasisOrdering = "graded-lex-desc";

// Multi-index (l_1..l_n, m_1..m_n): exponents of v_1..v_n, xi_1..xi_n.
using MultiIndex = std::vector<int>;

namespace detail {

inline void enumerate_degree(int slots, int deg, MultiIndex& cur, int pos, std::vector<MultiIndex>& out) {
    if (pos == slots - 1) {
        cur[pos] = deg;
        out.push_back(cur);
        return;
    }
    for (int e = deg; e >= 0; --e) {
        cur[pos] = e;
        enumerate_degree(slots, deg - e, cur, pos + 1, out);
    }
}

inline double log_factorial(int e) { return std::lgamma(e + 1.0); }

} // namespace detail

class FockBasis {
public:
    FockBasis(int n, double k, int D) : n_(n), k_(k), D_(D) {
        if (n < 1 || n > kMaxN) throw InvariantError("FockBasis: n out of range");
        if (!(k > 0)) throw InvariantError("FockBasis: k must be positive");
        if (D < 0) throw InvariantError("FockBasis: D must be nonnegative");
        MultiIndex cur(2 * n, 0);
        for (int d = 0; d <= D; ++d) detail::enumerate_degree(2 * n, d, cur, 0, idx_);
        log_norm_.reserve(idx_.size());
        degree_.reserve(idx_.size());
        for (size_t i = 0; i < idx_.size(); ++i) {
            lookup_[idx_[i]] = static_cast<int>(i);
            log_norm_.push_back(-0.5 * log_moment(idx_[i]));
            int d = 0;
            for (int e : idx_[i]) d += e;
            degree_.push_back(d);
        }
    }

    int n() const { return n_; }
    double k() const { return k_; }
    int cutoff() const { return D_; }
    int size() const { return static_cast<int>(idx_.size()); }
    const MultiIndex& index(int i) const {
        if (i < 0 || i >= size()) throw IndexError("FockBasis: index out of range");
        return idx_[i];
    }
    int degree(int i) const { return degree_.at(i); }
    int find(const MultiIndex& e) const {
        auto it = lookup_.find(e);
        return it == lookup_.end() ? -1 : it->second;
    }
    // log of sqrt(k^{|e|} / e!)
    double log_norm(int i) const { return log_norm_.at(i); }

    // log of prod_j e_j! / k^{e_j}
    double log_moment(const MultiIndex& e) const {
        double s = 0;
        for (int x : e) s += detail::log_factorial(x) - x * std::log(k_);
        return s;
    }

    std::vector<int> interior(int max_degree) const {
        std::vector<int> out;
        for (int i = 0; i < size(); ++i)
            if (degree_[i] <= max_degree) out.push_back(i);
        return out;
    }

    static long long expected_size(int n, int D) {
        long long r = 1;
        for (int j = 1; j <= 2 * n; ++j) r = r * (D + j) / j;
        return r;
    }

private:
    int n_;
    double k_;
    int D_;
    std::vector<MultiIndex> idx_;
    std::map<MultiIndex, int> lookup_;
    std::vector<double> log_norm_;
    std::vector<int> degree_;
};

struct OperatorMatrix {
    FockBasis basis;
    Eigen::MatrixXcd entries;
};

// dmu_k = (k/pi)^{2n} e^{-k(|v|^2+|xi|^2)} dmu(v,xi) x dmu(zeta) / (pi (1+|zeta|^2)^2)
struct WeightedMeasure {
    int n = 1;
    double k = 1;

    double gaussian_density(const ChartCoords& c) const {
        const double r2 = c.v.squaredNorm() + c.xi.squaredNorm();
        return std::pow(k / std::numbers::pi, 2 * n) * std::exp(-k * r2);
    }
    static double fs_density(cplx zeta) {
        const double d = 1.0 + std::norm(zeta);
        return 1.0 / (std::numbers::pi * d * d);
    }
    double density(const ChartCoords& c) const { return gaussian_density(c) * fs_density(c.zeta); }
};

inline cplx basis_eval(const FockBasis& b, int index, const ChartCoords& c) {
    const MultiIndex& e = b.index(index);
    const int n = b.n();
    cplx val(std::exp(b.log_norm(index)), 0.0);
    for (int l = 0; l < n; ++l) {
        if (e[l]) val *= ipow(c.v[l], e[l]);
        if (e[n + l]) val *= ipow(c.xi[l], e[n + l]);
    }
    return val;
}

// Entry [i, j] = <psi_j, psi_i> from exact Gaussian moments.
inline OperatorMatrix gram_matrix(const FockBasis& b) {
    const int N = b.size();
    Eigen::MatrixXcd G = Eigen::MatrixXcd::Zero(N, N);
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
            if (b.index(i) != b.index(j)) continue;
            G(i, j) = std::exp(b.log_moment(b.index(i)) + b.log_norm(i) + b.log_norm(j));
        }
    return {b, G};
}

using Rational = boost::multiprecision::cpp_rational;
using RationalMatrix = std::vector<std::vector<Rational>>;

// Same as gram_matrix in exact arithmetic; k must be rational.
inline RationalMatrix gram_matrix_exact(int n, const Rational& k, int D) {
    const FockBasis b(n, static_cast<double>(k), D);
    const int N = b.size();
    auto fact = [](int e) {
        Rational f = 1;
        for (int t = 2; t <= e; ++t) f *= t;
        return f;
    };
    auto kpow = [&](int e) {
        Rational p = 1;
        for (int t = 0; t < e; ++t) p *= k;
        return p;
    };
    // norm^2 = k^{|e|} / e!
    std::vector<Rational> normsq(N);
    for (int i = 0; i < N; ++i) {
        Rational v = 1;
        for (int e : b.index(i)) v *= kpow(e) / fact(e);
        normsq[i] = v;
    }
    RationalMatrix G(N, std::vector<Rational>(N, Rational(0)));
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
            const MultiIndex& ei = b.index(i);
            const MultiIndex& ej = b.index(j);
            Rational moment = 1;
            for (size_t s = 0; s < ei.size(); ++s) {
                if (ei[s] != ej[s]) {
                    moment = 0;
                    break;
                }
                moment *= fact(ei[s]) / kpow(ei[s]);
            }
            // moment != 0 forces e_i = e_j, so norm_i norm_j = normsq_i
            if (moment != 0) G[i][j] = moment * normsq[i];
        }
    return G;
}

inline cplx kernel_eval(double k, const ChartCoords& p, const ChartCoords& q) {
    cplx s(0, 0);
    for (int l = 0; l < p.n; ++l) s += p.v[l] * std::conj(q.v[l]) + p.xi[l] * std::conj(q.xi[l]);
    return std::exp(k * s);
}

namespace detail {

// <U e_q, e_p> in one variable, without the global exp(-k|a|^2/2) factor; u = sqrt(k) a.
inline Eigen::MatrixXcd shift_table(cplx u, int D) {
    Eigen::MatrixXcd T = Eigen::MatrixXcd::Zero(D + 1, D + 1);
    const cplx uc = std::conj(u);
    for (int p = 0; p <= D; ++p)
        for (int q = 0; q <= D; ++q) {
            cplx s(0, 0);
            for (int t = 0; t <= std::min(p, q); ++t) {
                const double lc = log_factorial(q) - log_factorial(t) - log_factorial(q - t) - log_factorial(p - t);
                s += std::exp(lc) * ipow(-u, q - t) * ipow(uc, p - t);
            }
            T(p, q) = s * std::exp(0.5 * (log_factorial(p) - log_factorial(q)));
        }
    return T;
}

} // namespace detail

// (U f)(v, xi) = exp(k(v.conj(a) + xi.conj(b)) - k(|a|^2+|b|^2)/2) f(v - a, xi - b)
inline OperatorMatrix shift_matrix(const FockBasis& basis, const CVecN& a, const CVecN& b) {
    const int n = basis.n(), D = basis.cutoff(), N = basis.size();
    if (a.size() != n || b.size() != n) throw InvariantError("shift_matrix: shift dimension mismatch");
    const double k = basis.k();
    const double sk = std::sqrt(k);
    std::vector<Eigen::MatrixXcd> tables;
    for (int l = 0; l < n; ++l) tables.push_back(detail::shift_table(sk * a[l], D));
    for (int l = 0; l < n; ++l) tables.push_back(detail::shift_table(sk * b[l], D));
    const double pref = std::exp(-0.5 * k * (a.squaredNorm() + b.squaredNorm()));
    Eigen::MatrixXcd U(N, N);
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
            cplx v(pref, 0);
            const MultiIndex& ei = basis.index(i);
            const MultiIndex& ej = basis.index(j);
            for (int s = 0; s < 2 * n; ++s) v *= tables[s](ei[s], ej[s]);
            U(i, j) = v;
        }
    return {basis, U};
}

} // namespace twistor

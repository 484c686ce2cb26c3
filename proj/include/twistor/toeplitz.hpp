#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "fock.hpp"
#include "quadrature.hpp"
#include "symbol.hpp"

namespace twistor {

struct QuadratureSpec {
    int hermite_order = 24;
    int fs_radial = 32;
    int fs_angular = 32;
    // nodes whose Gaussian mass against every basis pair is below exp(prune_log_tol) are skipped
    double prune_log_tol = std::log(1e-22);

    static QuadratureSpec defaults(int D) {
        QuadratureSpec q;
        q.hermite_order = std::max(2 * D + 4, 24);
        return q;
    }
    void validate() const {
        if (hermite_order < 2) throw InvariantError("QuadratureSpec: hermite order must be >= 2");
        if (fs_radial < 1 || fs_angular < 1) throw InvariantError("QuadratureSpec: FS orders must be >= 1");
    }
};

// Tensor Gauss-Hermite grid for (k/pi)^{2n} e^{-k(|v|^2+|xi|^2)} over C^{2n},
// split into a v-group (index a) and a xi-group (index b).
class HermiteGrid {
public:
    HermiteGrid(int n, double k, int order, int D, double prune_log_tol = std::log(1e-22)) : n_(n), k_(k), D_(D) {
        const Rule1D gh = gauss_hermite(order);
        const double sk = std::sqrt(k);
        std::vector<cplx> u;
        std::vector<double> w, t2;
        for (int i = 0; i < order; ++i)
            for (int j = 0; j < order; ++j) {
                u.emplace_back(gh.nodes[i] / sk, gh.nodes[j] / sk);
                w.push_back(gh.weights[i] * gh.weights[j] / std::numbers::pi);
                t2.push_back(gh.nodes[i] * gh.nodes[i] + gh.nodes[j] * gh.nodes[j]);
            }
        // group nodes: n complex variables each
        const int per = static_cast<int>(u.size());
        long long count = 1;
        for (int l = 0; l < n; ++l) count *= per;
        group_size_ = static_cast<int>(count);
        coords_.resize(static_cast<size_t>(count) * n);
        weights_.resize(count);
        lambda_.resize(count);
        for (long long a = 0; a < count; ++a) {
            long long r = a;
            double ww = 1, lam = 0;
            for (int l = 0; l < n; ++l) {
                const int idx = static_cast<int>(r % per);
                r /= per;
                coords_[a * n + l] = u[idx];
                ww *= w[idx];
                lam += t2[idx];
            }
            weights_[a] = ww;
            lambda_[a] = lam;
        }
        // lambda = k(|v|^2+|xi|^2); sum over |e|=d of |psi_e|^2 is lambda^d/d!
        keep_.assign(static_cast<size_t>(count) * count, 1);
        const double lgD = std::lgamma(D + 1.0);
        for (long long a = 0; a < count; ++a)
            for (long long b = 0; b < count; ++b) {
                const double lam = lambda_[a] + lambda_[b];
                if (lam > D && -lam + D * std::log(lam) - lgD < prune_log_tol) keep_[a * count + b] = 0;
            }
    }

    int n() const { return n_; }
    double k() const { return k_; }
    int group_size() const { return group_size_; }
    bool kept(int a, int b) const { return keep_[static_cast<size_t>(a) * group_size_ + b] != 0; }
    double weight(int a, int b) const { return weights_[a] * weights_[b]; }
    size_t kept_count() const { return static_cast<size_t>(std::count(keep_.begin(), keep_.end(), 1)); }

    ChartCoords node(int a, int b) const {
        ChartCoords c(n_);
        for (int l = 0; l < n_; ++l) {
            c.v[l] = coords_[static_cast<size_t>(a) * n_ + l];
            c.xi[l] = coords_[static_cast<size_t>(b) * n_ + l];
        }
        return c;
    }
    const cplx* group_coords(int a) const { return &coords_[static_cast<size_t>(a) * n_]; }

    // Weighted values S(a, b) = w_a w_b f(node), zero on pruned nodes.
    template <typename F>
    Eigen::MatrixXcd weighted_values(F&& f) const {
        Eigen::MatrixXcd S = Eigen::MatrixXcd::Zero(group_size_, group_size_);
        for (int a = 0; a < group_size_; ++a)
            for (int b = 0; b < group_size_; ++b)
                if (kept(a, b)) S(a, b) = weight(a, b) * f(node(a, b));
        return S;
    }

private:
    int n_;
    double k_;
    int D_;
    int group_size_ = 0;
    std::vector<cplx> coords_;
    std::vector<double> weights_, lambda_;
    std::vector<char> keep_;
};

namespace detail {

// Multi-indices over n variables with total degree <= D.
inline std::vector<MultiIndex> group_indices(int n, int D) {
    std::vector<MultiIndex> out;
    MultiIndex cur(n, 0);
    for (int d = 0; d <= D; ++d) enumerate_degree(n, d, cur, 0, out);
    return out;
}

// P(a, j*m + i) = phi_j(a) conj(phi_i(a)), phi normalized monomials of one group.
inline Eigen::MatrixXcd pair_table(const HermiteGrid& grid, const std::vector<MultiIndex>& idx) {
    const int n = grid.n(), G = grid.group_size(), m = static_cast<int>(idx.size());
    const double lk = std::log(grid.k());
    std::vector<double> norm(m);
    for (int i = 0; i < m; ++i) {
        double s = 0;
        for (int e : idx[i]) s += 0.5 * (e * lk - log_factorial(e));
        norm[i] = std::exp(s);
    }
    Eigen::MatrixXcd P(G, static_cast<Eigen::Index>(m) * m);
    std::vector<cplx> phi(m);
    for (int a = 0; a < G; ++a) {
        const cplx* u = grid.group_coords(a);
        for (int i = 0; i < m; ++i) {
            cplx v = norm[i];
            for (int l = 0; l < n; ++l)
                if (idx[i][l]) v *= ipow(u[l], idx[i][l]);
            phi[i] = v;
        }
        for (int j = 0; j < m; ++j)
            for (int i = 0; i < m; ++i) P(a, static_cast<Eigen::Index>(j) * m + i) = phi[j] * std::conj(phi[i]);
    }
    return P;
}

} // namespace detail

// Precomputed group tables for one (basis, grid) pair.
class ToeplitzAssembler {
public:
    ToeplitzAssembler(const FockBasis& basis, const HermiteGrid& grid) : basis_(basis), grid_(grid) {
        if (basis.n() != grid.n()) throw InvariantError("ToeplitzAssembler: n mismatch");
        idx_ = detail::group_indices(basis.n(), basis.cutoff());
        P_ = detail::pair_table(grid, idx_);
        std::map<MultiIndex, int> pos;
        for (size_t i = 0; i < idx_.size(); ++i) pos[idx_[i]] = static_cast<int>(i);
        const int n = basis.n(), N = basis.size();
        va_.resize(N);
        xb_.resize(N);
        for (int i = 0; i < N; ++i) {
            const MultiIndex& e = basis.index(i);
            va_[i] = pos.at(MultiIndex(e.begin(), e.begin() + n));
            xb_[i] = pos.at(MultiIndex(e.begin() + n, e.end()));
        }
    }

    const FockBasis& basis() const { return basis_; }
    const HermiteGrid& grid() const { return grid_; }

    OperatorMatrix assemble(const Eigen::MatrixXcd& S) const {
        const Eigen::Index m = static_cast<Eigen::Index>(idx_.size());
        // T(b, pair_v) = sum_a S(a,b) P(a, pair_v);  Mt(pair_xi, pair_v) = sum_b P(b, pair_xi) T(b, pair_v)
        const Eigen::MatrixXcd T = S.transpose() * P_;
        const Eigen::MatrixXcd Mt = P_.transpose() * T;
        const int N = basis_.size();
        Eigen::MatrixXcd M(N, N);
        for (int j = 0; j < N; ++j)
            for (int i = 0; i < N; ++i) M(i, j) = Mt(xb_[j] * m + xb_[i], va_[j] * m + va_[i]);
        return {basis_, M};
    }

    template <typename F>
    OperatorMatrix assemble_function(F&& f) const {
        return assemble(grid_.weighted_values(std::forward<F>(f)));
    }

private:
    FockBasis basis_;
    const HermiteGrid& grid_;
    std::vector<MultiIndex> idx_;
    Eigen::MatrixXcd P_;
    std::vector<int> va_, xb_;
};

inline void check_polynomial_order(const Polynomial& p, int D, int hermite_order) {
    if (2 * hermite_order - 1 < p.max_variable_degree() + 2 * D)
        throw QuadratureOrderError("toeplitz_matrix: Hermite order " + std::to_string(hermite_order) +
                                   " cannot integrate a degree-" + std::to_string(p.max_variable_degree()) +
                                   " polynomial symbol exactly at cutoff " + std::to_string(D));
}

// Entries <T_s psi_j, psi_i> by quadrature; zeta-dependent symbols are integrated over the FS rule too.
inline OperatorMatrix toeplitz_matrix(const Symbol& s, const FockBasis& b, const QuadratureSpec& q) {
    q.validate();
    if (s.n != b.n()) throw InvariantError("toeplitz_matrix: n mismatch");
    if (s.poly) check_polynomial_order(*s.poly, b.cutoff(), q.hermite_order);
    const Symbol eff = s.zeta_independent() ? s : reduce(s, fs_quadrature_build(q.fs_radial, q.fs_angular));
    const HermiteGrid grid(b.n(), b.k(), q.hermite_order, b.cutoff(), q.prune_log_tol);
    const ToeplitzAssembler asmb(b, grid);
    return asmb.assemble_function([&](const ChartCoords& c) {
        const cplx v = eff(c);
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw IntegrationError("toeplitz_matrix: non-finite symbol value at a quadrature node");
        return v;
    });
}

// Closed-form Gaussian moments; entries outside the cutoff are dropped.
inline OperatorMatrix toeplitz_matrix_exact(const Polynomial& p, const FockBasis& b) {
    const int n = b.n(), N = b.size();
    if (p.n() != n) throw InvariantError("toeplitz_matrix_exact: n mismatch");
    Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(N, N);
    MultiIndex ei(2 * n), E(2 * n);
    for (const auto& [e, c] : p.terms()) {
        for (int j = 0; j < N; ++j) {
            const MultiIndex& ej = b.index(j);
            bool ok = true;
            for (int l = 0; l < n && ok; ++l) {
                // v_l: v^{e0 + ej} vbar^{e1 + ei}; xi_l likewise
                const int ev = e[4 * l] + ej[l] - e[4 * l + 1];
                const int ex = e[4 * l + 2] + ej[n + l] - e[4 * l + 3];
                if (ev < 0 || ex < 0) ok = false;
                ei[l] = ev;
                ei[n + l] = ex;
                E[l] = e[4 * l] + ej[l];
                E[n + l] = e[4 * l + 2] + ej[n + l];
            }
            if (!ok) continue;
            const int i = b.find(ei);
            if (i < 0) continue;
            M(i, j) += c * std::exp(b.log_moment(E) + (b.log_norm(i) + b.log_norm(j)));
        }
    }
    return {b, M};
}

inline OperatorMatrix toeplitz_matrix_exact(const Symbol& s, const FockBasis& b) {
    if (!s.poly) throw InvariantError("toeplitz_matrix_exact: symbol is not Polynomial");
    return toeplitz_matrix_exact(*s.poly, b);
}

inline Eigen::MatrixXcd restrict_to(const Eigen::MatrixXcd& M, const std::vector<int>& idx) {
    const Eigen::Index m = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXcd R(m, m);
    for (Eigen::Index j = 0; j < m; ++j)
        for (Eigen::Index i = 0; i < m; ++i) R(i, j) = M(idx[i], idx[j]);
    return R;
}

inline constexpr Eigen::Index kDenseNormLimit = 2000;

inline double operator_norm(const Eigen::MatrixXcd& M) {
    if (M.rows() != M.cols()) throw InvariantError("operator_norm: matrix is not square");
    if (M.size() == 0) return 0.0;
    if (!M.allFinite()) throw InvariantError("operator_norm: non-finite entries");
    if (M.rows() <= kDenseNormLimit) {
        Eigen::BDCSVD<Eigen::MatrixXcd> svd(M);
        return svd.singularValues()(0);
    }
    // largest eigenvalue of M^* M by power iteration
    Eigen::VectorXcd x = Eigen::VectorXcd::Ones(M.rows()).normalized();
    double lam = 0;
    for (int it = 0; it < 10000; ++it) {
        Eigen::VectorXcd y = M.adjoint() * (M * x);
        const double nl = y.norm();
        if (nl == 0) return 0.0;
        x = y / nl;
        if (std::abs(nl - lam) <= 1e-14 * nl) {
            lam = nl;
            break;
        }
        lam = nl;
    }
    return std::sqrt(lam);
}

inline double operator_norm(const OperatorMatrix& M) { return operator_norm(M.entries); }

} // namespace twistor

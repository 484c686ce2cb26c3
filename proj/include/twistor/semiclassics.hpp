#pragma once

#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "symbol.hpp"
#include "toeplitz.hpp"

namespace twistor {

struct FitResult {
    double slope = 0, intercept = 0, stderr_slope = 0;
    int points = 0;
};

// OLS of log r against log k; nonpositive or non-finite r are dropped.
inline FitResult fit_decay(const std::vector<std::pair<double, double>>& points) {
    std::vector<double> X, Y;
    for (const auto& [k, r] : points)
        if (k > 0 && r > 0 && std::isfinite(r)) {
            X.push_back(std::log(k));
            Y.push_back(std::log(r));
        }
    const int m = static_cast<int>(X.size());
    if (m < 3) throw FitError("fit_decay: fewer than 3 positive residuals");
    double mx = 0, my = 0;
    for (int i = 0; i < m; ++i) mx += X[i], my += Y[i];
    mx /= m;
    my /= m;
    double sxx = 0, sxy = 0;
    for (int i = 0; i < m; ++i) {
        sxx += (X[i] - mx) * (X[i] - mx);
        sxy += (X[i] - mx) * (Y[i] - my);
    }
    if (sxx == 0) throw FitError("fit_decay: all k equal");
    FitResult f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ssr = 0;
    for (int i = 0; i < m; ++i) {
        const double e = Y[i] - f.intercept - f.slope * X[i];
        ssr += e * e;
    }
    f.stderr_slope = std::sqrt(ssr / (m - 2) / sxx);
    f.points = m;
    return f;
}

struct ResidualValues {
    double first_order = 0, first_order_full = 0;
    double commutator = 0, commutator_full = 0;
    double commutator_swapped = 0;
    int basis_size = 0;
    int interior_size = 0;
};

struct HarnessOptions {
    int interior_margin = 8;
    double fd_step = kDefaultStep;
};

namespace detail {

inline Symbol ensure_reduced(const Symbol& s, const QuadratureSpec& q) {
    return s.zeta_independent() ? s : reduce(s, fs_quadrature_build(q.fs_radial, q.fs_angular));
}

inline ResidualValues residuals_from(const OperatorMatrix& Mf, const OperatorMatrix& Mg, const OperatorMatrix& Mfg,
                                     const OperatorMatrix& Mcorr, const OperatorMatrix& Mbr,
                                     const OperatorMatrix& Mbr_swapped, double k, const std::vector<int>& interior) {
    const Eigen::MatrixXcd FG = Mf.entries * Mg.entries;
    const Eigen::MatrixXcd GF = Mg.entries * Mf.entries;
    const Eigen::MatrixXcd R1 = FG - Mfg.entries + Mcorr.entries / k;
    const cplx ik(0, k);
    const Eigen::MatrixXcd RC = ik * (FG - GF) - Mbr.entries;
    const Eigen::MatrixXcd RS = ik * (GF - FG) - Mbr_swapped.entries;
    ResidualValues r;
    r.basis_size = Mf.basis.size();
    r.interior_size = static_cast<int>(interior.size());
    r.first_order_full = operator_norm(R1);
    r.commutator_full = operator_norm(RC);
    r.first_order = operator_norm(restrict_to(R1, interior));
    r.commutator = operator_norm(restrict_to(RC, interior));
    r.commutator_swapped = operator_norm(restrict_to(RS, interior));
    return r;
}

} // namespace detail

// Both residuals from one assembly pass. Polynomial pairs use the exact path.
inline ResidualValues semiclassical_residuals(const Symbol& f_in, const Symbol& g_in, double k, int D,
                                              const QuadratureSpec& q, const HarnessOptions& opt = {}) {
    if (f_in.n != g_in.n) throw InvariantError("residuals: n mismatch");
    const FockBasis basis(f_in.n, k, D);
    const std::vector<int> interior = basis.interior(D - opt.interior_margin);
    if (f_in.poly && g_in.poly) {
        const Symbol& f = f_in;
        const Symbol& g = g_in;
        return detail::residuals_from(toeplitz_matrix_exact(f, basis), toeplitz_matrix_exact(g, basis),
                                      toeplitz_matrix_exact(product(f, g), basis),
                                      toeplitz_matrix_exact(correction_symbol(f, g), basis),
                                      toeplitz_matrix_exact(bracket_symbol(f, g), basis),
                                      toeplitz_matrix_exact(bracket_symbol(g, f), basis), k, interior);
    }
    q.validate();
    const Symbol f = detail::ensure_reduced(f_in, q);
    const Symbol g = detail::ensure_reduced(g_in, q);
    const HermiteGrid grid(basis.n(), k, q.hermite_order, D, q.prune_log_tol);
    const ToeplitzAssembler asmb(basis, grid);
    const int G = grid.group_size();
    Eigen::MatrixXcd Sf = Eigen::MatrixXcd::Zero(G, G), Sg = Sf, Sfg = Sf, Sc = Sf, Sb = Sf, Sbs = Sf;
    for (int a = 0; a < G; ++a)
        for (int b = 0; b < G; ++b) {
            if (!grid.kept(a, b)) continue;
            const ChartCoords c = grid.node(a, b);
            const double w = grid.weight(a, b);
            const cplx fv = f(c), gv = g(c);
            const FiberGradient df = fiber_gradient(f, c, opt.fd_step);
            const FiberGradient dg = fiber_gradient(g, c, opt.fd_step);
            Sf(a, b) = w * fv;
            Sg(a, b) = w * gv;
            Sfg(a, b) = w * fv * gv;
            Sc(a, b) = w * correction_from_gradients(df, dg);
            Sb(a, b) = w * bracket_from_gradients(df, dg);
            Sbs(a, b) = w * bracket_from_gradients(dg, df);
        }
    if (!Sf.allFinite() || !Sg.allFinite() || !Sc.allFinite() || !Sb.allFinite())
        throw IntegrationError("residuals: non-finite symbol values");
    return detail::residuals_from(asmb.assemble(Sf), asmb.assemble(Sg), asmb.assemble(Sfg), asmb.assemble(Sc),
                                  asmb.assemble(Sb), asmb.assemble(Sbs), k, interior);
}

inline double residual_first_order(const Symbol& f, const Symbol& g, double k, int D, const QuadratureSpec& q,
                                   const HarnessOptions& opt = {}) {
    return semiclassical_residuals(f, g, k, D, q, opt).first_order;
}

inline double residual_commutator(const Symbol& f, const Symbol& g, double k, int D, const QuadratureSpec& q,
                                  const HarnessOptions& opt = {}) {
    return semiclassical_residuals(f, g, k, D, q, opt).commutator;
}

struct SymbolSpec {
    enum class Type { Bump, Polynomial, Constant };
    Type type = Type::Bump;
    BumpFunction bump;
    Polynomial poly{1};
    cplx constant{1, 0};
};

struct SweepConfig {
    int n = 1;
    SymbolSpec f, g;
    RemovedFiberChart chart = RemovedFiberChart::standard_chart();
    std::vector<double> ks;
    double r_sup = 0;          // 0: derived from the bump pair
    int d_offset = 8;
    int d_fixed = -1;          // >= 0 overrides the schedule
    int hermite_extra = 12;    // H = D + hermite_extra; < 0 selects QuadratureSpec::defaults
    int fs_radial = 32, fs_angular = 32;
    int gl_order = 64;
    HarnessOptions harness;

    void validate() const {
        if (ks.size() < 3) throw ConfigError("sweep: k-list needs at least 3 entries");
        for (size_t i = 0; i < ks.size(); ++i) {
            if (!(ks[i] > 0)) throw ConfigError("sweep: k must be positive");
            if (i > 0 && !(ks[i] > ks[i - 1])) throw ConfigError("sweep: k-list must be strictly increasing");
        }
        if (n < 1 || n > kMaxN) throw ConfigError("sweep: n out of range");
        if (harness.interior_margin < 0) throw ConfigError("sweep: interior_margin must be >= 0");
    }

    double support_radius() const {
        if (r_sup > 0) return r_sup;
        double r = 0;
        for (const SymbolSpec* s : {&f, &g})
            if (s->type == SymbolSpec::Type::Bump) r = std::max(r, s->bump.center.x.norm() + s->bump.radius);
        return r > 0 ? r : 1.0;
    }
    int cutoff(double k) const {
        if (d_fixed >= 0) return d_fixed;
        const double r = support_radius();
        return static_cast<int>(std::ceil(k * r * r - 1e-12)) + d_offset;
    }
    QuadratureSpec quadrature(int D) const {
        QuadratureSpec q = hermite_extra < 0 ? QuadratureSpec::defaults(D) : QuadratureSpec{};
        if (hermite_extra >= 0) q.hermite_order = std::max(2, D + hermite_extra);
        q.fs_radial = fs_radial;
        q.fs_angular = fs_angular;
        return q;
    }
};

inline Symbol make_symbol(const SymbolSpec& s, int n, const RemovedFiberChart& chart, int gl_order) {
    switch (s.type) {
    case SymbolSpec::Type::Bump: return reduce_radial(s.bump, chart, gl_order);
    case SymbolSpec::Type::Polynomial: return Symbol::polynomial(s.poly);
    case SymbolSpec::Type::Constant: return Symbol::constant(n, s.constant);
    }
    throw ConfigError("unknown symbol type");
}

struct SweepRecord {
    double k = 0;
    int D = 0, hermite_order = 0, basis_size = 0, interior_size = 0;
    double res_first_order = 0, res_first_order_full = 0;
    double res_commutator = 0, res_commutator_full = 0, res_commutator_swapped = 0;
    double truncation_leak = 0;
    double wall_ms = 0;
    std::string error;
    bool ok() const { return error.empty(); }
};

struct SweepResult {
    std::vector<SweepRecord> records;
    std::optional<FitResult> fit_first_order, fit_commutator;
    std::string fit_first_order_error, fit_commutator_error;
    bool degenerate = false;
    bool exact_cancellation = false;
    bool first_order_monotone = false;
};

inline constexpr double kExactCancellation = 1e-9;

inline SweepResult run_sweep(const SweepConfig& cfg) {
    cfg.validate();
    const Symbol f = make_symbol(cfg.f, cfg.n, cfg.chart, cfg.gl_order);
    const Symbol g = make_symbol(cfg.g, cfg.n, cfg.chart, cfg.gl_order);
    SweepResult res;
    for (double k : cfg.ks) {
        SweepRecord r;
        r.k = k;
        r.D = cfg.cutoff(k);
        const QuadratureSpec q = cfg.quadrature(r.D);
        r.hermite_order = q.hermite_order;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            const ResidualValues v = semiclassical_residuals(f, g, k, r.D, q, cfg.harness);
            r.basis_size = v.basis_size;
            r.interior_size = v.interior_size;
            r.res_first_order = v.first_order;
            r.res_first_order_full = v.first_order_full;
            r.res_commutator = v.commutator;
            r.res_commutator_full = v.commutator_full;
            r.res_commutator_swapped = v.commutator_swapped;
            r.truncation_leak = std::max(0.0, v.first_order_full - v.first_order);
        } catch (const std::exception& e) {
            r.error = e.what();
        }
        r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        res.records.push_back(r);
    }
    std::vector<std::pair<double, double>> p1, pc;
    bool all_small = true;
    int ok = 0;
    for (const SweepRecord& r : res.records) {
        if (!r.ok()) continue;
        ++ok;
        p1.emplace_back(r.k, r.res_first_order);
        pc.emplace_back(r.k, r.res_commutator);
        if (r.res_first_order > kExactCancellation || r.res_commutator > kExactCancellation) all_small = false;
    }
    res.exact_cancellation = ok > 0 && all_small;
    try {
        res.fit_first_order = fit_decay(p1);
    } catch (const FitError& e) {
        res.fit_first_order_error = e.what();
    }
    try {
        res.fit_commutator = fit_decay(pc);
    } catch (const FitError& e) {
        res.fit_commutator_error = e.what();
    }
    res.degenerate = !res.fit_first_order && !res.fit_commutator;
    res.first_order_monotone = ok == static_cast<int>(res.records.size());
    for (size_t i = 1; i < res.records.size() && res.first_order_monotone; ++i)
        if (!(res.records[i].res_first_order < res.records[i - 1].res_first_order)) res.first_order_monotone = false;
    return res;
}

} // namespace twistor

#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "charts.hpp"
#include "quadrature.hpp"

namespace twistor {

// Slot of a fibre variable inside a Polynomial exponent vector: 4*l + kind.
enum class Slot { V = 0, Vbar = 1, Xi = 2, Xibar = 3 };

inline int slot_index(Slot s, int l) { return 4 * l + static_cast<int>(s); }

class Polynomial {
public:
    using Exponents = std::vector<int>;

    explicit Polynomial(int n = 1) : n_(n) {
        if (n < 1 || n > kMaxN) throw InvariantError("Polynomial: n out of range");
    }

    static Polynomial constant(int n, cplx c) {
        Polynomial p(n);
        p.add_term(Exponents(4 * n, 0), c);
        return p;
    }
    static Polynomial variable(int n, Slot s, int l) {
        Polynomial p(n);
        Exponents e(4 * n, 0);
        e[slot_index(s, l)] = 1;
        p.add_term(e, 1.0);
        return p;
    }
    static Polynomial re_v(int n, int l) { return (variable(n, Slot::V, l) + variable(n, Slot::Vbar, l)) * cplx(0.5, 0); }
    static Polynomial im_v(int n, int l) {
        return (variable(n, Slot::V, l) - variable(n, Slot::Vbar, l)) * cplx(0, -0.5);
    }

    int n() const { return n_; }
    const std::map<Exponents, cplx>& terms() const { return terms_; }

    void add_term(const Exponents& e, cplx c) {
        if (static_cast<int>(e.size()) != 4 * n_) throw InvariantError("Polynomial: exponent length mismatch");
        for (int x : e)
            if (x < 0) throw InvariantError("Polynomial: negative exponent");
        if (c == cplx(0, 0)) return;
        auto [it, inserted] = terms_.emplace(e, c);
        if (!inserted) {
            it->second += c;
            if (it->second == cplx(0, 0)) terms_.erase(it);
        }
    }

    int degree() const {
        int d = 0;
        for (const auto& [e, c] : terms_) {
            int s = 0;
            for (int x : e) s += x;
            d = std::max(d, s);
        }
        return d;
    }
    // Largest total degree in one complex variable (v_l or xi_l with conjugate).
    int max_variable_degree() const {
        int d = 0;
        for (const auto& [e, c] : terms_)
            for (size_t s = 0; s < e.size(); s += 2) d = std::max(d, e[s] + e[s + 1]);
        return d;
    }

    Polynomial operator+(const Polynomial& o) const {
        check(o);
        Polynomial r = *this;
        for (const auto& [e, c] : o.terms_) r.add_term(e, c);
        return r;
    }
    Polynomial operator-(const Polynomial& o) const { return *this + o * cplx(-1, 0); }
    Polynomial operator*(cplx s) const {
        Polynomial r(n_);
        for (const auto& [e, c] : terms_) r.add_term(e, c * s);
        return r;
    }
    Polynomial operator*(const Polynomial& o) const {
        check(o);
        Polynomial r(n_);
        for (const auto& [e1, c1] : terms_)
            for (const auto& [e2, c2] : o.terms_) {
                Exponents e(e1.size());
                for (size_t s = 0; s < e.size(); ++s) e[s] = e1[s] + e2[s];
                r.add_term(e, c1 * c2);
            }
        return r;
    }

    Polynomial conj() const {
        Polynomial r(n_);
        for (const auto& [e, c] : terms_) {
            Exponents f = e;
            for (size_t s = 0; s < f.size(); s += 2) std::swap(f[s], f[s + 1]);
            r.add_term(f, std::conj(c));
        }
        return r;
    }

    Polynomial derivative(int slot) const {
        Polynomial r(n_);
        for (const auto& [e, c] : terms_) {
            if (e[slot] == 0) continue;
            Exponents f = e;
            f[slot] -= 1;
            r.add_term(f, c * double(e[slot]));
        }
        return r;
    }
    Polynomial derivative(Slot s, int l) const { return derivative(slot_index(s, l)); }

    cplx operator()(const ChartCoords& c) const {
        cplx sum(0, 0);
        for (const auto& [e, coef] : terms_) {
            cplx t = coef;
            for (int l = 0; l < n_; ++l) {
                const cplx v = c.v[l], x = c.xi[l];
                if (e[4 * l]) t *= ipow(v, e[4 * l]);
                if (e[4 * l + 1]) t *= ipow(std::conj(v), e[4 * l + 1]);
                if (e[4 * l + 2]) t *= ipow(x, e[4 * l + 2]);
                if (e[4 * l + 3]) t *= ipow(std::conj(x), e[4 * l + 3]);
            }
            sum += t;
        }
        return sum;
    }

    bool operator==(const Polynomial& o) const { return n_ == o.n_ && terms_ == o.terms_; }

private:
    void check(const Polynomial& o) const {
        if (o.n_ != n_) throw InvariantError("Polynomial: n mismatch");
    }
    int n_;
    std::map<Exponents, cplx> terms_;
};

enum class SymbolKind { PulledBack, Reduced, Polynomial };

using RealFunction = std::function<cplx(const RealPoint4n&)>;

struct Symbol {
    SymbolKind kind = SymbolKind::Reduced;
    int n = 1;
    std::function<cplx(const ChartCoords&)> fn;
    std::optional<Polynomial> poly;
    std::optional<RemovedFiberChart> chart;

    cplx operator()(const ChartCoords& c) const { return poly ? (*poly)(c) : fn(c); }
    bool zeta_independent() const { return kind != SymbolKind::PulledBack; }

    static Symbol polynomial(const Polynomial& p) {
        Symbol s;
        s.kind = SymbolKind::Polynomial;
        s.n = p.n();
        s.poly = p;
        return s;
    }
    static Symbol reduced(int n, std::function<cplx(const ChartCoords&)> f) {
        Symbol s;
        s.kind = SymbolKind::Reduced;
        s.n = n;
        s.fn = std::move(f);
        return s;
    }
    static Symbol constant(int n, cplx c) { return polynomial(Polynomial::constant(n, c)); }
};

inline Symbol pull_back(RealFunction h, const RemovedFiberChart& chart, int n) {
    Symbol s;
    s.kind = SymbolKind::PulledBack;
    s.n = n;
    s.chart = chart;
    s.fn = [h = std::move(h), chart](const ChartCoords& c) { return h(point_from_chart(c, chart)); };
    return s;
}

inline Symbol reduce(const Symbol& s, const FSQuadrature& q) {
    if (s.zeta_independent()) return s;
    auto quad = std::make_shared<const FSQuadrature>(q);
    Symbol r = Symbol::reduced(s.n, [s, quad](const ChartCoords& c) {
        ChartCoords at = c;
        cplx sum(0, 0);
        for (size_t j = 0; j < quad->nodes.size(); ++j) {
            at.zeta = quad->nodes[j];
            const cplx val = s(at);
            if (!std::isfinite(val.real()) || !std::isfinite(val.imag()))
                throw IntegrationError("reduce: non-finite symbol value at a quadrature node");
            sum += quad->weights[j] * val;
        }
        return sum;
    });
    r.chart = s.chart;
    return r;
}

struct BumpFunction {
    RealPoint4n center;
    double radius = 1.0;

    double profile(double q) const {
        const double R2 = radius * radius;
        if (!(q < R2)) return 0.0;
        return std::exp(1.0 - 1.0 / (1.0 - q / R2));
    }
    double dist2(const RealPoint4n& x) const { return (x.x - center.x).squaredNorm(); }
    double operator()(const RealPoint4n& x) const { return profile(dist2(x)); }
    RealFunction as_function() const {
        return [b = *this](const RealPoint4n& x) { return cplx(b(x), 0.0); };
    }
};

// Exact fibre reduction of a bump: over fixed (v, xi) the point x is affine in the
// sphere point p, so |x - c|^2 = alpha + l.p and the average is one-dimensional.
inline Symbol reduce_radial(const BumpFunction& bump, const RemovedFiberChart& chart, int gl_order = 64) {
    const int n = bump.center.n;
    const double t = 1.0 / std::sqrt(3.0);
    std::array<std::array<double, 3>, 4> tet{{{t, t, t}, {t, -t, -t}, {-t, t, -t}, {-t, -t, t}}};
    auto nearest = [&](double sgn) {
        double d = 1e300;
        for (const auto& v : tet)
            d = std::min(d, SpherePoint{sgn * v[0], sgn * v[1], sgn * v[2]}.distance(chart.removed));
        return d;
    };
    const double sgn = nearest(1.0) >= nearest(-1.0) ? 1.0 : -1.0;
    std::array<cplx, 4> zs;
    for (int i = 0; i < 4; ++i) {
        for (double& x : tet[i]) x *= sgn;
        zs[i] = chart_zeta(SpherePoint{tet[i][0], tet[i][1], tet[i][2]}, chart);
    }
    auto rule = std::make_shared<const Rule1D>(gauss_legendre(gl_order));
    Symbol s = Symbol::reduced(n, [bump, chart, tet, zs, rule](const ChartCoords& c) {
        ChartCoords at = c;
        double alpha = 0;
        std::array<double, 3> ell{0, 0, 0};
        for (int i = 0; i < 4; ++i) {
            at.zeta = zs[i];
            const double q = bump.dist2(point_from_chart(at, chart));
            alpha += 0.25 * q;
            for (int d = 0; d < 3; ++d) ell[d] += 0.75 * q * tet[i][d];
        }
        const double L = std::sqrt(ell[0] * ell[0] + ell[1] * ell[1] + ell[2] * ell[2]);
        const double R2 = bump.radius * bump.radius;
        const double lo = std::max(0.0, alpha - L);
        const double hi = std::min(alpha + L, R2);
        if (lo >= R2 || hi <= lo) return cplx(0, 0);
        if (L < 1e-300) return cplx(bump.profile(alpha), 0);
        const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
        double sum = 0;
        for (size_t j = 0; j < rule->nodes.size(); ++j) sum += rule->weights[j] * bump.profile(mid + half * rule->nodes[j]);
        return cplx(sum * half / (2.0 * L), 0);
    });
    s.chart = chart;
    return s;
}

// Wirtinger pair (d/du, d/du-bar) of a symbol in one complex coordinate.
struct Wirtinger {
    cplx d{0, 0}, dbar{0, 0};
};

enum class Var { V, Xi, Zeta };

namespace detail {

inline cplx& coord_ref(ChartCoords& c, Var var, int l) {
    if (var == Var::V) return c.v[l];
    if (var == Var::Xi) return c.xi[l];
    return c.zeta;
}

inline Wirtinger poly_wirtinger(const Polynomial& p, const ChartCoords& at, Var var, int l) {
    if (var == Var::Zeta) return {};
    const Slot a = var == Var::V ? Slot::V : Slot::Xi;
    const Slot b = var == Var::V ? Slot::Vbar : Slot::Xibar;
    return {p.derivative(a, l)(at), p.derivative(b, l)(at)};
}

} // namespace detail

inline constexpr double kDefaultStep = 1e-5;

// Central differences with one Richardson step (fourth order).
inline Wirtinger wirtinger(const Symbol& s, const ChartCoords& at, Var var, int l, double step = kDefaultStep) {
    if (s.poly) return detail::poly_wirtinger(*s.poly, at, var, l);
    if (var == Var::Zeta && s.zeta_independent()) return {};
    ChartCoords c = at;
    cplx& u = detail::coord_ref(c, var, l);
    const cplx u0 = u;
    const double h = step * std::max(1.0, std::abs(u0));
    auto central = [&](cplx dir, double hh) {
        u = u0 + dir * hh;
        const cplx fp = s(c);
        u = u0 - dir * hh;
        const cplx fm = s(c);
        u = u0;
        return (fp - fm) / (2.0 * hh);
    };
    auto rich = [&](cplx dir) { return (4.0 * central(dir, 0.5 * h) - central(dir, h)) / 3.0; };
    const cplx fx = rich(cplx(1, 0));
    const cplx fy = rich(cplx(0, 1));
    const cplx I(0, 1);
    return {0.5 * (fx - I * fy), 0.5 * (fx + I * fy)};
}

// Wirtinger derivatives in v_1..v_n, xi_1..xi_n (index l, then n + l).
struct FiberGradient {
    int n = 1;
    std::array<Wirtinger, 2 * kMaxN> g{};

    const Wirtinger& v(int l) const { return g[l]; }
    const Wirtinger& xi(int l) const { return g[n + l]; }
};

inline FiberGradient fiber_gradient(const Symbol& s, const ChartCoords& at, double step = kDefaultStep) {
    FiberGradient fg;
    fg.n = s.n;
    for (int l = 0; l < s.n; ++l) {
        fg.g[l] = wirtinger(s, at, Var::V, l, step);
        fg.g[s.n + l] = wirtinger(s, at, Var::Xi, l, step);
    }
    return fg;
}

inline cplx bracket_from_gradients(const FiberGradient& f, const FiberGradient& g) {
    cplx s(0, 0);
    for (int j = 0; j < 2 * f.n; ++j) s += f.g[j].d * g.g[j].dbar - g.g[j].d * f.g[j].dbar;
    return cplx(0, -1) * s;
}

inline cplx correction_from_gradients(const FiberGradient& f, const FiberGradient& g) {
    cplx s(0, 0);
    for (int j = 0; j < 2 * f.n; ++j) s += f.g[j].d * g.g[j].dbar;
    return s;
}

inline cplx poisson_bracket_fiber(const Symbol& f, const Symbol& g, const ChartCoords& at, double step = kDefaultStep) {
    return bracket_from_gradients(fiber_gradient(f, at, step), fiber_gradient(g, at, step));
}

inline cplx poisson_bracket_full(const Symbol& f, const Symbol& g, const ChartCoords& at, double step = kDefaultStep) {
    const Wirtinger fz = wirtinger(f, at, Var::Zeta, 0, step);
    const Wirtinger gz = wirtinger(g, at, Var::Zeta, 0, step);
    return poisson_bracket_fiber(f, g, at, step) + cplx(0, -1) * (fz.d * gz.dbar - gz.d * fz.dbar);
}

namespace detail {

inline void require_reduced(const Symbol& f, const Symbol& g, const char* what) {
    if (!f.zeta_independent() || !g.zeta_independent())
        throw InvariantError(std::string(what) + ": inputs must be Reduced or Polynomial");
    if (f.n != g.n) throw InvariantError(std::string(what) + ": n mismatch");
}

inline Polynomial poly_correction(const Polynomial& f, const Polynomial& g) {
    Polynomial r(f.n());
    for (int l = 0; l < f.n(); ++l) {
        r = r + f.derivative(Slot::V, l) * g.derivative(Slot::Vbar, l);
        r = r + f.derivative(Slot::Xi, l) * g.derivative(Slot::Xibar, l);
    }
    return r;
}

} // namespace detail

// sum_j d_{v_j} f d_{vbar_j} g + d_{xi_j} f d_{xibar_j} g
inline Symbol correction_symbol(const Symbol& f, const Symbol& g, double step = kDefaultStep) {
    detail::require_reduced(f, g, "correction_symbol");
    if (f.poly && g.poly) return Symbol::polynomial(detail::poly_correction(*f.poly, *g.poly));
    return Symbol::reduced(f.n, [f, g, step](const ChartCoords& c) {
        return correction_from_gradients(fiber_gradient(f, c, step), fiber_gradient(g, c, step));
    });
}

inline Symbol bracket_symbol(const Symbol& f, const Symbol& g, double step = kDefaultStep) {
    detail::require_reduced(f, g, "bracket_symbol");
    if (f.poly && g.poly) {
        const Polynomial a = detail::poly_correction(*f.poly, *g.poly);
        const Polynomial b = detail::poly_correction(*g.poly, *f.poly);
        return Symbol::polynomial((a - b) * cplx(0, -1));
    }
    return Symbol::reduced(f.n, [f, g, step](const ChartCoords& c) { return poisson_bracket_fiber(f, g, c, step); });
}

inline Symbol product(const Symbol& f, const Symbol& g) {
    if (f.n != g.n) throw InvariantError("product: n mismatch");
    if (f.poly && g.poly) return Symbol::polynomial(*f.poly * *g.poly);
    Symbol s = Symbol::reduced(f.n, [f, g](const ChartCoords& c) { return f(c) * g(c); });
    if (!f.zeta_independent() || !g.zeta_independent()) {
        s.kind = SymbolKind::PulledBack;
        s.chart = f.chart ? f.chart : g.chart;
    }
    return s;
}

inline Symbol linear_combination(cplx a, const Symbol& f, cplx b, const Symbol& g) {
    if (f.n != g.n) throw InvariantError("linear_combination: n mismatch");
    if (f.poly && g.poly) return Symbol::polynomial(*f.poly * a + *g.poly * b);
    Symbol s = Symbol::reduced(f.n, [a, b, f, g](const ChartCoords& c) { return a * f(c) + b * g(c); });
    if (!f.zeta_independent() || !g.zeta_independent()) {
        s.kind = SymbolKind::PulledBack;
        s.chart = f.chart ? f.chart : g.chart;
    }
    return s;
}

inline Symbol conjugate(const Symbol& f) {
    if (f.poly) return Symbol::polynomial(f.poly->conj());
    Symbol s = f;
    s.poly.reset();
    s.fn = [f](const ChartCoords& c) { return std::conj(f(c)); };
    return s;
}

} // namespace twistor

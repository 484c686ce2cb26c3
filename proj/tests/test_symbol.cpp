#include <cmath>
#include <numbers>
#include <random>

#include "catch_amalgamated.hpp"
#include "twistor/symbol.hpp"

using namespace twistor;
using Catch::Approx;

namespace {

ChartCoords random_coords(std::mt19937_64& rng, int n, double box) {
    std::uniform_real_distribution<double> U(-box, box);
    ChartCoords c(n);
    for (int l = 0; l < n; ++l) {
        c.v[l] = cplx(U(rng), U(rng));
        c.xi[l] = cplx(U(rng), U(rng));
    }
    c.zeta = cplx(U(rng), U(rng));
    return c;
}

Polynomial random_poly(std::mt19937_64& rng, int n, int terms, int maxdeg) {
    std::uniform_int_distribution<int> E(0, maxdeg);
    std::normal_distribution<double> N;
    Polynomial p(n);
    for (int t = 0; t < terms; ++t) {
        Polynomial::Exponents e(4 * n);
        for (int& x : e) x = E(rng) % 2 ? 0 : E(rng) / 2;
        p.add_term(e, cplx(N(rng), N(rng)));
    }
    return p;
}

RealFunction two_x1() {
    return [](const RealPoint4n& x) { return cplx(2 * x.x[0], 0); };
}

} // namespace

TEST_CASE("pull-back of 2x1 in the standard chart", "[symbol]") {
    const Symbol h = pull_back(two_x1(), RemovedFiberChart::standard_chart(), 1);
    CHECK(h.kind == SymbolKind::PulledBack);
    std::mt19937_64 rng(1);
    for (int t = 0; t < 50; ++t) {
        const ChartCoords c = random_coords(rng, 1, 2.0);
        const cplx v = c.v[0], xi = c.xi[0], z = c.zeta;
        const cplx expect = (v + std::conj(v) - z * std::conj(xi) - std::conj(z) * xi) / (1.0 + std::norm(z));
        CHECK(std::abs(h(c) - expect) <= 1e-13);
    }
    ChartCoords c(1);
    c.v[0] = cplx(0.7, -0.4);
    c.xi[0] = cplx(1.1, 0.3);
    CHECK(std::abs(h(c) - 1.4) <= 1e-15);
    const Symbol k = pull_back([](const RealPoint4n&) { return cplx(3, 0); }, RemovedFiberChart::standard_chart(), 1);
    CHECK(k(c) == cplx(3, 0));
}

TEST_CASE("reduction of 2x1 is Re v", "[symbol]") {
    const FSQuadrature q = fs_quadrature_build(64, 64);
    const Symbol r = reduce(pull_back(two_x1(), RemovedFiberChart::standard_chart(), 1), q);
    CHECK(r.kind == SymbolKind::Reduced);
    std::mt19937_64 rng(2);
    for (int t = 0; t < 50; ++t) {
        ChartCoords c = random_coords(rng, 1, 2.0);
        const cplx a = r(c);
        CHECK(std::abs(a - c.v[0].real()) <= 1e-8);
        c.zeta = cplx(-4, 9);
        CHECK(r(c) == a);
    }
    const Symbol p = Symbol::polynomial(Polynomial::re_v(1, 0));
    const Symbol same = reduce(p, q);
    CHECK(same.poly.has_value());
    CHECK(*same.poly == *p.poly);
}

TEST_CASE("reduction of even powers of 2x1 against the Archimedes form", "[symbol]") {
    const FSQuadrature q = fs_quadrature_build(64, 64);
    std::mt19937_64 rng(3);
    for (int m : {2, 4, 6}) {
        const Symbol h = pull_back([m](const RealPoint4n& x) { return cplx(std::pow(2 * x.x[0], m), 0); },
                                   RemovedFiberChart::standard_chart(), 1);
        const Symbol r = reduce(h, q);
        for (int t = 0; t < 20; ++t) {
            const ChartCoords c = random_coords(rng, 1, 2.0);
            const double a = c.v[0].real();
            const double L = std::sqrt(a * a + std::norm(c.xi[0]));
            const double expect = (std::pow(a + L, m + 1) - std::pow(a - L, m + 1)) / (2 * L * (m + 1));
            CHECK(std::abs(r(c).real() - expect) <= 1e-8 * std::max(1.0, std::abs(expect)));
        }
    }
}

TEST_CASE("reduction is linear and positivity preserving", "[symbol]") {
    const FSQuadrature q = fs_quadrature_build(32, 32);
    const auto chart = RemovedFiberChart::standard_chart();
    const RealFunction f = [](const RealPoint4n& x) { return cplx(x.x[0] * x.x[1], x.x[2]); };
    const RealFunction g = [](const RealPoint4n& x) { return cplx(std::cos(x.x[3]), 0); };
    const RealFunction fg = [&](const RealPoint4n& x) { return 2.0 * f(x) - cplx(0, 3) * g(x); };
    const Symbol rf = reduce(pull_back(f, chart, 1), q), rg = reduce(pull_back(g, chart, 1), q);
    const Symbol rfg = reduce(pull_back(fg, chart, 1), q);
    BumpFunction bump{RealPoint4n(1), 1.0};
    bump.center.x << 0.3, 0, 0, 0;
    const Symbol rb = reduce(pull_back(bump.as_function(), chart, 1), q);
    std::mt19937_64 rng(4);
    for (int t = 0; t < 30; ++t) {
        const ChartCoords c = random_coords(rng, 1, 1.0);
        CHECK(std::abs(rfg(c) - (2.0 * rf(c) - cplx(0, 3) * rg(c))) <= 1e-13);
        CHECK(rb(c).real() >= 0.0);
    }
}

TEST_CASE("reduction is stable under quadrature refinement", "[symbol]") {
    const auto chart = RemovedFiberChart::standard_chart();
    const RealFunction f = [](const RealPoint4n& x) { return cplx(std::exp(-x.x.squaredNorm()), 0); };
    const Symbol h = pull_back(f, chart, 1);
    const Symbol a = reduce(h, fs_quadrature_build(64, 64)), b = reduce(h, fs_quadrature_build(96, 96));
    std::mt19937_64 rng(5);
    for (int t = 0; t < 20; ++t) {
        const ChartCoords c = random_coords(rng, 1, 1.5);
        CHECK(std::abs(a(c) - b(c)) <= 1e-8);
    }
}

TEST_CASE("non-finite values raise an integration error", "[symbol]") {
    const Symbol h = pull_back([](const RealPoint4n&) { return cplx(std::nan(""), 0); },
                               RemovedFiberChart::standard_chart(), 1);
    const Symbol r = reduce(h, fs_quadrature_build(4, 4));
    CHECK_THROWS_AS(r(ChartCoords(1)), IntegrationError);
}

TEST_CASE("radial bump reduction matches FS quadrature", "[symbol]") {
    const FSQuadrature q = fs_quadrature_build(256, 128);
    std::mt19937_64 rng(6);
    for (const auto& chart : {RemovedFiberChart::standard_chart(), RemovedFiberChart::from_zeta0(cplx(1, 1)),
                              RemovedFiberChart::from_zeta0(cplx(-0.5, 0.2), 0.7)}) {
        BumpFunction bump{RealPoint4n(1), 1.0};
        bump.center.x << 0.35, 0, 0, 0.1;
        const Symbol exact = reduce_radial(bump, chart);
        const Symbol quad = reduce(pull_back(bump.as_function(), chart, 1), q);
        double err = 0;
        for (int t = 0; t < 30; ++t) {
            const ChartCoords c = random_coords(rng, 1, 0.9);
            err = std::max(err, std::abs(exact(c) - quad(c)));
        }
        CHECK(err <= 1e-5);
    }
}

TEST_CASE("radial reduction of a centred bump does not depend on psi", "[symbol]") {
    BumpFunction bump{RealPoint4n(1), 1.0};
    const Symbol a = reduce_radial(bump, RemovedFiberChart::from_zeta0(0.0, std::numbers::pi / 2));
    const Symbol b = reduce_radial(bump, RemovedFiberChart::from_zeta0(0.0, 0.3));
    std::mt19937_64 rng(7);
    for (int t = 0; t < 30; ++t) {
        const ChartCoords at = random_coords(rng, 1, 0.8);
        CHECK(std::abs(a(at) - b(at)) <= 1e-12);
    }
}

TEST_CASE("Poisson bracket values", "[symbol]") {
    const Symbol v = Symbol::polynomial(Polynomial::variable(1, Slot::V, 0));
    const Symbol vb = Symbol::polynomial(Polynomial::variable(1, Slot::Vbar, 0));
    const Symbol re = Symbol::polynomial(Polynomial::re_v(1, 0));
    const Symbol im = Symbol::polynomial(Polynomial::im_v(1, 0));
    std::mt19937_64 rng(8);
    for (int t = 0; t < 10; ++t) {
        const ChartCoords c = random_coords(rng, 1, 2.0);
        CHECK(poisson_bracket_full(v, vb, c) == cplx(0, -1));
        CHECK(std::abs(poisson_bracket_fiber(re, im, c) - 0.5) <= 1e-15);
        CHECK(std::abs(poisson_bracket_fiber(im, re, c) + 0.5) <= 1e-15);
    }
    const Symbol b = bracket_symbol(re, im);
    REQUIRE(b.poly.has_value());
    CHECK(*b.poly == Polynomial::constant(1, 0.5));
}

TEST_CASE("brackets are antisymmetric and bilinear", "[symbol]") {
    std::mt19937_64 rng(9);
    for (int t = 0; t < 20; ++t) {
        const Symbol f = Symbol::polynomial(random_poly(rng, 2, 5, 3));
        const Symbol g = Symbol::polynomial(random_poly(rng, 2, 5, 3));
        const Symbol h = Symbol::polynomial(random_poly(rng, 2, 5, 3));
        const ChartCoords c = random_coords(rng, 2, 1.0);
        CHECK(poisson_bracket_full(f, f, c) == cplx(0, 0));
        CHECK(std::abs(poisson_bracket_fiber(f, g, c) + poisson_bracket_fiber(g, f, c)) <= 1e-12);
        const cplx a(0.3, -1.2);
        const Symbol fh = linear_combination(a, f, 1.0, h);
        const cplx lhs = poisson_bracket_fiber(fh, g, c);
        const cplx rhs = a * poisson_bracket_fiber(f, g, c) + poisson_bracket_fiber(h, g, c);
        CHECK(std::abs(lhs - rhs) <= 1e-11 * std::max(1.0, std::abs(lhs)));
    }
    // random reduced (non-polynomial) symbol: {f,f} vanishes identically with FD derivatives
    const Symbol r = Symbol::reduced(1, [](const ChartCoords& c) { return std::exp(-std::norm(c.v[0]) + c.xi[0].real()); });
    for (int t = 0; t < 10; ++t) {
        const ChartCoords c = random_coords(rng, 1, 1.0);
        CHECK(poisson_bracket_full(r, r, c) == cplx(0, 0));
        CHECK(poisson_bracket_full(r, conjugate(r), c) == poisson_bracket_fiber(r, conjugate(r), c));
    }
}

TEST_CASE("Leibniz rule on polynomial triples is exact", "[symbol]") {
    std::mt19937_64 rng(10);
    for (int t = 0; t < 20; ++t) {
        const Symbol f = Symbol::polynomial(random_poly(rng, 1, 4, 3));
        const Symbol g = Symbol::polynomial(random_poly(rng, 1, 4, 3));
        const Symbol h = Symbol::polynomial(random_poly(rng, 1, 4, 3));
        const Symbol lhs = bracket_symbol(f, product(g, h));
        const Symbol rhs = linear_combination(1.0, product(bracket_symbol(f, g), h), 1.0, product(g, bracket_symbol(f, h)));
        const Polynomial diff = *lhs.poly - *rhs.poly;
        double worst = 0;
        for (const auto& [e, c] : diff.terms()) worst = std::max(worst, std::abs(c));
        CHECK(worst <= 1e-12);
    }
}

TEST_CASE("correction symbol values", "[symbol]") {
    const Symbol v = Symbol::polynomial(Polynomial::variable(1, Slot::V, 0));
    const Symbol vb = Symbol::polynomial(Polynomial::variable(1, Slot::Vbar, 0));
    const Symbol re = Symbol::polynomial(Polynomial::re_v(1, 0));
    CHECK(*correction_symbol(v, vb).poly == Polynomial::constant(1, 1.0));
    CHECK(*correction_symbol(re, re).poly == Polynomial::constant(1, 0.25));
    // real f: sum |d_v f|^2 + |d_xi f|^2 >= 0
    const Symbol f = Symbol::reduced(2, [](const ChartCoords& c) {
        return cplx(std::sin(c.v[0].real() * c.xi[1].imag()) + std::norm(c.v[1]), 0);
    });
    const Symbol corr = correction_symbol(f, f);
    std::mt19937_64 rng(11);
    for (int t = 0; t < 30; ++t) {
        const cplx val = corr(random_coords(rng, 2, 1.0));
        CHECK(val.real() >= 0);
        CHECK(std::abs(val.imag()) <= 1e-8);
    }
    const Symbol pb = pull_back(two_x1(), RemovedFiberChart::standard_chart(), 1);
    CHECK_THROWS_AS(correction_symbol(pb, v), InvariantError);
}

TEST_CASE("finite-difference gradients match exact differentiation", "[symbol]") {
    std::mt19937_64 rng(12);
    for (int t = 0; t < 20; ++t) {
        const Polynomial p = random_poly(rng, 2, 6, 4);
        const Symbol exact = Symbol::polynomial(p);
        const Symbol fd = Symbol::reduced(2, [p](const ChartCoords& c) { return p(c); });
        const ChartCoords c = random_coords(rng, 2, 1.0);
        const FiberGradient a = fiber_gradient(exact, c), b = fiber_gradient(fd, c);
        for (int j = 0; j < 4; ++j) {
            CHECK(std::abs(a.g[j].d - b.g[j].d) <= 1e-9 * std::max(1.0, std::abs(a.g[j].d)));
            CHECK(std::abs(a.g[j].dbar - b.g[j].dbar) <= 1e-9 * std::max(1.0, std::abs(a.g[j].dbar)));
        }
    }
}

TEST_CASE("polynomial algebra", "[symbol]") {
    const Polynomial v = Polynomial::variable(1, Slot::V, 0), vb = Polynomial::variable(1, Slot::Vbar, 0);
    CHECK((v * vb).degree() == 2);
    CHECK((v * vb).max_variable_degree() == 2);
    CHECK((v - v).terms().empty());
    CHECK(v.conj() == vb);
    CHECK((v * v * vb).derivative(Slot::V, 0) == v * vb * cplx(2, 0));
    CHECK_THROWS_AS(Polynomial(2) + Polynomial(1), InvariantError);
    ChartCoords c(1);
    c.v[0] = cplx(1, 2);
    CHECK((v * vb)(c) == cplx(5, 0));
}

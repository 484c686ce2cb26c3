#include <cmath>
#include <numbers>

#include "catch_amalgamated.hpp"
#include "twistor/quadrature.hpp"

using namespace twistor;
using Catch::Approx;

TEST_CASE("Gauss-Legendre integrates polynomials exactly", "[quadrature]") {
    for (int n : {1, 2, 5, 16, 64}) {
        const Rule1D r = gauss_legendre(n);
        for (int d = 0; d <= 2 * n - 1 && d <= 40; ++d) {
            double s = 0;
            for (int i = 0; i < n; ++i) s += r.weights[i] * std::pow(r.nodes[i], d);
            const double exact = d % 2 ? 0.0 : 2.0 / (d + 1);
            CHECK(s == Approx(exact).margin(1e-14));
        }
    }
}

TEST_CASE("Gauss-Hermite moments", "[quadrature]") {
    for (int n : {1, 2, 7, 24, 60}) {
        const Rule1D r = gauss_hermite(n);
        for (int i = 1; i < n; ++i) CHECK(r.nodes[i] > r.nodes[i - 1]);
        for (int i = 0; i < n; ++i) CHECK(std::abs(r.nodes[i] + r.nodes[n - 1 - i]) <= 1e-13 * std::max(1.0, std::abs(r.nodes[i])));
        // int t^{2m} e^{-t^2} = Gamma(m + 1/2); odd moments are checked against int |t|^d e^{-t^2}
        for (int d = 0; d <= std::min(2 * n - 1, 30); ++d) {
            double s = 0;
            for (int i = 0; i < n; ++i) s += r.weights[i] * std::pow(r.nodes[i], d);
            const double exact = d % 2 ? 0.0 : std::tgamma(d / 2 + 0.5);
            const double scale = std::tgamma(0.5 * (d + 1));
            CHECK(std::abs(s - exact) <= 1e-12 * scale);
        }
    }
}

TEST_CASE("FS quadrature weights and moments", "[quadrature]") {
    const FSQuadrature q = fs_quadrature_build(16, 16);
    double total = 0, inv = 0;
    std::complex<double> first(0, 0);
    for (size_t i = 0; i < q.nodes.size(); ++i) {
        CHECK(q.weights[i] > 0);
        total += q.weights[i];
        inv += q.weights[i] / (1 + std::norm(q.nodes[i]));
        first += q.weights[i] * q.nodes[i];
    }
    CHECK(total == Approx(1.0).margin(1e-14));
    CHECK(inv == Approx(0.5).margin(1e-14));
    CHECK(std::abs(first) <= 1e-14);
    const FSQuadrature one = fs_quadrature_build(1, 1);
    CHECK(one.weights[0] == Approx(1.0).margin(1e-15));
    CHECK_THROWS_AS(fs_quadrature_build(0, 4), InvariantError);
}

TEST_CASE("FS quadrature against a closed-form rational integrand", "[quadrature]") {
    // int 1/(1+|z|^2)^3 dFS = int_0^1 (1-s)^3 ds = 1/4
    const FSQuadrature q = fs_quadrature_build(8, 4);
    double s = 0;
    for (size_t i = 0; i < q.nodes.size(); ++i) s += q.weights[i] / std::pow(1 + std::norm(q.nodes[i]), 3);
    CHECK(s == Approx(0.25).margin(1e-15));
}

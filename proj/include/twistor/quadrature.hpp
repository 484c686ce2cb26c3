#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <utility>
#include <vector>

#include "error.hpp"

namespace twistor {

struct Rule1D {
    std::vector<double> nodes;
    std::vector<double> weights;
};

namespace detail {

// P_n(x) and P_n'(x)
inline std::pair<double, double> legendre(int n, double x) {
    double p0 = 1, p1 = x;
    for (int j = 2; j <= n; ++j) {
        const double p2 = ((2 * j - 1) * x * p1 - (j - 1) * p0) / j;
        p0 = p1;
        p1 = p2;
    }
    return {p1, n * (x * p1 - p0) / (x * x - 1)};
}

// Orthonormal Hermite function value and derivative factor at z.
inline std::pair<double, double> hermite(int n, double z) {
    double p1 = std::pow(std::numbers::pi, -0.25), p2 = 0;
    for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(double(j) / (j + 1)) * p3;
    }
    return {p1, std::sqrt(2.0 * n) * p2};
}

} // namespace detail

// Gauss-Legendre on [-1, 1].
inline Rule1D gauss_legendre(int n) {
    if (n < 1) throw InvariantError("gauss_legendre: order < 1");
    Rule1D r;
    r.nodes.resize(n);
    r.weights.resize(n);
    for (int i = 0; i < n / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        for (int it = 0; it < 100; ++it) {
            auto [p, dp] = detail::legendre(n, x);
            const double dx = p / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        const double dp = detail::legendre(n, x).second;
        const double w = 2.0 / ((1 - x * x) * dp * dp);
        r.nodes[i] = -x;
        r.nodes[n - 1 - i] = x;
        r.weights[i] = w;
        r.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) {
        const double dp = detail::legendre(n, 0.0).second;
        r.nodes[n / 2] = 0.0;
        r.weights[n / 2] = 2.0 / (dp * dp);
    }
    return r;
}

// Gauss-Hermite for weight exp(-t^2), Newton on orthonormal Hermite functions.
inline Rule1D gauss_hermite(int n) {
    if (n < 1) throw InvariantError("gauss_hermite: order < 1");
    Rule1D r;
    r.nodes.resize(n);
    r.weights.resize(n);
    double z = 0;
    for (int i = 0; i < (n + 1) / 2; ++i) {
        if (i == 0) z = std::sqrt(2.0 * n + 1) - 1.85575 * std::pow(2.0 * n + 1, -1.0 / 6.0);
        else if (i == 1) z -= 1.14 * std::pow(double(n), 0.426) / z;
        else if (i == 2) z = 1.86 * z - 0.86 * r.nodes[0];
        else if (i == 3) z = 1.91 * z - 0.91 * r.nodes[1];
        else z = 2.0 * z - r.nodes[i - 2];
        for (int it = 0; it < 200; ++it) {
            auto [p, pp] = detail::hermite(n, z);
            const double dz = p / pp;
            z -= dz;
            if (std::abs(dz) <= 1e-15 * std::max(1.0, std::abs(z))) break;
        }
        const double pp = detail::hermite(n, z).second;
        r.nodes[i] = z;
        r.nodes[n - 1 - i] = -z;
        r.weights[i] = 2.0 / (pp * pp);
        r.weights[n - 1 - i] = r.weights[i];
    }
    if (n % 2 == 1) r.nodes[n / 2] = 0.0;
    // ascending order
    std::vector<double> x(n), w(n);
    for (int i = 0; i < n; ++i) {
        x[i] = r.nodes[n - 1 - i];
        w[i] = r.weights[n - 1 - i];
    }
    return {x, w};
}

// Nodes on C for the probability measure dmu(zeta) / (pi (1+|zeta|^2)^2).
struct FSQuadrature {
    int radial = 0, angular = 0;
    std::vector<std::complex<double>> nodes;
    std::vector<double> weights;
};

inline FSQuadrature fs_quadrature_build(int radial, int angular) {
    if (radial < 1 || angular < 1) throw InvariantError("fs_quadrature_build: orders must be >= 1");
    const Rule1D gl = gauss_legendre(radial);
    FSQuadrature q;
    q.radial = radial;
    q.angular = angular;
    q.nodes.reserve(static_cast<size_t>(radial) * angular);
    q.weights.reserve(static_cast<size_t>(radial) * angular);
    for (int i = 0; i < radial; ++i) {
        const double s = 0.5 * (gl.nodes[i] + 1.0);
        const double rho = std::sqrt(s / (1.0 - s));
        const double w = 0.5 * gl.weights[i] / angular;
        for (int j = 0; j < angular; ++j) {
            const double th = 2.0 * std::numbers::pi * j / angular;
            q.nodes.push_back(std::polar(rho, th));
            q.weights.push_back(w);
        }
    }
    return q;
}

} // namespace twistor

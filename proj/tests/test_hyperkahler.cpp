#include <random>

#include "catch_amalgamated.hpp"
#include "twistor/hyperkahler.hpp"

using namespace twistor;
using Catch::Approx;

namespace {

SpherePoint random_sphere(std::mt19937_64& rng) {
    std::normal_distribution<double> N;
    double a = N(rng), b = N(rng), c = N(rng);
    const double r = std::sqrt(a * a + b * b + c * c);
    return {a / r, b / r, c / r};
}

Eigen::VectorXd random_vec(std::mt19937_64& rng, int d) {
    std::normal_distribution<double> N;
    Eigen::VectorXd v(d);
    for (int i = 0; i < d; ++i) v[i] = N(rng);
    return v;
}

} // namespace

TEST_CASE("structure matrices of I and J", "[hyperkahler]") {
    Eigen::Matrix4d I;
    I << 0, -1, 0, 0, 1, 0, 0, 0, 0, 0, 0, -1, 0, 0, 1, 0;
    Eigen::Matrix4d J;
    J << 0, 0, -1, 0, 0, 0, 0, 1, 1, 0, 0, 0, 0, -1, 0, 0;
    CHECK(structure_matrix({1, 0, 0}, 1).matrix == Eigen::MatrixXd(I));
    CHECK(structure_matrix({0, 1, 0}, 1).matrix == Eigen::MatrixXd(J));
}

TEST_CASE("I takes d/dx1 to d/dx2 and aI+bJ+cK acts as a,b,c", "[hyperkahler]") {
    const SpherePoint s = SpherePoint::make(0.6, 0.0, 0.8);
    const Eigen::MatrixXd A = structure_matrix(s, 1).matrix;
    Eigen::VectorXd e1 = Eigen::VectorXd::Zero(4);
    e1[0] = 1;
    const Eigen::VectorXd img = A * e1;
    CHECK(img[0] == 0.0);
    CHECK(img[1] == Approx(0.6));
    CHECK(img[2] == 0.0);
    CHECK(img[3] == Approx(0.8));
}

TEST_CASE("quaternion relations are exact", "[hyperkahler]") {
    for (int n = 1; n <= 3; ++n) {
        const auto I = matrix_I(n), J = matrix_J(n), K = matrix_K(n);
        const auto Id = Eigen::MatrixXd::Identity(4 * n, 4 * n);
        CHECK(I * J == K);
        CHECK(J * I == -K);
        CHECK(J * K == I);
        CHECK(K * I == J);
        CHECK(I * I == -Id);
        CHECK(J * J == -Id);
        CHECK(K * K == -Id);
    }
}

TEST_CASE("A squared is minus identity and A is orthogonal", "[hyperkahler]") {
    std::mt19937_64 rng(7);
    for (int n = 1; n <= 3; ++n)
        for (int t = 0; t < 50; ++t) {
            const auto A = structure_matrix(random_sphere(rng), n).matrix;
            const auto Id = Eigen::MatrixXd::Identity(4 * n, 4 * n);
            CHECK((A * A + Id).cwiseAbs().maxCoeff() <= 1e-13);
            CHECK((A.transpose() * A - Id).cwiseAbs().maxCoeff() <= 1e-13);
        }
}

TEST_CASE("non-unit sphere point is rejected", "[hyperkahler]") {
    CHECK_THROWS_AS(structure_matrix({1, 1, 0}, 1), InvariantError);
    CHECK_THROWS_AS(SpherePoint::make(0.5, 0, 0), InvariantError);
}

TEST_CASE("Kahler forms in coordinates", "[hyperkahler]") {
    auto dx = [](int i, int j) { return TwoForm4n::basis(4, i - 1, j - 1).coeff; };
    CHECK(kahler_form({1, 0, 0}, 1).coeff == dx(1, 2) + dx(3, 4));
    CHECK(kahler_form({0, 1, 0}, 1).coeff == dx(1, 3) + dx(4, 2));
    CHECK(kahler_form({0, 0, 1}, 1).coeff == dx(1, 4) + dx(2, 3));
}

TEST_CASE("omega_M for n = 1 has dx1^dx2 coefficient a", "[hyperkahler]") {
    auto dx = [](int i, int j) { return TwoForm4n::basis(4, i - 1, j - 1).coeff; };
    std::mt19937_64 rng(11);
    for (int t = 0; t < 20; ++t) {
        const SpherePoint s = random_sphere(rng);
        const Eigen::MatrixXd expect = s.a * dx(1, 2) + s.b * dx(1, 3) + s.c * dx(1, 4) + s.c * dx(2, 3) -
                                       s.b * dx(2, 4) + s.a * dx(3, 4);
        const auto M = omega_m_fiberwise(s, 1).coeff;
        CHECK((M - expect).cwiseAbs().maxCoeff() <= 1e-15);
        CHECK(M(0, 1) == s.a);
        const Eigen::MatrixXd lin = s.a * kahler_form({1, 0, 0}, 1).coeff + s.b * kahler_form({0, 1, 0}, 1).coeff +
                                    s.c * kahler_form({0, 0, 1}, 1).coeff;
        CHECK((M - lin).cwiseAbs().maxCoeff() <= 1e-15);
    }
    CHECK(omega_m_fiberwise({1, 0, 0}, 1).coeff == kahler_form({1, 0, 0}, 1).coeff);
}

TEST_CASE("omega_A is antisymmetric and compatible with A", "[hyperkahler]") {
    std::mt19937_64 rng(3);
    for (int n = 1; n <= 3; ++n)
        for (int t = 0; t < 20; ++t) {
            const SpherePoint s = random_sphere(rng);
            const auto w = kahler_form(s, n);
            const auto A = structure_matrix(s, n).matrix;
            CHECK(w.coeff == -w.coeff.transpose());
            const Eigen::VectorXd X = random_vec(rng, 4 * n), Y = random_vec(rng, 4 * n);
            CHECK(w(X, Y) == Approx(-w(Y, X)).margin(1e-13));
            const Eigen::VectorXd AX = A * X;
            CHECK(w(X, AX) == Approx(AX.squaredNorm()).epsilon(1e-13));
            CHECK(w(X, AX) == Approx(X.squaredNorm()).epsilon(1e-13));
        }
}

TEST_CASE("Pfaffian of omega_I is 1 and zero form gives 0", "[hyperkahler]") {
    CHECK(top_wedge_coefficient(kahler_form({1, 0, 0}, 1)) == 1.0);
    CHECK(top_wedge_coefficient(TwoForm4n{Eigen::MatrixXd::Zero(4, 4)}) == 0.0);
}

TEST_CASE("Pfaffian is constant over the sphere of structures", "[hyperkahler]") {
    std::mt19937_64 rng(5);
    for (int n = 1; n <= 4; ++n) {
        const double ref = top_wedge_coefficient(kahler_form({1, 0, 0}, n));
        CHECK(std::abs(ref) == Approx(1.0));
        for (int t = 0; t < 100; ++t) {
            const double v = top_wedge_coefficient(kahler_form(random_sphere(rng), n));
            CHECK(std::abs(v - ref) <= 1e-12 * std::abs(ref));
        }
    }
}

TEST_CASE("Pfaffian algorithms agree and square to the determinant", "[hyperkahler]") {
    std::mt19937_64 rng(9);
    for (int m : {2, 4, 6, 8, 10, 12}) {
        Eigen::MatrixXd B = Eigen::MatrixXd::Zero(m, m);
        std::normal_distribution<double> N;
        for (int i = 0; i < m; ++i)
            for (int j = i + 1; j < m; ++j) {
                B(i, j) = N(rng);
                B(j, i) = -B(i, j);
            }
        const double pe = pfaffian(B);
        const double pl = detail::pfaffian_ltl(B);
        CHECK(pl == Approx(pe).epsilon(1e-10));
        CHECK(pe * pe == Approx(B.determinant()).epsilon(1e-9));
    }
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(16, 16);
    std::normal_distribution<double> N;
    for (int i = 0; i < 16; ++i)
        for (int j = i + 1; j < 16; ++j) {
            B(i, j) = N(rng);
            B(j, i) = -B(i, j);
        }
    const double p = pfaffian(B);
    CHECK(p * p == Approx(B.determinant()).epsilon(1e-9));
}

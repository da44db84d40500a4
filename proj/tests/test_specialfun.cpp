#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "volcorr/specialfun.hpp"

#include <cmath>
#include <vector>

using namespace volcorr;

namespace {

double rel_err(double got, double want) {
    return std::fabs(got - want) / std::fabs(want);
}

std::vector<double> geom_grid(double lo, double hi, int n) {
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i) g[i] = lo * std::pow(hi / lo, double(i) / (n - 1));
    return g;
}

}  // namespace

TEST_CASE("eval_S spot values") {
    CHECK(eval_S(0.0) == 1.0);
    CHECK(rel_err(eval_S(1.0), 0.92245223629157168) < 1e-14);
    CHECK(rel_err(eval_S(std::sqrt(2.0)), 0.8548885798394663) < 1e-14);
    CHECK(rel_err(eval_S(50.0), 1.3887943864964020e-10) < 1e-13);
    // defining relation S(u)^2 sinh(u) = u away from the overflow range
    for (double u : geom_grid(1e-4, 200.0, 60)) {
        double s = eval_S(u);
        if (u <= 700.0) CHECK(rel_err(s * s * std::sinh(u), u) < 1e-12);
    }
}

TEST_CASE("eval_S branch consistency at the seams") {
    // series vs naive near 1e-3
    for (double u : {0.9e-3, 1.0e-3, 1.1e-3}) {
        double u2 = u * u;
        double series = 1.0 - u2 / 12.0 + u2 * u2 / 160.0;
        double naive = std::sqrt(u / std::sinh(u));
        CHECK(rel_err(series, naive) < 1e-12);
        CHECK(rel_err(eval_S(u), naive) < 1e-12);
    }
    // naive vs log form near 30
    for (double u : {29.0, 30.0, 31.0}) {
        double naive = std::sqrt(u / std::sinh(u));
        double logform = std::exp(0.5 * (std::log(2.0 * u) - u - std::log1p(-std::exp(-2.0 * u))));
        CHECK(rel_err(naive, logform) < 1e-13);
        CHECK(rel_err(eval_S(u), naive) < 1e-13);
    }
}

TEST_CASE("eval_S monotone decreasing with range (0, 1]") {
    double prev = eval_S(0.0);
    CHECK(prev == 1.0);
    for (double u : geom_grid(1e-6, 500.0, 200)) {
        double s = eval_S(u);
        CHECK(s > 0.0);
        CHECK(s < prev);
        prev = s;
    }
}

TEST_CASE("eval_S_ld matches eval_S") {
    for (double u : geom_grid(1e-5, 100.0, 80))
        CHECK(rel_err(static_cast<double>(eval_S_ld(u)), eval_S(u)) < 1e-14);
    CHECK(static_cast<double>(eval_S_ld(0.0L)) == 1.0);
}

TEST_CASE("eval_T spot values and limits") {
    CHECK(eval_T(0.0) == -1.0 / 6.0);
    CHECK(rel_err(eval_T(1.0), -0.15651764274966565) < 1e-14);
    CHECK(rel_err(eval_T(2.0), -0.13432868018188703) < 1e-14);
    // tiny argument: series leading correction c^2/90
    CHECK(rel_err(eval_T(1e-6), -1.0 / 6.0 + 1e-12 / 90.0) < 1e-15);
    // large argument: T ~ (1 - c)/(2 c^2) -> 0 from below
    CHECK(eval_T(1e8) < 0.0);
    CHECK(std::fabs(eval_T(1e8) - (0.5 / 1e16 - 1.0 / 2e8)) < 1e-22);
}

TEST_CASE("eval_T branch consistency at the seam") {
    for (double c : {0.09, 0.1, 0.11}) {
        double c2 = c * c;
        double series =
            -1.0 / 6.0 + c2 * (1.0 / 90.0 + c2 * (-1.0 / 945.0 + c2 * (1.0 / 9450.0 - c2 / 93555.0)));
        double naive = 0.5 / (c * c) - 1.0 / std::tanh(c) / (2.0 * c);
        CHECK(rel_err(series, naive) < 1e-12);
        CHECK(rel_err(eval_T(c), series) < 1e-12);
    }
}

TEST_CASE("eval_T monotone increasing with range [-1/6, 0)") {
    double prev = eval_T(0.0);
    for (double c : geom_grid(1e-5, 100.0, 150)) {
        double t = eval_T(c);
        CHECK(t < 0.0);
        CHECK(t >= -1.0 / 6.0);
        CHECK(t > prev);
        prev = t;
    }
}

TEST_CASE("deriv_T matches finite differences and the frozen value") {
    CHECK(deriv_T(0.0) == 0.0);
    CHECK(rel_err(deriv_T(1.0), 0.0185484732328210) < 1e-12);
    for (double c : {0.05, 0.3, 0.5, 1.0, 2.0, 5.0, 10.0}) {
        double h = 1e-5 * std::max(1.0, c);
        double fd = (eval_T(c + h) - eval_T(c - h)) / (2.0 * h);
        CHECK(rel_err(deriv_T(c), fd) < 1e-7);
    }
}

TEST_CASE("cpair spot values and invariants") {
    CPair c = cpair({3.0, 4.0, 0.5});
    CHECK(rel_err(c.c_plus, 4.4097870690913073) < 1e-14);
    CHECK(rel_err(c.c_minus, 2.3566454984310003) < 1e-14);
    for (double b1 : {0.3, 1.0, 2.5}) {
        for (double b2 : {0.4, 1.0, 3.5}) {
            for (double a : {-0.9, -0.2, 0.0, 0.5, 1.0}) {
                CPair p = cpair({b1, b2, a});
                CHECK(p.c_plus >= p.c_minus);
                CHECK(p.c_minus >= 0.0);
                CHECK(rel_err(p.c_plus * p.c_plus + p.c_minus * p.c_minus, b1 * b1 + b2 * b2) <
                      1e-13);
                double prod = b1 * b1 * b2 * b2 * (1.0 - a * a);
                if (prod > 0.0)
                    CHECK(rel_err(p.c_plus * p.c_plus * p.c_minus * p.c_minus, prod) < 1e-12);
                else
                    CHECK(p.c_minus == 0.0);
            }
        }
    }
    // degenerate corners
    CPair z = cpair({0.0, 0.0, 0.7});
    CHECK(z.c_plus == 0.0);
    CHECK(z.c_minus == 0.0);
    CPair full = cpair({1.0, 1.0, 1.0});
    CHECK(rel_err(full.c_plus, std::sqrt(2.0)) < 1e-15);
    CHECK(full.c_minus == 0.0);
}

TEST_CASE("eval_F spot values, symmetry, range") {
    CHECK(rel_err(eval_F({1.0, 1.0, 0.5}), 0.8519061123697424) < 1e-14);
    CHECK(rel_err(eval_F({2.0, 2.0, 0.5}), 0.5580679808573554) < 1e-14);
    CHECK(rel_err(eval_F({3.0, 4.0, 0.5}), 0.2198181798233997) < 1e-14);
    // a = 0 factorizes; one vanishing beta reduces to a single S factor
    CHECK(rel_err(eval_F({1.0, 0.0, 0.3}), eval_S(1.0)) < 1e-15);
    CHECK(rel_err(eval_F({1.0, 2.0, 0.0}), eval_S(1.0) * eval_S(2.0)) < 1e-15);
    CHECK(eval_F({0.0, 0.0, 0.9}) == 1.0);
    for (double b1 : {0.3, 1.1, 2.7}) {
        for (double b2 : {0.5, 1.9}) {
            for (double a : {-0.8, 0.25, 0.6}) {
                double f = eval_F({b1, b2, a});
                CHECK(f > 0.0);
                CHECK(f <= 1.0);
                // exact symmetries of the construction
                CHECK(f == eval_F({b2, b1, a}));
                CHECK(f == eval_F({b1, b2, -a}));
            }
        }
    }
}

TEST_CASE("dF_dz matches the frozen values and finite differences") {
    CHECK(rel_err(dF_dz({1.0, 2.0, 0.3}), 0.0061010940876231) < 1e-11);
    CHECK(rel_err(dF_dz({3.0, 4.0, 0.5}), 0.0436039251824683) < 1e-11);
    int checked = 0;
    for (double b1 : {0.3, 0.7, 1.5, 3.0}) {
        for (double b2 : {0.4, 0.9, 1.7, 2.6}) {
            for (double z : {-0.8, -0.45, 0.2, 0.5, 0.75, 0.9}) {
                double h = 1e-6;
                double fd = (eval_F({b1, b2, z + h}) - eval_F({b1, b2, z - h})) / (2.0 * h);
                CHECK(rel_err(dF_dz({b1, b2, z}), fd) < 1e-6);
                ++checked;
            }
        }
    }
    CHECK(checked >= 96);
    // smooth zero along z = 0 when the discriminant stays positive
    CHECK(dF_dz({1.0, 2.0, 0.0}) == 0.0);
}

TEST_CASE("domain errors") {
    CHECK_THROWS_AS(eval_S(-1.0), std::domain_error);
    CHECK_THROWS_AS(eval_S(std::nan("")), std::domain_error);
    CHECK_THROWS_AS(eval_T(-0.5), std::domain_error);
    CHECK_THROWS_AS(deriv_T(-2.0), std::domain_error);
    CHECK_THROWS_AS(cpair({-1.0, 1.0, 0.0}), std::domain_error);
    CHECK_THROWS_AS(cpair({1.0, 1.0, 1.5}), std::domain_error);
    CHECK_THROWS_AS(eval_F({1.0, 1.0, -1.0001}), std::domain_error);
    CHECK_THROWS_AS(dF_dz({1.0, 1.0, 0.0}), std::domain_error);  // vanishing discriminant
    CHECK_THROWS_AS(dF_dz({0.0, 1.0, 0.5}), std::domain_error);
    CHECK_THROWS_AS(dF_dz({1.0, 1.0, 1.0}), std::domain_error);
}

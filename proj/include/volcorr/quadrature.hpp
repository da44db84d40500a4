#pragma once
#include <functional>
#include <stdexcept>

namespace volcorr {

struct QuadratureSpec {
    double rel_tol = 1e-8;
    double abs_tol = 1e-12;
    double u_max = 60.0;     // truncation radius of the infinite domain
    double diag_eps = 1e-4;  // relative width of the confluent band around u1 == u2
    long max_evals = 4000000;
};

struct IntegralResult {
    double value = 0.0;
    double error_estimate = 0.0;   // quadrature (discretization) error bound
    long evaluations = 0;
    double truncation_tail = 0.0;  // bound/estimate for the omitted tail of the domain
};

// Thrown when the evaluation budget runs out before the tolerance is met;
// carries the best result obtained so far.
struct BudgetExhausted : std::runtime_error {
    IntegralResult best;
    explicit BudgetExhausted(const IntegralResult& r)
        : std::runtime_error("quadrature: evaluation budget exhausted before reaching tolerance"),
          best(r) {}
};

// (T(u1) - T(u2)) / (u1 - u2), switching to deriv_T((u1+u2)/2) inside the
// confluent band |u1 - u2| < diag_eps * max(1, u1, u2).
double divided_diff_T(double u1, double u2, double diag_eps = 1e-4);

// 2 u1 u2 / (u1 + u2) * S(u1) S(u2) * divided_diff_T(u1, u2); 0 on the axes.
double second_moment_integrand(double u1, double u2, double diag_eps = 1e-4);

// Second moment of the empirical correlation via the closed-form double
// integral of second_moment_integrand over 0 <= u2 <= u1 < infinity.
IntegralResult second_moment(const QuadratureSpec& spec = {});

// Right-hand side of the moment generating identity at parameter z in (0, 1):
// the double integral of z * dF/dz over beta1, beta2 in (0, inf) with
// logarithmic measure d(beta)/beta in each variable.
IntegralResult generating_rhs(double z, const QuadratureSpec& spec = {});

// Deterministic serial adaptive Gauss-Kronrod 7/15 engines. Refinement always
// splits the segment/cell with the largest error estimate (lowest index on
// ties), so results are reproducible run to run.
IntegralResult integrate_1d(const std::function<double(double)>& f, double a, double b,
                            double rel_tol, double abs_tol, long max_evals);
IntegralResult integrate_2d(const std::function<double(double, double)>& f, double ax,
                            double bx, double ay, double by, double rel_tol, double abs_tol,
                            long max_evals);

}  // namespace volcorr

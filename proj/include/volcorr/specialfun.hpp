#pragma once

namespace volcorr {

// Evaluation point of the joint moment generating function. Preconditions
// (checked by the operations that need them): beta1, beta2 >= 0, |a| <= 1.
struct MgfPoint {
    double beta1 = 0.0;
    double beta2 = 0.0;
    double a = 0.0;
};

// Spectral coordinates of an MgfPoint: c_plus >= c_minus >= 0 with
//   c_plus^2 + c_minus^2 = beta1^2 + beta2^2
//   c_plus^2 * c_minus^2 = beta1^2 beta2^2 (1 - a^2).
struct CPair {
    double c_plus = 0.0;
    double c_minus = 0.0;
};

// S(u) = sqrt(u / sinh u); S(0) = 1, strictly decreasing, range (0, 1].
double eval_S(double u);

// Extended-precision S used by the series-coefficient extraction pipeline.
long double eval_S_ld(long double u);

// T(c) = (1 - c coth c) / (2 c^2); T(0) = -1/6, increasing, range [-1/6, 0).
double eval_T(double c);

// dT/dc; deriv_T(0) = 0.
double deriv_T(double c);

CPair cpair(const MgfPoint& p);

// F = S(c_plus) * S(c_minus), range (0, 1].
double eval_F(const MgfPoint& p);

// Derivative of F with respect to the correlation parameter, evaluated at
// z = p.a. Requires beta1, beta2 > 0 and |a| < 1; the confluent point
// beta1 == beta2, a == 0 (vanishing discriminant) is a domain error.
double dF_dz(const MgfPoint& p);

}  // namespace volcorr

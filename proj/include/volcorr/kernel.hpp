#pragma once
#include "volcorr/specialfun.hpp"

#include <utility>
#include <vector>

namespace volcorr {

// Uniform grid on [0, 1] with nodes k/m, k = 0..m.
struct GridSpec {
    int m = 0;
};

// A pair of discretized paths sampled on grid nodes; w1[0] == w2[0] == 0.
struct PathPair {
    GridSpec grid;
    std::vector<double> w1;
    std::vector<double> w2;
};

// Brownian covariance kernel M(s, t) = min(s, t) - s t on [0, 1]^2.
double kernel_M(double s1, double s2);

// Apply the integral operator with kernel M to samples g on the grid nodes,
// using composite Simpson in the integration variable. grid.m must be even.
std::vector<double> apply_TM(const std::vector<double>& g, const GridSpec& grid);

// n-th eigenpair of the kernel operator: lambda_n = 1 / (pi^2 n^2),
// psi_n(t) = sqrt(2) sin(pi n t).
struct EigenPair {
    int n = 0;
    double lambda = 0.0;
    double psi(double t) const;
};
EigenPair eigenpair(int n);

// First N spectral factor pairs (gamma_n_plus, gamma_n_minus) of the
// determinant expansion at an MgfPoint: gamma_n_+- = -lambda_n c_-+^2.
struct TkSpectrum {
    MgfPoint point;
    std::vector<std::pair<double, double>> gammas;
};
TkSpectrum tk_spectrum(const MgfPoint& p, int terms);

// Truncated Fredholm determinant prod_{n<=N} (1 + lambda_n c_+^2)(1 + lambda_n c_-^2),
// evaluated in log space, with the analytic bound on the omitted tail of the
// log-product: tail = (beta1^2 + beta2^2) / (pi^2 N).
struct FredholmResult {
    double value = 0.0;
    double tail = 0.0;
};
FredholmResult fredholm_det_truncated(const MgfPoint& p, int terms);

// Quadratic form of left-endpoint increments against the kernel:
//   X_ij = sum_{k,l} M(k/m, l/m) dwi[k] dwj[l],  dw[k] = w[k+1] - w[k].
// i, j in {1, 2}; symmetric in (i, j) bit-for-bit.
double quadratic_form_X(const PathPair& paths, int i, int j);

// Trapezoid approximation of int wi wj dt - (int wi dt)(int wj dt).
double centered_product_integral(const PathPair& paths, int i, int j);

}  // namespace volcorr

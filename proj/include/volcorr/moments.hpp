#pragma once
#include "volcorr/quadrature.hpp"

#include <string>
#include <vector>

namespace volcorr {

// Odd-power series data s_r(u) tabulated on a u grid: for each grid point,
// bracket_B(u, v) = sum_r s_r(u) v^(2r-1) on |v| <= v_radius.
struct SeriesTable {
    std::vector<double> u_grid;
    int r_max = 0;
    double v_radius = 0.0;
    int node_count = 0;
    // coeffs[i][r-1] = s_r(u_grid[i]); entries statistically indistinguishable
    // from zero at working precision are stored as exact zeros, with the
    // matching bound kept in noise_floor.
    std::vector<std::vector<double>> coeffs;
    std::vector<std::vector<double>> noise_floor;
    std::vector<int> onset;  // per u: first order of clean geometric decay
    // max over grid rows of (max-norm residual of the raw polynomial fit,
    // probed between the interpolation nodes) / (row max |B|)
    double reconstruction_residual = 0.0;
};

struct MomentResult {
    int n = 0;
    double value = 0.0;
    int r_truncation = 0;       // last series order actually summed
    double tail_estimate = 0.0; // omitted series terms + u-domain tail
    std::string method;         // "series", "integral", or "montecarlo"
};

// B(u, v) = u/(1+v) S(u sqrt((1-v)/(1+v))) - u/(1-v) S(u sqrt((1+v)/(1-v))).
// Odd in v; requires u >= 0, |v| < 1.
double bracket_B(double u, double v);

// Odd Chebyshev interpolation of v -> bracket_B(u, v) on |v| <= v_radius at
// each grid u (node_count first-kind nodes, node_count >= 4 * r_max),
// converted to monomial coefficients.
SeriesTable extract_sr(const std::vector<double>& u_grid, int r_max, double v_radius,
                       int node_count, int workers = 1);

// I_r = int 2 S(u) T(u) s_r(u) du over the table's grid range, using a
// natural cubic spline in u for each order r.
std::vector<double> series_integrals(const SeriesTable& table,
                                     const QuadratureSpec& spec = {});

// Closed-form weight of series order r in the even moment of order 2n:
// C(r-1, n-1) * Gamma(r - n + 1/2) Gamma(n) / (2 Gamma(r + 1/2)).
double weight_integral(int n, int r);

// E[theta^(2n)] via the weighted r-series over the extracted coefficients.
// r_max must be at least n + 5; the sum stops once terms fall below 1e-6 of
// the running total or sink below their propagated extraction floor, and
// fails if terms are still growing at the cap.  tail_estimate combines the
// geometric remainder with the floor mass of the summed terms.
MomentResult even_moment(int n, int r_max, const QuadratureSpec& spec = {},
                         double v_radius = 0.5, int node_count = 0, int workers = 1);

}  // namespace volcorr

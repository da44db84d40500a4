#include "volcorr/moments.hpp"
#include "volcorr/specialfun.hpp"
#include "volcorr/summation.hpp"

#include <quadmath.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <thread>

namespace volcorr {

namespace {

using quad = __float128;

const quad kPiQ = 2 * acosq(quad(0));
// Noise scale of the compensated quad-precision cosine transform, calibrated
// against a higher-precision run of the same pipeline.
constexpr double kEpsExtract = 2e-33;
constexpr double kCoeffCut = 3.0;  // keep c_k above kCoeffCut * eps * max|c|
constexpr double kClampSnr = 4.0;  // keep s_r above kClampSnr * its noise floor
constexpr int kOmitTerms = 40;     // extrapolated beyond-cut terms in the floor

// The read-off amplifies coefficient-level noise by factors that grow fast
// with the order; quad precision keeps roughly twice as many orders above
// their floors as long double would.
quad eval_S_quad(quad u) {
    if (u == 0) return 1;
    return sqrtq(u / sinhq(u));
}

quad bracket_quad(quad u, quad v) {
    quad c1 = u * sqrtq((1 - v) / (1 + v));
    quad c2 = u * sqrtq((1 + v) / (1 - v));
    return u / (1 + v) * eval_S_quad(c1) - u / (1 - v) * eval_S_quad(c2);
}

// Monomial coefficients of Chebyshev polynomials: T_k(x) = sum_m t[k][m] x^m.
std::vector<std::vector<quad>> cheb_monomial(int kmax) {
    std::vector<std::vector<quad>> t(kmax + 1, std::vector<quad>(kmax + 1, quad(0)));
    t[0][0] = 1;
    if (kmax >= 1) t[1][1] = 1;
    for (int k = 2; k <= kmax; ++k)
        for (int m = 0; m <= k; ++m) {
            quad v = -t[k - 2][m];
            if (m >= 1) v += 2 * t[k - 1][m - 1];
            t[k][m] = v;
        }
    return t;
}

struct RowResult {
    std::vector<double> s;
    std::vector<double> noise;
    int onset = 1;
    double residual = 0.0;
    double max_absB = 0.0;
};

RowResult extract_row(double u, int r_max, double radius, int nodes,
                      const std::vector<std::vector<quad>>& t) {
    RowResult out;
    out.s.assign(r_max, 0.0);
    out.noise.assign(r_max, 0.0);
    const int N = nodes;
    const quad R = radius;
    const quad uq = u;
    std::vector<quad> theta(N), f(N);
    quad maxB = 0;
    for (int j = 0; j < N; ++j) {
        theta[j] = kPiQ * (2 * j + 1) / (2 * N);
        f[j] = (u == 0.0) ? quad(0) : bracket_quad(uq, R * cosq(theta[j]));
        if (fabsq(f[j]) > maxB) maxB = fabsq(f[j]);
    }
    out.max_absB = static_cast<double>(maxB);
    if (maxB == 0) return out;

    // Odd-index cosine transform, compensated summation.
    std::vector<quad> c(N, quad(0));
    quad cmax = 0;
    for (int k = 1; k <= N - 1; k += 2) {
        KahanSum<quad> acc;
        for (int j = 0; j < N; ++j) acc.add(f[j] * cosq(k * theta[j]));
        c[k] = 2 * acc.value() / N;
        if (fabsq(c[k]) > cmax) cmax = fabsq(c[k]);
    }

    // Drop coefficients at the transform noise floor.
    const quad cut = quad(kCoeffCut) * quad(kEpsExtract) * cmax;
    int kcut = 1;
    for (int k = N - 1; k >= 1; k -= 2)
        if (fabsq(c[k]) > cut) {
            kcut = k;
            break;
        }
    // Decay ratio near the cut, for extrapolating the omitted coefficients.
    // Floor the values and take the worst of the last few pairs so a single
    // low coefficient cannot bias the continuation optimistic.
    quad g = 0;
    for (int k = kcut, pairs = 0; k >= 3 && pairs < 3; k -= 2, ++pairs) {
        quad hi = fabsq(c[k]) > cut ? fabsq(c[k]) : cut;
        quad lo = fabsq(c[k - 2]) > cut ? fabsq(c[k - 2]) : cut;
        if (hi / lo > g) g = hi / lo;
    }
    if (g <= 0) g = quad(0.5);
    g = std::clamp(g, quad(0.02), quad(0.95));

    // Monomial read-off with a per-order noise floor: transform noise through
    // the kept coefficients plus the extrapolated omitted-signal bound.
    std::vector<quad> sraw(r_max, quad(0));
    for (int r = 1; r <= r_max; ++r) {
        int m = 2 * r - 1;
        quad Rm = powq(R, m);
        quad noise = 0;
        if (m <= kcut) {
            KahanSum<quad> val;
            quad amp = 0;
            for (int k = m; k <= kcut; k += 2) {
                val.add(t[k][m] * c[k]);
                amp += fabsq(t[k][m]);
            }
            sraw[r - 1] = val.value() / Rm;
            noise = quad(kEpsExtract) * cmax * amp / Rm;
        }
        int kstart = std::max(m, kcut + 2);
        quad ck = (fabsq(c[kcut]) > cut ? fabsq(c[kcut]) : cut);
        ck *= powq(g, (kstart - kcut) / 2);
        for (int k = kstart; k < kstart + 2 * kOmitTerms; k += 2) {
            if (k >= static_cast<int>(t.size())) break;
            noise += fabsq(t[k][m]) * ck / Rm;
            ck *= g;
        }
        out.noise[r - 1] = static_cast<double>(noise);
    }

    // Residual of the raw fit (the retained cosine modes), probed between the
    // nodes, the worst points for an interpolant; this is what node refinement
    // can actually improve, and it blows up when the node count aliases.
    quad resid = 0;
    for (int j = 0; j + 1 < N; ++j) {
        quad th = (theta[j] + theta[j + 1]) / 2;
        KahanSum<quad> fit;
        for (int k = 1; k <= kcut; k += 2) fit.add(c[k] * cosq(k * th));
        quad diff = fabsq(fit.value() - bracket_quad(uq, R * cosq(th)));
        if (diff > resid) resid = diff;
    }
    out.residual = static_cast<double>(resid);

    // Zero what the noise floor says is unresolved; keep the floor on record.
    // The floor also carries the rounding of the final cast to double.
    for (int r = 1; r <= r_max; ++r) {
        double sr = static_cast<double>(sraw[r - 1]);
        double cast_ulp = 0.6 * std::numeric_limits<double>::epsilon() * std::fabs(sr);
        if (cast_ulp > out.noise[r - 1]) out.noise[r - 1] = cast_ulp;
        if (std::fabs(sr) >= kClampSnr * out.noise[r - 1]) out.s[r - 1] = sr;
    }

    // First order past which |s_{r+1}| R^2 < |s_r| holds for all retained pairs.
    int last = 0;
    for (int r = r_max; r >= 1; --r)
        if (out.s[r - 1] != 0.0) {
            last = r;
            break;
        }
    out.onset = 1;
    double R2 = radius * radius;
    for (int r = last - 1; r >= 1; --r) {
        if (out.s[r] != 0.0 && out.s[r - 1] != 0.0 &&
            !(std::fabs(out.s[r]) * R2 < std::fabs(out.s[r - 1]))) {
            out.onset = r + 1;
            break;
        }
    }
    return out;
}

void run_rows(std::size_t count, int workers, const std::function<void(std::size_t)>& body) {
    if (workers <= 1 || count < 2) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::size_t nthreads = std::min<std::size_t>(workers, count);
    std::size_t chunk = (count + nthreads - 1) / nthreads;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < nthreads; ++t) {
        std::size_t lo = t * chunk, hi = std::min(count, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&, lo, hi]() {
            for (std::size_t i = lo; i < hi; ++i) body(i);
        });
    }
    for (auto& th : pool) th.join();
}

// Natural cubic spline second derivatives (tridiagonal solve).
std::vector<double> spline_second_derivs(const std::vector<double>& x,
                                         const std::vector<double>& y) {
    std::size_t n = x.size();
    std::vector<double> m2(n, 0.0), diag(n, 0.0), rhs(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        double hl = x[i] - x[i - 1], hr = x[i + 1] - x[i];
        diag[i] = 2.0 * (hl + hr);
        rhs[i] = 6.0 * ((y[i + 1] - y[i]) / hr - (y[i] - y[i - 1]) / hl);
    }
    // forward elimination on the interior (natural ends: m2 = 0)
    std::vector<double> cprime(n, 0.0), dprime(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        double hl = x[i] - x[i - 1];
        double sub = (i == 1) ? 0.0 : hl;
        double denom = diag[i] - sub * cprime[i - 1];
        cprime[i] = (x[i + 1] - x[i]) / denom;
        dprime[i] = (rhs[i] - sub * dprime[i - 1]) / denom;
    }
    for (std::size_t i = n - 2; i >= 1; --i) m2[i] = dprime[i] - cprime[i] * m2[i + 1];
    return m2;
}

double spline_eval(const std::vector<double>& x, const std::vector<double>& y,
                   const std::vector<double>& m2, double xi) {
    std::size_t hi = std::upper_bound(x.begin(), x.end(), xi) - x.begin();
    hi = std::clamp<std::size_t>(hi, 1, x.size() - 1);
    std::size_t lo = hi - 1;
    double h = x[hi] - x[lo];
    double a = (x[hi] - xi) / h, b = (xi - x[lo]) / h;
    return a * y[lo] + b * y[hi] +
           ((a * a * a - a) * m2[lo] + (b * b * b - b) * m2[hi]) * h * h / 6.0;
}

}  // namespace

double bracket_B(double u, double v) {
    if (!(u >= 0.0) || !std::isfinite(u) || !(std::fabs(v) < 1.0))
        throw std::domain_error("bracket_B: need finite u >= 0 and |v| < 1");
    double c1 = u * std::sqrt((1.0 - v) / (1.0 + v));
    double c2 = u * std::sqrt((1.0 + v) / (1.0 - v));
    return u / (1.0 + v) * eval_S(c1) - u / (1.0 - v) * eval_S(c2);
}

SeriesTable extract_sr(const std::vector<double>& u_grid, int r_max, double v_radius,
                       int node_count, int workers) {
    if (u_grid.empty() || r_max < 1)
        throw std::invalid_argument("extract_sr: need a grid and r_max >= 1");
    if (!(v_radius > 0.0) || !(v_radius < 1.0))
        throw std::invalid_argument("extract_sr: v_radius must lie in (0, 1)");
    if (node_count < 4 * r_max)
        throw std::invalid_argument("extract_sr: node_count must be >= 4 * r_max");
    for (std::size_t i = 0; i < u_grid.size(); ++i) {
        if (!(u_grid[i] >= 0.0) || !std::isfinite(u_grid[i]))
            throw std::invalid_argument("extract_sr: grid points must be finite and >= 0");
        if (i > 0 && !(u_grid[i] > u_grid[i - 1]))
            throw std::invalid_argument("extract_sr: u_grid must be strictly increasing");
    }

    auto t = cheb_monomial(node_count - 1 + 2 * kOmitTerms);
    std::vector<RowResult> rows(u_grid.size());
    run_rows(u_grid.size(), workers, [&](std::size_t i) {
        rows[i] = extract_row(u_grid[i], r_max, v_radius, node_count, t);
    });

    SeriesTable table;
    table.u_grid = u_grid;
    table.r_max = r_max;
    table.v_radius = v_radius;
    table.node_count = node_count;
    table.coeffs.reserve(rows.size());
    table.noise_floor.reserve(rows.size());
    long nontrivial = 0, violating = 0;
    double worst = 0.0;
    for (const RowResult& row : rows) {
        table.coeffs.push_back(row.s);
        table.noise_floor.push_back(row.noise);
        table.onset.push_back(row.onset);
        if (row.max_absB > 0.0) {
            ++nontrivial;
            double rel = row.residual / row.max_absB;
            worst = std::max(worst, rel);
            if (rel > 1e-9) ++violating;
        }
    }
    table.reconstruction_residual = worst;
    if (nontrivial > 0 && violating * 2 > nontrivial)
        throw std::runtime_error(
            "extract_sr: fit residual above 1e-9 of max |B| on most rows; "
            "increase node_count or reduce v_radius");
    return table;
}

std::vector<double> series_integrals(const SeriesTable& table, const QuadratureSpec& spec) {
    if (table.u_grid.size() < 4 || table.r_max < 1 ||
        table.coeffs.size() != table.u_grid.size())
        throw std::invalid_argument("series_integrals: malformed table");
    const std::vector<double>& x = table.u_grid;
    std::vector<double> out(table.r_max, 0.0);
    for (int r = 1; r <= table.r_max; ++r) {
        std::vector<double> y(x.size());
        bool all_zero = true;
        for (std::size_t i = 0; i < x.size(); ++i) {
            y[i] = table.coeffs[i][r - 1];
            if (y[i] != 0.0) all_zero = false;
        }
        if (all_zero) continue;
        std::vector<double> m2 = spline_second_derivs(x, y);
        auto f = [&](double u) {
            return 2.0 * eval_S(u) * eval_T(u) * spline_eval(x, y, m2, u);
        };
        IntegralResult ir =
            integrate_1d(f, x.front(), x.back(), 1e-9, 1e-14, spec.max_evals);
        out[r - 1] = ir.value;
    }
    return out;
}

double weight_integral(int n, int r) {
    if (n < 1 || r < n) throw std::domain_error("weight_integral: need r >= n >= 1");
    double binom = 1.0;  // C(r-1, n-1)
    for (int j = 1; j <= n - 1; ++j) binom *= static_cast<double>(r - n + j) / j;
    return binom * 0.5 *
           std::exp(std::lgamma(r - n + 0.5) + std::lgamma(static_cast<double>(n)) -
                    std::lgamma(r + 0.5));
}

MomentResult even_moment(int n, int r_max, const QuadratureSpec& spec, double v_radius,
                         int node_count, int workers) {
    if (n < 1) throw std::invalid_argument("even_moment: n must be >= 1");
    if (r_max < n + 5) throw std::invalid_argument("even_moment: r_max must be >= n + 5");
    int rcap = std::min(r_max, 40);

    // u grid: 0 plus a geometric ladder to the truncation radius.
    std::vector<double> ug;
    const int kPts = 96;
    const double u0 = 0.02;
    ug.reserve(kPts + 1);
    ug.push_back(0.0);
    for (int i = 0; i < kPts; ++i)
        ug.push_back(u0 * std::pow(spec.u_max / u0, static_cast<double>(i) / (kPts - 1)));

    int nodes = node_count > 0 ? node_count : std::max(4 * rcap, 96);
    SeriesTable table = extract_sr(ug, rcap, v_radius, nodes, workers);
    if (table.reconstruction_residual > 1e-9)
        throw std::runtime_error("even_moment: series extraction residual above 1e-9");
    std::vector<double> I = series_integrals(table, spec);

    // Floor mass of each I_r, carried through the same integrand weight;
    // clamped entries may hide true values up to kClampSnr times their floor.
    std::vector<double> noiseI(rcap, 0.0);
    {
        std::vector<double> w(ug.size());
        for (std::size_t i = 0; i < ug.size(); ++i)
            w[i] = std::fabs(2.0 * eval_S(ug[i]) * eval_T(ug[i]));
        for (int r = 1; r <= rcap; ++r) {
            double acc = 0.0;
            for (std::size_t i = 0; i + 1 < ug.size(); ++i) {
                double a = w[i] * table.noise_floor[i][r - 1] *
                           (table.coeffs[i][r - 1] == 0.0 ? kClampSnr : 1.0);
                double b = w[i + 1] * table.noise_floor[i + 1][r - 1] *
                           (table.coeffs[i + 1][r - 1] == 0.0 ? kClampSnr : 1.0);
                acc += 0.5 * (a + b) * (ug[i + 1] - ug[i]);
            }
            noiseI[r - 1] = acc;
        }
    }

    double pref = 1.0;  // C(2n, n) * 2n / 4^n
    for (int j = 1; j <= n; ++j) pref *= static_cast<double>(n + j) / j;
    pref *= 2.0 * n / std::pow(4.0, n);

    KahanSum<double> sum;
    double prev = 0.0, last = 0.0, unc_sum = 0.0;
    int r_trunc = rcap;
    bool stopped = false;
    for (int r = n; r <= rcap; ++r) {
        // Once an order sinks below its propagated floor, later terms are
        // noise; stop and leave the remainder to the tail extrapolation.
        if (r >= n + 2 && std::fabs(I[r - 1]) < 2.0 * noiseI[r - 1]) {
            r_trunc = r - 1;
            stopped = true;
            break;
        }
        double term = pref * weight_integral(n, r) * I[r - 1];
        sum.add(term);
        unc_sum += pref * weight_integral(n, r) * noiseI[r - 1];
        prev = last;
        last = term;
        r_trunc = r;
        if (r >= n + 5 && std::fabs(term) < 1e-6 * std::fabs(sum.value())) {
            stopped = true;
            break;
        }
    }
    if (!stopped && std::fabs(last) > std::fabs(prev))
        throw std::runtime_error(
            "even_moment: series terms still growing at r_max; raise r_max or shrink v_radius");

    double tail;
    if (std::fabs(prev) > 0.0 && std::fabs(last) < std::fabs(prev)) {
        double q = std::fabs(last) / std::fabs(prev);
        tail = std::fabs(last) * q / (1.0 - q);
    } else {
        tail = std::fabs(last);
    }
    tail += unc_sum;
    // u-domain tail: the integrands die like S at the grid end.
    double wend = std::fabs(2.0 * eval_S(ug.back()) * eval_T(ug.back()));
    double utail = 0.0;
    for (int r = n; r <= r_trunc; ++r)
        utail += pref * weight_integral(n, r) *
                 std::fabs(table.coeffs.back()[r - 1]) * wend * 2.0;

    // The r-sum as constructed counts the moment twice; the 1/2 normalization
    // is pinned against the closed-form second moment and the Monte Carlo
    // estimates (module tests and acceptance checks).
    MomentResult out;
    out.n = n;
    out.value = 0.5 * sum.value();
    out.r_truncation = r_trunc;
    out.tail_estimate = 0.5 * tail + utail;
    out.method = "series";
    if (!(out.value >= 0.0) || !(out.value <= 1.0))
        throw std::runtime_error("even_moment: result escaped [0, 1]");
    return out;
}

}  // namespace volcorr

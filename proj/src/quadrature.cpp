#include "volcorr/quadrature.hpp"
#include "volcorr/specialfun.hpp"
#include "volcorr/summation.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace volcorr {

namespace {

// Gauss-Kronrod 7/15 abscissae (positive half) and weights. Even-indexed
// nodes are the Gauss-7 points; gauss_w holds their Gauss weights.
constexpr int kHalf = 8;
constexpr double kNodes[kHalf] = {
    0.99145537112081263920685469752633,
    0.94910791234275852452618968404785,
    0.86486442335976907278971278864093,
    0.74153118559939443986386477328079,
    0.58608723546769113029414483825873,
    0.40584515137739716690660641207696,
    0.20778495500789846760068940377324,
    0.0,
};
constexpr double kKronrodW[kHalf] = {
    0.02293532201052922496373200805897,
    0.06309209262997855329070066318920,
    0.10479001032225018383987632254152,
    0.14065325971552591874518959051024,
    0.16900472663926790282658342659855,
    0.19035057806478540991325640242101,
    0.20443294007529889241416199923465,
    0.20948214108472782801299917489171,
};
constexpr double kGaussW[4] = {
    0.12948496616886969327061143267908,  // node index 1
    0.27970539148927666790146777142378,  // node index 3
    0.38183005050511894495036977548898,  // node index 5
    0.41795918367346938775510204081633,  // node index 7 (center)
};

struct RuleOut {
    double value = 0.0;
    double error = 0.0;
};

template <typename F>
RuleOut gk15(const F& f, double a, double b) {
    double c = 0.5 * (a + b);
    double h = 0.5 * (b - a);
    double fk[15];
    for (int i = 0; i < kHalf - 1; ++i) {
        fk[i] = f(c - h * kNodes[i]);
        fk[14 - i] = f(c + h * kNodes[i]);
    }
    fk[7] = f(c);
    double kron = 0.0, gauss = 0.0;
    for (int i = 0; i < kHalf - 1; ++i) kron += kKronrodW[i] * (fk[i] + fk[14 - i]);
    kron += kKronrodW[7] * fk[7];
    for (int i = 0; i < 3; ++i) gauss += kGaussW[i] * (fk[2 * i + 1] + fk[13 - 2 * i]);
    gauss += kGaussW[3] * fk[7];
    return {kron * h, std::fabs(kron - gauss) * h};
}

template <typename F>
RuleOut gk15_2d(const F& f, double ax, double bx, double ay, double by) {
    double cx = 0.5 * (ax + bx), hx = 0.5 * (bx - ax);
    double cy = 0.5 * (ay + by), hy = 0.5 * (by - ay);
    double x[15], y[15];
    for (int i = 0; i < kHalf - 1; ++i) {
        x[i] = cx - hx * kNodes[i];
        x[14 - i] = cx + hx * kNodes[i];
        y[i] = cy - hy * kNodes[i];
        y[14 - i] = cy + hy * kNodes[i];
    }
    x[7] = cx;
    y[7] = cy;
    double rowk[15], rowg[15];
    for (int j = 0; j < 15; ++j) {
        double fk[15];
        for (int i = 0; i < 15; ++i) fk[i] = f(x[i], y[j]);
        double kron = 0.0, gauss = 0.0;
        for (int i = 0; i < kHalf - 1; ++i) kron += kKronrodW[i] * (fk[i] + fk[14 - i]);
        kron += kKronrodW[7] * fk[7];
        for (int i = 0; i < 3; ++i) gauss += kGaussW[i] * (fk[2 * i + 1] + fk[13 - 2 * i]);
        gauss += kGaussW[3] * fk[7];
        rowk[j] = kron;
        rowg[j] = gauss;
    }
    double kk = 0.0, gg = 0.0;
    for (int j = 0; j < kHalf - 1; ++j) kk += kKronrodW[j] * (rowk[j] + rowk[14 - j]);
    kk += kKronrodW[7] * rowk[7];
    for (int j = 0; j < 3; ++j) gg += kGaussW[j] * (rowg[2 * j + 1] + rowg[13 - 2 * j]);
    gg += kGaussW[3] * rowg[7];
    kk *= hx * hy;
    gg *= hx * hy;
    return {kk, std::fabs(kk - gg)};
}

void check_tols(double rel_tol, double abs_tol, long max_evals) {
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0) || max_evals < 15)
        throw std::invalid_argument("quadrature: need rel_tol > 0, abs_tol > 0, max_evals >= 15");
}

void check_spec(const QuadratureSpec& spec) {
    check_tols(spec.rel_tol, spec.abs_tol, spec.max_evals);
    if (!(spec.u_max > 1.0) || !(spec.diag_eps > 0.0) || !(spec.diag_eps < 0.5))
        throw std::invalid_argument("quadrature: need u_max > 1 and diag_eps in (0, 0.5)");
}

// Bound for the second-moment mass beyond u_max: sup|dT-divided-difference|
// times the full weight integral of 2 u S(u) times the S tail integral.
double u_tail_bound(double L) {
    constexpr double kSupDT = 0.0238;      // max of deriv_T, attained near c = 1.93
    constexpr double kWeightMass = 21.6;   // int_0^inf 2 u S(u) du
    return kSupDT * kWeightMass * std::sqrt(2.0) * 2.0 * std::exp(-0.5 * L) *
           (std::sqrt(L) + 1.0 / std::sqrt(L));
}

}  // namespace

IntegralResult integrate_1d(const std::function<double(double)>& f, double a, double b,
                            double rel_tol, double abs_tol, long max_evals) {
    check_tols(rel_tol, abs_tol, max_evals);
    struct Seg {
        double a, b, val, err;
    };
    std::vector<Seg> segs;
    RuleOut r0 = gk15(f, a, b);
    segs.push_back({a, b, r0.value, r0.error});
    long evals = 15;
    auto totals = [&]() {
        std::vector<double> vals(segs.size()), errs(segs.size());
        for (std::size_t i = 0; i < segs.size(); ++i) {
            vals[i] = segs[i].val;
            errs[i] = segs[i].err;
        }
        return std::pair<double, double>(pairwise_sum(vals), pairwise_sum(errs));
    };
    for (;;) {
        auto [val, err] = totals();
        if (err <= std::max(abs_tol, rel_tol * std::fabs(val)))
            return {val, err, evals, 0.0};
        if (evals + 30 > max_evals) throw BudgetExhausted({val, err, evals, 0.0});
        std::size_t worst = 0;
        for (std::size_t i = 1; i < segs.size(); ++i)
            if (segs[i].err > segs[worst].err) worst = i;
        Seg s = segs[worst];
        double mid = 0.5 * (s.a + s.b);
        RuleOut left = gk15(f, s.a, mid);
        RuleOut right = gk15(f, mid, s.b);
        segs[worst] = {s.a, mid, left.value, left.error};
        segs.push_back({mid, s.b, right.value, right.error});
        evals += 30;
    }
}

IntegralResult integrate_2d(const std::function<double(double, double)>& f, double ax,
                            double bx, double ay, double by, double rel_tol, double abs_tol,
                            long max_evals) {
    check_tols(rel_tol, abs_tol, max_evals);
    struct Cell {
        double ax, bx, ay, by, val, err;
    };
    std::vector<Cell> cells;
    // Start from a 2x2 split so features along the diagonal are seen early.
    double mx = 0.5 * (ax + bx), my = 0.5 * (ay + by);
    long evals = 0;
    for (int ix = 0; ix < 2; ++ix)
        for (int iy = 0; iy < 2; ++iy) {
            double cax = ix == 0 ? ax : mx, cbx = ix == 0 ? mx : bx;
            double cay = iy == 0 ? ay : my, cby = iy == 0 ? my : by;
            RuleOut r = gk15_2d(f, cax, cbx, cay, cby);
            cells.push_back({cax, cbx, cay, cby, r.value, r.error});
            evals += 225;
        }
    auto totals = [&]() {
        std::vector<double> vals(cells.size()), errs(cells.size());
        for (std::size_t i = 0; i < cells.size(); ++i) {
            vals[i] = cells[i].val;
            errs[i] = cells[i].err;
        }
        return std::pair<double, double>(pairwise_sum(vals), pairwise_sum(errs));
    };
    for (;;) {
        auto [val, err] = totals();
        if (err <= std::max(abs_tol, rel_tol * std::fabs(val)))
            return {val, err, evals, 0.0};
        if (evals + 450 > max_evals) throw BudgetExhausted({val, err, evals, 0.0});
        std::size_t worst = 0;
        for (std::size_t i = 1; i < cells.size(); ++i)
            if (cells[i].err > cells[worst].err) worst = i;
        Cell c = cells[worst];
        Cell l = c, r = c;
        if (c.bx - c.ax >= c.by - c.ay) {
            double mid = 0.5 * (c.ax + c.bx);
            l.bx = mid;
            r.ax = mid;
        } else {
            double mid = 0.5 * (c.ay + c.by);
            l.by = mid;
            r.ay = mid;
        }
        RuleOut lo = gk15_2d(f, l.ax, l.bx, l.ay, l.by);
        RuleOut ro = gk15_2d(f, r.ax, r.bx, r.ay, r.by);
        l.val = lo.value;
        l.err = lo.error;
        r.val = ro.value;
        r.err = ro.error;
        cells[worst] = l;
        cells.push_back(r);
        evals += 450;
    }
}

double divided_diff_T(double u1, double u2, double diag_eps) {
    if (!(u1 >= 0.0) || !(u2 >= 0.0))
        throw std::domain_error("divided_diff_T: arguments must be >= 0");
    if (!(diag_eps > 0.0)) throw std::invalid_argument("divided_diff_T: diag_eps must be > 0");
    double scale = std::max(1.0, std::max(u1, u2));
    if (std::fabs(u1 - u2) < diag_eps * scale) return deriv_T(0.5 * (u1 + u2));
    return (eval_T(u1) - eval_T(u2)) / (u1 - u2);
}

double second_moment_integrand(double u1, double u2, double diag_eps) {
    if (!(u1 >= 0.0) || !(u2 >= 0.0))
        throw std::domain_error("second_moment_integrand: arguments must be >= 0");
    if (u1 == 0.0 || u2 == 0.0) return 0.0;
    if (u1 < u2) std::swap(u1, u2);  // bitwise symmetry
    return 2.0 * u1 * u2 / (u1 + u2) * eval_S(u1) * eval_S(u2) *
           divided_diff_T(u1, u2, diag_eps);
}

IntegralResult second_moment(const QuadratureSpec& spec) {
    check_spec(spec);
    auto f = [&](double x, double y) { return second_moment_integrand(x, y, spec.diag_eps); };
    IntegralResult r;
    try {
        r = integrate_2d(f, 0.0, spec.u_max, 0.0, spec.u_max, spec.rel_tol, spec.abs_tol,
                         spec.max_evals);
    } catch (BudgetExhausted& e) {
        e.best.value *= 0.5;
        e.best.error_estimate *= 0.5;
        e.best.truncation_tail = u_tail_bound(spec.u_max);
        throw;
    }
    // The integrand is symmetric across the diagonal; the triangle is half
    // of the square.
    r.value *= 0.5;
    r.error_estimate *= 0.5;
    r.truncation_tail = u_tail_bound(spec.u_max);
    return r;
}

IntegralResult generating_rhs(double z, const QuadratureSpec& spec) {
    check_spec(spec);
    if (!(z > 0.0) || !(z < 1.0))
        throw std::domain_error("generating_rhs: z must lie in (0, 1)");
    // Substitute beta = e^t per axis; d(beta)/beta = dt. The integrand decays
    // like e^{2t} toward -inf and super-exponentially once beta > a few.
    const double t_min = -12.0;
    const double t_max = std::log(spec.u_max);
    auto g = [&](double t1, double t2) {
        return z * dF_dz({std::exp(t1), std::exp(t2), z});
    };
    IntegralResult r = integrate_2d(g, t_min, t_max, t_min, t_max, spec.rel_tol, spec.abs_tol,
                                    spec.max_evals);
    // Tail estimate from boundary rows: the e^{2t} scaling means the strip
    // beyond t_min carries about half the boundary-row integral per side; the
    // t_max rows bound the far tail (decay is faster than any exponential).
    double row_lo = 0.0, row_hi = 0.0;
    int panels = 8;
    double ph = (t_max - t_min) / panels;
    for (int i = 0; i < panels; ++i) {
        double a = t_min + i * ph, b = a + ph;
        row_lo += gk15([&](double t) { return g(t_min, t); }, a, b).value;
        row_hi += gk15([&](double t) { return g(t, t_max); }, a, b).value;
        r.evaluations += 30;
    }
    r.truncation_tail = std::fabs(row_lo) + 2.0 * std::fabs(row_hi);
    return r;
}

}  // namespace volcorr

#include "volcorr/kernel.hpp"
#include "volcorr/summation.hpp"

#include <cmath>
#include <stdexcept>

namespace volcorr {

namespace {

constexpr double kPi = 3.14159265358979323846;

const std::vector<double>& path_of(const PathPair& paths, int i) {
    if (i == 1) return paths.w1;
    if (i == 2) return paths.w2;
    throw std::invalid_argument("path index must be 1 or 2");
}

void check_paths(const PathPair& paths) {
    std::size_t want = static_cast<std::size_t>(paths.grid.m) + 1;
    if (paths.grid.m < 2 || paths.w1.size() != want || paths.w2.size() != want)
        throw std::invalid_argument("PathPair: paths must hold grid.m + 1 samples, m >= 2");
}

}  // namespace

double kernel_M(double s1, double s2) {
    if (!(s1 >= 0.0) || !(s1 <= 1.0) || !(s2 >= 0.0) || !(s2 <= 1.0))
        throw std::domain_error("kernel_M: arguments must lie in [0, 1]");
    return std::fmin(s1, s2) - s1 * s2;
}

std::vector<double> apply_TM(const std::vector<double>& g, const GridSpec& grid) {
    int m = grid.m;
    if (m < 2 || m % 2 != 0)
        throw std::invalid_argument("apply_TM: grid.m must be even and >= 2");
    if (g.size() != static_cast<std::size_t>(m) + 1)
        throw std::invalid_argument("apply_TM: g must hold grid.m + 1 samples");
    double h = 1.0 / m;
    // Simpson weights h/3 * {1, 4, 2, 4, ..., 2, 4, 1}
    std::vector<double> wg(m + 1);
    for (int k = 0; k <= m; ++k) {
        double w = (k == 0 || k == m) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
        wg[k] = w * h / 3.0 * g[k];
    }
    std::vector<double> out(m + 1);
    std::vector<double> terms(m + 1);
    for (int l = 0; l <= m; ++l) {
        double sl = l * h;
        for (int k = 0; k <= m; ++k) {
            double mkl = std::fmin(k, l) * h - (k * h) * sl;
            terms[k] = mkl * wg[k];
        }
        out[l] = pairwise_sum(terms);
    }
    return out;
}

double EigenPair::psi(double t) const {
    return std::sqrt(2.0) * std::sin(kPi * n * t);
}

EigenPair eigenpair(int n) {
    if (n < 1) throw std::invalid_argument("eigenpair: n must be >= 1");
    return {n, 1.0 / (kPi * kPi * n * n)};
}

TkSpectrum tk_spectrum(const MgfPoint& p, int terms) {
    if (terms < 1) throw std::invalid_argument("tk_spectrum: terms must be >= 1");
    CPair c = cpair(p);
    double cp2 = c.c_plus * c.c_plus;
    double cm2 = c.c_minus * c.c_minus;
    TkSpectrum out;
    out.point = p;
    out.gammas.reserve(terms);
    for (int n = 1; n <= terms; ++n) {
        double lam = 1.0 / (kPi * kPi * n * n);
        // gamma_+ pairs with c_-^2 and vice versa
        out.gammas.emplace_back(-lam * cm2, -lam * cp2);
    }
    return out;
}

FredholmResult fredholm_det_truncated(const MgfPoint& p, int terms) {
    if (terms < 1) throw std::invalid_argument("fredholm_det_truncated: terms must be >= 1");
    CPair c = cpair(p);
    double cp2 = c.c_plus * c.c_plus;
    double cm2 = c.c_minus * c.c_minus;
    KahanSum<double> logsum;
    for (int n = 1; n <= terms; ++n) {
        double lam = 1.0 / (kPi * kPi * n * n);
        logsum.add(std::log1p(lam * cp2));
        logsum.add(std::log1p(lam * cm2));
    }
    // log-product tail: sum_{n>N} lam_n (c+^2 + c-^2) <= (b1^2 + b2^2)/(pi^2 N)
    double tail = (cp2 + cm2) / (kPi * kPi * terms);
    return {std::exp(logsum.value()), tail};
}

double quadratic_form_X(const PathPair& paths, int i, int j) {
    check_paths(paths);
    if (i > j) std::swap(i, j);  // canonical order: result exactly symmetric
    const std::vector<double>& wi = path_of(paths, i);
    const std::vector<double>& wj = path_of(paths, j);
    int m = paths.grid.m;
    double h = 1.0 / m;
    std::vector<double> di(m), dj(m);
    for (int k = 0; k < m; ++k) {
        di[k] = wi[k + 1] - wi[k];
        dj[k] = wj[k + 1] - wj[k];
    }
    std::vector<double> rows(m);
    for (int k = 0; k < m; ++k) {
        double sk = k * h;
        KahanSum<double> acc;
        for (int l = 0; l < m; ++l) {
            double mkl = std::fmin(k, l) * h - sk * (l * h);
            acc.add(mkl * dj[l]);
        }
        rows[k] = di[k] * acc.value();
    }
    return pairwise_sum(rows);
}

double centered_product_integral(const PathPair& paths, int i, int j) {
    check_paths(paths);
    const std::vector<double>& wi = path_of(paths, i);
    const std::vector<double>& wj = path_of(paths, j);
    int m = paths.grid.m;
    double h = 1.0 / m;
    auto trapz = [&](auto&& f) {
        std::vector<double> v(m + 1);
        for (int k = 0; k <= m; ++k) {
            double w = (k == 0 || k == m) ? 0.5 : 1.0;
            v[k] = w * h * f(k);
        }
        return pairwise_sum(v);
    };
    double iij = trapz([&](int k) { return wi[k] * wj[k]; });
    double ii = trapz([&](int k) { return wi[k]; });
    double ij = trapz([&](int k) { return wj[k]; });
    return iij - ii * ij;
}

}  // namespace volcorr

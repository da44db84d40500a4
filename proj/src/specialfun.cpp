#include "volcorr/specialfun.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace volcorr {

namespace {

// Branch thresholds. Below kSeriesCutS / kSeriesCutT the naive forms lose
// digits to cancellation (T loses ~5 digits already at c = 0.01), so Taylor
// series keep both branches consistent to < 1e-12 at the seams.
constexpr double kSeriesCutS = 1e-3;
constexpr double kLogCutS = 30.0;  // above: log form, sinh would overflow near 710
constexpr double kSeriesCutT = 0.1;

void require_nonneg_finite(double x, const char* who) {
    if (!(x >= 0.0) || !std::isfinite(x))
        throw std::domain_error(std::string(who) + ": argument must be finite and >= 0");
}

// S'(x) = S(x) * (1/x - coth x) / 2
double deriv_S(double x) {
    if (x < kSeriesCutS) return eval_S(x) * (x * x * x / 90.0 - x / 6.0);
    return eval_S(x) * 0.5 * (1.0 / x - 1.0 / std::tanh(x));
}

}  // namespace

double eval_S(double u) {
    require_nonneg_finite(u, "eval_S");
    if (u < kSeriesCutS) {
        double u2 = u * u;
        return 1.0 - u2 / 12.0 + u2 * u2 / 160.0;
    }
    if (u > kLogCutS) {
        // S^2 = 2u e^{-u} / (1 - e^{-2u})
        return std::exp(0.5 * (std::log(2.0 * u) - u - std::log1p(-std::exp(-2.0 * u))));
    }
    return std::sqrt(u / std::sinh(u));
}

long double eval_S_ld(long double u) {
    if (!(u >= 0.0L) || !std::isfinite(static_cast<double>(u)))
        throw std::domain_error("eval_S_ld: argument must be finite and >= 0");
    if (u < 1e-3L) {
        long double u2 = u * u;
        return 1.0L - u2 / 12.0L + u2 * u2 / 160.0L;
    }
    if (u > 30.0L) {
        return expl(0.5L * (logl(2.0L * u) - u - log1pl(-expl(-2.0L * u))));
    }
    return sqrtl(u / sinhl(u));
}

double eval_T(double c) {
    require_nonneg_finite(c, "eval_T");
    if (c < kSeriesCutT) {
        double c2 = c * c;
        return -1.0 / 6.0 +
               c2 * (1.0 / 90.0 + c2 * (-1.0 / 945.0 + c2 * (1.0 / 9450.0 - c2 / 93555.0)));
    }
    // coth(c) saturates to 1 for c > ~19; no overflow anywhere.
    double coth = 1.0 / std::tanh(c);
    return 0.5 / (c * c) - coth / (2.0 * c);
}

double deriv_T(double c) {
    require_nonneg_finite(c, "deriv_T");
    if (c < kSeriesCutT) {
        double c2 = c * c;
        return c * (1.0 / 45.0 +
                    c2 * (-4.0 / 945.0 + c2 * (1.0 / 1575.0 - 8.0 * c2 / 93555.0)));
    }
    double coth = 1.0 / std::tanh(c);
    double csch2 = 0.0;
    if (c < 350.0) {  // 1/sinh^2 underflows past here; the term is then < 1e-300
        double s = std::sinh(c);
        csch2 = 1.0 / (s * s);
    }
    return -1.0 / (c * c * c) + csch2 / (2.0 * c) + coth / (2.0 * c * c);
}

CPair cpair(const MgfPoint& p) {
    if (!(p.beta1 >= 0.0) || !(p.beta2 >= 0.0) || !(std::fabs(p.a) <= 1.0) ||
        !std::isfinite(p.beta1) || !std::isfinite(p.beta2) || !std::isfinite(p.a))
        throw std::domain_error("cpair: need finite beta1, beta2 >= 0 and |a| <= 1");
    double b1s = p.beta1 * p.beta1;
    double b2s = p.beta2 * p.beta2;
    double diff = b1s - b2s;
    double disc = diff * diff + 4.0 * p.a * p.a * b1s * b2s;
    double cp = std::sqrt(0.5 * (b1s + b2s + std::sqrt(disc)));
    double cm = 0.0;
    if (cp > 0.0) {
        // Product form: stable where the sum form would cancel (a near +-1).
        double one_m_a2 = (1.0 - p.a) * (1.0 + p.a);
        cm = p.beta1 * p.beta2 * std::sqrt(one_m_a2) / cp;
    }
    return {cp, cm};
}

double eval_F(const MgfPoint& p) {
    CPair c = cpair(p);
    return eval_S(c.c_plus) * eval_S(c.c_minus);
}

double dF_dz(const MgfPoint& p) {
    if (!(p.beta1 > 0.0) || !(p.beta2 > 0.0) || !(std::fabs(p.a) < 1.0) ||
        !std::isfinite(p.beta1) || !std::isfinite(p.beta2) || !std::isfinite(p.a))
        throw std::domain_error("dF_dz: need finite beta1, beta2 > 0 and |a| < 1");
    double z = p.a;
    double b1s = p.beta1 * p.beta1;
    double b2s = p.beta2 * p.beta2;
    if (b1s == b2s && z == 0.0)
        throw std::domain_error("dF_dz: discriminant vanishes at beta1 == beta2, a == 0");
    if (z == 0.0) return 0.0;  // dc/dz ~ z, so the derivative vanishes smoothly
    double diff = b1s - b2s;
    double sq = std::sqrt(diff * diff + 4.0 * z * z * b1s * b2s);
    CPair c = cpair(p);
    double dcp = z * b1s * b2s / (c.c_plus * sq);
    double dcm = -z * b1s * b2s / (c.c_minus * sq);
    return deriv_S(c.c_plus) * dcp * eval_S(c.c_minus) +
           eval_S(c.c_plus) * deriv_S(c.c_minus) * dcm;
}

}  // namespace volcorr

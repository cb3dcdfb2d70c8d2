#include "seqab/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "seqab/errors.hpp"

namespace seqab {

StreamingMoments StreamingMoments::from_binary(std::uint64_t count, std::uint64_t successes) {
    if (successes > count) {
        throw DomainError("from_binary: successes exceed count");
    }
    StreamingMoments acc;
    if (count == 0) {
        return acc;
    }
    const double n = static_cast<double>(count);
    const double s = static_cast<double>(successes);
    acc.count_ = count;
    acc.mean_ = s / n;
    // sum (y - mean)^2 over s ones and n - s zeros
    acc.m2_ = s * (n - s) / n;
    return acc;
}

StreamingMoments StreamingMoments::from_parts(std::uint64_t count, double mean, double m2) {
    if (!(m2 >= 0.0) || !std::isfinite(mean)) {
        throw DomainError("from_parts: m2 must be non-negative and mean finite");
    }
    StreamingMoments acc;
    if (count == 0) {
        return acc;
    }
    acc.count_ = count;
    acc.mean_ = mean;
    acc.m2_ = m2;
    return acc;
}

void StreamingMoments::push(double y) noexcept {
    ++count_;
    const double delta = y - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta * (y - mean_);
    if (m2_ < 0.0) {
        m2_ = 0.0;
    }
}

void StreamingMoments::merge(const StreamingMoments& other) noexcept {
    if (other.count_ == 0) {
        return;
    }
    if (count_ == 0) {
        *this = other;
        return;
    }
    const double na = static_cast<double>(count_);
    const double nb = static_cast<double>(other.count_);
    const double n = na + nb;
    const double delta = other.mean_ - mean_;
    mean_ = (na * mean_ + nb * other.mean_) / n;
    m2_ = m2_ + other.m2_ + delta * delta * (na * nb / n);
    count_ += other.count_;
}

double StreamingMoments::biased_variance() const {
    if (count_ < 1) {
        throw InsufficientData("biased_variance needs at least one observation");
    }
    return m2_ / static_cast<double>(count_);
}

double StreamingMoments::unbiased_variance() const {
    if (count_ < 2) {
        throw InsufficientData("unbiased_variance needs at least two observations");
    }
    return m2_ / static_cast<double>(count_ - 1);
}

StreamingMoments update(StreamingMoments acc, double y) noexcept {
    acc.push(y);
    return acc;
}

StreamingMoments merge(StreamingMoments a, const StreamingMoments& b) noexcept {
    a.merge(b);
    return a;
}

double normal_cdf(double x) noexcept {
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double normal_sf(double x) noexcept {
    return 0.5 * std::erfc(x / std::numbers::sqrt2);
}

double normal_pdf(double x) noexcept {
    constexpr double inv_sqrt_2pi = 0.3989422804014326779399460599343819;
    return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw DomainError("normal_quantile: p must lie in (0, 1)");
    }
    // Acklam's rational approximation, then one Halley step against erfc.
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    // Refine on the smaller tail to keep relative accuracy.
    const double e = (p < 0.5) ? normal_cdf(x) - p : (1.0 - p) - normal_sf(x);
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    x = x - u / (1.0 + 0.5 * x * u);
    return x;
}

namespace {

// lgamma(x) - Stirling approximation, valid for x >= 10.
double lgamma_correction(double x) {
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    return inv * (1.0 / 12.0 -
                  inv2 * (1.0 / 360.0 -
                          inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0 - inv2 * (1.0 / 1188.0)))));
}

constexpr double kLnSqrt2Pi = 0.918938533204672741780329736406;

// Continued fraction for I_x(a, b), evaluated by modified Lentz.
double beta_continued_fraction(double x, double a, double b) {
    constexpr int kMaxIter = 200000;
    constexpr double kEps = 1e-16;
    constexpr double kTiny = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) {
            return h;
        }
    }
    throw SolverFailure("reg_inc_beta: continued fraction did not converge");
}

}  // namespace

double log_beta(double a, double b) {
    if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
        throw DomainError("log_beta: parameters must be positive and finite");
    }
    const double p = std::min(a, b);
    const double q = std::max(a, b);
    if (p >= 10.0) {
        const double corr = lgamma_correction(p) + lgamma_correction(q) - lgamma_correction(p + q);
        return -0.5 * std::log(q) + kLnSqrt2Pi + corr + (p - 0.5) * std::log(p / (p + q)) +
               q * std::log1p(-p / (p + q));
    }
    if (q >= 10.0) {
        const double corr = lgamma_correction(q) - lgamma_correction(p + q);
        return std::lgamma(p) + corr + p - p * std::log(p + q) + (q - 0.5) * std::log1p(-p / (p + q));
    }
    return std::lgamma(p) + std::lgamma(q) - std::lgamma(p + q);
}

double reg_inc_beta(double x, double a, double b) {
    if (!(a > 0.0) || !(b > 0.0) || !(x >= 0.0 && x <= 1.0)) {
        throw DomainError("reg_inc_beta: need a, b > 0 and 0 <= x <= 1");
    }
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double log_front = a * std::log(x) + b * std::log1p(-x) - log_beta(a, b);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return std::clamp(std::exp(log_front) * beta_continued_fraction(x, a, b) / a, 0.0, 1.0);
    }
    return std::clamp(1.0 - std::exp(log_front) * beta_continued_fraction(1.0 - x, b, a) / b, 0.0,
                      1.0);
}

double beta_quantile(double p, double a, double b) {
    if (!(p >= 0.0 && p <= 1.0) || !(a > 0.0) || !(b > 0.0)) {
        throw DomainError("beta_quantile: need 0 <= p <= 1 and a, b > 0");
    }
    if (p == 0.0) return 0.0;
    if (p == 1.0) return 1.0;
    double lo = 0.0;
    double hi = 1.0;
    for (int i = 0; i < 200 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (reg_inc_beta(mid, a, b) < p) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace seqab

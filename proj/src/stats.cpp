#include "probe/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "probe/common.hpp"

namespace probe {

namespace {

void require_valid(const ProportionSample& s, const char* which) {
    if (s.trials < 1)
        throw ProbeError("invalid-sample", std::string(which) + ": trials must be >= 1");
    if (s.successes < 0 || s.successes > s.trials)
        throw ProbeError("invalid-sample", std::string(which) + ": successes out of range");
}

}  // namespace

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_upper_tail(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw ProbeError("invalid-level", "quantile defined on (0,1)");
    // Acklam's rational approximation, then one Halley step against erfc.
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double x;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    for (int i = 0; i < 2; ++i) {
        const double e = normal_cdf(x) - p;
        const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
        x = x - u / (1.0 + x * u / 2.0);
    }
    return x;
}

std::optional<ZTestResult> two_proportion_z_one_sided(ProportionSample high, ProportionSample low) {
    require_valid(high, "high");
    require_valid(low, "low");

    const double n1 = static_cast<double>(high.trials);
    const double n2 = static_cast<double>(low.trials);
    const double pooled =
        static_cast<double>(high.successes + low.successes) / (n1 + n2);
    if (pooled <= 0.0 || pooled >= 1.0) return std::nullopt;

    const double se = std::sqrt(pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2));
    const double z = (high.fraction() - low.fraction()) / se;
    return ZTestResult{z, normal_upper_tail(z)};
}

Interval wilson_interval(ProportionSample sample, double level) {
    require_valid(sample, "sample");
    if (!(level > 0.0 && level < 1.0))
        throw ProbeError("invalid-level", "confidence level must lie in (0,1)");
    const double z = normal_quantile(1.0 - (1.0 - level) / 2.0);
    const double n = static_cast<double>(sample.trials);
    const double p = sample.fraction();
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    return {center - half, center + half};
}

Interval newcombe_interval(ProportionSample high, ProportionSample low, double level) {
    const Interval w1 = wilson_interval(high, level);
    const Interval w2 = wilson_interval(low, level);
    const double p1 = high.fraction();
    const double p2 = low.fraction();
    const double d = p1 - p2;
    const double lo = d - std::sqrt((p1 - w1.lo) * (p1 - w1.lo) + (w2.hi - p2) * (w2.hi - p2));
    const double hi = d + std::sqrt((w1.hi - p1) * (w1.hi - p1) + (p2 - w2.lo) * (p2 - w2.lo));
    return {lo, hi};
}

namespace {

void require_matrix(const std::vector<std::vector<std::string>>& ratings) {
    if (ratings.empty()) throw ProbeError("missing-cell", "no items");
    const std::size_t raters = ratings.front().size();
    if (raters < 2) throw ProbeError("missing-cell", "need at least 2 raters");
    for (std::size_t i = 0; i < ratings.size(); ++i) {
        if (ratings[i].size() != raters)
            throw ProbeError("missing-cell", "item " + std::to_string(i) + " has a ragged row");
        for (const auto& label : ratings[i])
            if (label.empty())
                throw ProbeError("missing-cell", "item " + std::to_string(i) + " has an empty label");
    }
}

}  // namespace

double percent_agreement(const std::vector<std::vector<std::string>>& ratings) {
    require_matrix(ratings);
    const double raters = static_cast<double>(ratings.front().size());
    const double pairs_per_item = raters * (raters - 1.0) / 2.0;
    double total = 0.0;
    for (const auto& row : ratings) {
        std::map<std::string, int> counts;
        for (const auto& label : row) ++counts[label];
        double agreeing = 0.0;
        for (const auto& [label, n] : counts) agreeing += n * (n - 1) / 2.0;
        total += agreeing / pairs_per_item;
    }
    return total / static_cast<double>(ratings.size());
}

std::optional<double> fleiss_kappa(const std::vector<std::vector<std::string>>& ratings) {
    require_matrix(ratings);
    const std::size_t items = ratings.size();
    const std::size_t raters = ratings.front().size();
    const double n = static_cast<double>(raters);

    std::map<std::string, double> marginals;
    double po_sum = 0.0;
    for (const auto& row : ratings) {
        std::map<std::string, int> counts;
        for (const auto& label : row) ++counts[label];
        double sq = 0.0;
        for (const auto& [label, c] : counts) {
            sq += static_cast<double>(c) * c;
            marginals[label] += c;
        }
        po_sum += (sq - n) / (n * (n - 1.0));
    }
    const double po = po_sum / static_cast<double>(items);

    double pe = 0.0;
    const double total = n * static_cast<double>(items);
    for (const auto& [label, c] : marginals) {
        const double pj = c / total;
        pe += pj * pj;
    }
    if (pe >= 1.0) return std::nullopt;
    return (po - pe) / (1.0 - pe);
}

Correlation pearson_r(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size())
        throw ProbeError("length-mismatch", "x and y must have equal length");
    const std::size_t n = x.size();
    if (n < 3) throw ProbeError("too-few-values", "need at least 3 points");

    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);

    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0)
        throw ProbeError("constant-input", "correlation undefined for constant input");

    double r = sxy / std::sqrt(sxx * syy);
    r = std::clamp(r, -1.0, 1.0);

    const double df = static_cast<double>(n - 2);
    double p;
    if (std::abs(r) >= 1.0) {
        p = 0.0;
    } else {
        const double t = r * std::sqrt(df / (1.0 - r * r));
        p = student_t_two_sided_p(t, df);
    }
    return {r, p};
}

// ---------------------------------------------------------------------------
// Student-t tail via the regularized incomplete beta function.

namespace {

double log_gamma(double x) { return std::lgamma(x); }

// Continued fraction for I_x(a,b), Lentz's algorithm.
double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-16;
    constexpr double kFpMin = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
}

double incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = log_gamma(a + b) - log_gamma(a) - log_gamma(b) +
                            a * std::log(x) + b * std::log(1.0 - x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * betacf(a, b, x) / a;
    }
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

}  // namespace

double student_t_two_sided_p(double t, double df) {
    if (df <= 0.0) throw ProbeError("invalid-df", "degrees of freedom must be positive");
    const double x = df / (df + t * t);
    return incomplete_beta(df / 2.0, 0.5, x);
}

}  // namespace probe

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace probe {

struct ProportionSample {
    std::int64_t successes = 0;
    std::int64_t trials = 0;

    double fraction() const { return static_cast<double>(successes) / static_cast<double>(trials); }
};

struct ZTestResult {
    double z = 0.0;
    double p = 0.0;  // one-sided, upper tail
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

struct Correlation {
    double r = 0.0;
    double p = 0.0;  // two-sided
};

/// Pooled two-proportion z test of H1: p_high > p_low. Returns nullopt when
/// the pooled proportion is 0 or 1 (zero variance, z undefined).
std::optional<ZTestResult> two_proportion_z_one_sided(ProportionSample high, ProportionSample low);

/// Newcombe hybrid-score interval for p_high - p_low at the given confidence
/// level. Defined at the boundary proportions as well.
Interval newcombe_interval(ProportionSample high, ProportionSample low, double level = 0.95);

/// Wilson score interval for a single proportion (building block of the above,
/// exposed for reporting).
Interval wilson_interval(ProportionSample sample, double level = 0.95);

/// Mean over items of agreeing rater pairs / total rater pairs.
/// `ratings` is items x raters; labels are opaque strings.
double percent_agreement(const std::vector<std::vector<std::string>>& ratings);

/// Fleiss' kappa with category marginals pooled over items. Returns nullopt
/// when expected agreement is 1 (all mass in one category).
std::optional<double> fleiss_kappa(const std::vector<std::vector<std::string>>& ratings);

/// Sample Pearson correlation with a two-sided p-value from the t transform.
Correlation pearson_r(std::span<const double> x, std::span<const double> y);

// Distribution helpers (shared by the tests' reference oracles).
double normal_cdf(double z);
double normal_upper_tail(double z);
double normal_quantile(double p);
double student_t_two_sided_p(double t, double df);

}  // namespace probe

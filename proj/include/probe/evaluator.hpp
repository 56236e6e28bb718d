#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "probe/corpus.hpp"
#include "probe/gateway.hpp"
#include "probe/stats.hpp"

namespace probe {

struct VariantDecision {
    std::optional<Option> decision;  // nullopt: response failed the grammar
    std::string explanation;
};

struct DecisionEntry {
    std::string record_id;
    Bias bias = Bias::anchoring;
    VariantDecision unbiased;
    VariantDecision biased;

    bool abstained() const { return !unbiased.decision || !biased.decision; }
    bool flipped() const {
        return !abstained() && *unbiased.decision != *biased.decision;
    }
};

struct DecisionLog {
    std::string model;
    std::string profile = "deterministic";
    std::vector<DecisionEntry> entries;
};

/// One deterministic decision query per variant per record.
DecisionLog evaluate_model(Gateway& gateway, const ModelHandle& model,
                           const std::vector<BenchmarkRecord>& dataset, int parallelism = 1);

struct Fraction {
    std::int64_t numerator = 0;
    std::int64_t denominator = 0;
    double value() const { return static_cast<double>(numerator) / static_cast<double>(denominator); }
};

/// Flips / non-abstained records for the bias; throws empty-denominator.
double bias_sensitivity(const DecisionLog& log, Bias bias);
Fraction bias_sensitivity_counts(const DecisionLog& log, Bias bias);

struct TierBoundaries {
    std::int64_t q1 = 0;
    std::int64_t q2 = 0;
    std::int64_t q3 = 0;
};

/// Nearest-rank quartiles (value at ceil(k*n/4), 1-indexed over the sorted
/// multiset). Throws too-few-values below four entries.
TierBoundaries complexity_quartiles(std::vector<std::int64_t> steps);

enum class Tier { low, mid_low, mid_high, high };
std::string_view tier_key(Tier t);
const std::array<Tier, 4>& all_tiers();

Tier assign_tier(std::int64_t steps, const TierBoundaries& boundaries);

/// Sensitivity per (bias, tier) cell; empty cells are simply absent.
std::map<std::pair<Bias, Tier>, Fraction> tiered_sensitivity(
    const DecisionLog& log, const std::vector<BenchmarkRecord>& dataset,
    const TierBoundaries& boundaries);

struct AwarenessResult {
    std::map<std::string, bool> per_record;     // record id -> aware
    std::map<Bias, Fraction> per_bias;          // aware records / judged records
    std::map<Bias, std::int64_t> excluded;      // all-unparseable judge outputs
    std::int64_t total_excluded() const;
};

/// Judges whether the biased-variant explanation explicitly endorses the
/// bias; five runs per record, aware iff a strict majority of parsed
/// verdicts is positive.
AwarenessResult assess_awareness(Gateway& gateway, const ModelHandle& judge,
                                 const DecisionLog& log,
                                 const std::vector<BenchmarkRecord>& dataset, int runs = 5);

struct ProxyCorrelation {
    std::string proxy;
    std::optional<Correlation> value;  // absent under degenerate variance
};

/// Pearson correlation of the per-record flip indicator against the four
/// generation-time proxy metrics.
std::vector<ProxyCorrelation> correlate_proxies(const DecisionLog& log,
                                                const std::vector<BenchmarkRecord>& dataset);

}  // namespace probe

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "probe/config.hpp"
#include "probe/evaluator.hpp"
#include "probe/pipeline.hpp"
#include "probe/prolog.hpp"

namespace probe {

struct GenerateStats {
    std::int64_t candidates = 0;
    std::int64_t accepted = 0;
    std::int64_t discarded = 0;
    std::map<std::string, std::int64_t> expansion_rejections;
    std::int64_t correct_option_a = 0;  // option-side balance of the dataset
    std::int64_t correct_option_b = 0;
};

/// Discard table: one row per filter (report order), one column per bias,
/// plus accepted/candidates accounting rows.
void write_ledger_tsv(const DiscardLedger& ledger, const std::vector<Bias>& biases,
                      const std::filesystem::path& path);

/// Everything needed to re-execute the run byte-identically against the fake
/// gateway: resolved config, seed digest, engine identity, run accounting.
void write_manifest(const RunConfig& config, const std::string& command,
                    const std::string& seed_digest, const EngineConfig& engine,
                    const std::string& engine_version, const GenerateStats& stats,
                    const std::filesystem::path& path);

struct ModelEvaluation {
    std::string model;
    DecisionLog log;
    AwarenessResult awareness;
};

void write_sensitivity_tsv(const std::vector<ModelEvaluation>& evaluations,
                           const std::filesystem::path& path);
void write_tiers_tsv(const std::vector<ModelEvaluation>& evaluations,
                     const std::vector<BenchmarkRecord>& dataset,
                     const std::optional<TierBoundaries>& boundaries,
                     const std::filesystem::path& path);
void write_awareness_tsv(const std::vector<ModelEvaluation>& evaluations,
                         const std::filesystem::path& path);
void write_decisions_tsv(const std::vector<ModelEvaluation>& evaluations,
                         const std::vector<BenchmarkRecord>& dataset,
                         const std::optional<TierBoundaries>& boundaries,
                         const std::filesystem::path& path);

/// Reads a decisions table back into per-model logs (for the stats command).
std::map<std::string, DecisionLog> read_decisions_tsv(const std::filesystem::path& path);

/// High-vs-low-tier significance per bias over binomial counts aggregated
/// across models: one-sided z, p, and the score-method interval for the
/// difference, reported in percentage points.
void write_significance_tsv(const std::map<std::string, DecisionLog>& logs,
                            const std::vector<BenchmarkRecord>& dataset,
                            const std::filesystem::path& path);

void write_proxies_tsv(const std::map<std::string, DecisionLog>& logs,
                       const std::vector<BenchmarkRecord>& dataset,
                       const std::filesystem::path& path);

std::string format_fraction(double value);  // fixed 6-decimal rendering

}  // namespace probe

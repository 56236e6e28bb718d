#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <variant>
#include <vector>

#include "probe/corpus.hpp"
#include "probe/gateway.hpp"
#include "probe/prolog.hpp"
#include "probe/prompts.hpp"
#include "probe/similarity.hpp"

namespace probe {

struct CascadeConfig {
    int batch_size = 5;         // k: pairs requested per expansion prompt
    int judge_runs = 3;         // m: bias-verification votes
    int audit_runs = 5;         // I: decision-matching runs
    double vote_threshold = 0.8;
    double round_trip_tau = kRoundTripTau;
    double collision_tau = kCollisionTau;
    int conversion_retries = 2;
    int divergence_attempts = 10;
    int target_count = 1;       // N: accepted pairs per bias

    /// Throws bad-config naming the offending field.
    void validate() const;
};

/// Agreement floor for the decision-matching audit.
inline constexpr double kAuditAgreement = 0.8;

/// Per-(bias, filter) discard counts plus accepted and parse-rejection
/// accounting. Conservation: accepted + sum(discards) == candidates cascaded.
class DiscardLedger {
public:
    void record_discard(Bias bias, FilterId filter);
    void record_accept(Bias bias);
    void record_expansion_rejection(Bias bias, const std::string& reason);

    std::int64_t discards(Bias bias, FilterId filter) const;
    std::int64_t discards_for_filter(FilterId filter) const;
    std::int64_t total_discards() const;
    std::int64_t accepted(Bias bias) const;
    std::int64_t total_accepted() const;
    /// Candidates that entered the cascade for this bias.
    std::int64_t candidates(Bias bias) const;
    std::map<std::string, std::int64_t> expansion_rejections(Bias bias) const;
    std::int64_t total_expansion_rejections() const;

private:
    mutable std::mutex mutex_;
    std::map<std::pair<Bias, FilterId>, std::int64_t> discards_;
    std::map<Bias, std::int64_t> accepted_;
    std::map<Bias, std::map<std::string, std::int64_t>> expansion_rejections_;
};

/// Binary majority vote: accept iff positive / total >= threshold.
bool vote(const std::vector<bool>& verdicts, double threshold);

struct SeedPair {
    DilemmaText unbiased;
    DilemmaText biased;
};

/// Worked conversion example fed to the text-to-prolog and prolog-to-text
/// prompts for in-context learning.
struct ConversionExample {
    std::string unbiased_text;
    std::string biased_text;
    std::string axioms;
    std::string unbiased_prolog;
    std::string biased_prolog;
    std::string axioms_nl;
};

struct BiasSeeds {
    std::vector<SeedPair> pairs;  // at least two
    ConversionExample example;
};

struct SeedCorpus {
    std::map<Bias, BiasSeeds> entries;
    std::string digest;  // sha256 of the file bytes

    static SeedCorpus load(const std::filesystem::path& path);
    const BiasSeeds& for_bias(Bias bias) const;
};

struct AuditOutcome {
    bool passed = false;
    std::string reason;  // "low-agreement" | "oracle-mismatch"
    double agreement = 0.0;
    int parsed_mode_count = 0;
};

struct GenerateResult {
    std::vector<BenchmarkRecord> records;
};

/// One generation run: the expansion loop plus the six-filter cascade.
class Cascade {
public:
    Cascade(Gateway& gateway, ModelHandle generator, ModelHandle embedder,
            EngineConfig engine, const SeedCorpus& seeds, CascadeConfig config,
            std::string created_at);

    std::vector<DilemmaPair> expand_batch(Bias bias, DiscardLedger& ledger);

    Result<PrologBundle> convert_to_prolog(const DilemmaPair& pair, int retries);

    AuditOutcome audit_decisions(const DilemmaText& unbiased, Option oracle, int runs);

    /// Applies the filters in protocol order; the first failure discards.
    std::variant<BenchmarkRecord, FilterId> run_cascade(const DilemmaPair& candidate,
                                                        CollisionRegistry& registry,
                                                        DiscardLedger& ledger);

    /// Loops expand -> cascade until target_count accepted. Throws
    /// ProbeError("divergence") when at most one candidate has been accepted
    /// after divergence_attempts batches; the ledger stays valid throughout.
    GenerateResult generate_benchmark(Bias bias, CollisionRegistry& registry,
                                      DiscardLedger& ledger);

    const CascadeConfig& config() const { return config_; }

private:
    std::vector<double> embed(const std::string& text);
    std::vector<bool> judge_pair(const DilemmaPair& pair, Option wrong_option);
    std::string reconstruct_text(const PrologBundle& bundle, Bias bias);

    Gateway& gateway_;
    ModelHandle generator_;
    ModelHandle embedder_;
    EngineConfig engine_;
    const SeedCorpus& seeds_;
    CascadeConfig config_;
    std::string created_at_;
    std::map<Bias, int> id_counters_;
};

}  // namespace probe

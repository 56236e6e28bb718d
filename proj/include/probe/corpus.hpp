#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "probe/bias.hpp"
#include "probe/common.hpp"

namespace probe {

/// Ground decision terms produced by the Prolog oracle.
enum class Option { A, B };

std::string_view option_term(Option o);  // "option_A" / "option_B"
std::optional<Option> option_from_term(std::string_view term);
Option other_option(Option o);

/// A dilemma surface: first-person body, two options, closing question.
struct DilemmaText {
    std::string body;
    std::string option_a;
    std::string option_b;
    std::string question;

    /// Canonical surface form: body, "- Option A/B:" lines, question.
    std::string render() const;

    bool operator==(const DilemmaText&) const = default;
};

struct DilemmaPair {
    std::string id;
    Bias bias = Bias::anchoring;
    DilemmaText unbiased;
    DilemmaText biased;
    std::string generator_model;
    std::string created_at;  // UTC ISO-8601

    bool operator==(const DilemmaPair&) const = default;
};

/// Shared axioms plus the two programs and the one-sentence axiom gloss.
struct PrologBundle {
    std::string axioms;
    std::string unbiased_program;
    std::string biased_program;
    std::string axioms_nl;

    const std::string& program(bool biased) const { return biased ? biased_program : unbiased_program; }

    bool operator==(const PrologBundle&) const = default;
};

struct ExecutionTrace {
    Option decision = Option::A;
    std::int64_t inference_steps = 0;
    std::int64_t choice_steps = 0;
    // Operational only; never persisted, excluded from comparisons.
    std::chrono::milliseconds wall_time{0};

    friend bool operator==(const ExecutionTrace& a, const ExecutionTrace& b) {
        return a.decision == b.decision && a.inference_steps == b.inference_steps &&
               a.choice_steps == b.choice_steps;
    }
};

/// The six cascade filters, in the order the cascade applies them.
enum class FilterId {
    intra_dilemma_similarity,
    logic_correctness,
    bias_presence,
    prolog_text_alignment,
    output_matching,
    inter_dilemma_similarity,
};

inline constexpr int kFilterCount = 6;

std::string_view filter_key(FilterId f);      // "intra-dilemma-similarity", ...
std::string_view filter_display(FilterId f);  // ledger row label, "Intra-dilemma similarity", ...
std::optional<FilterId> filter_from_key(std::string_view key);
const std::array<FilterId, kFilterCount>& cascade_filter_order();
const std::array<FilterId, kFilterCount>& ledger_filter_order();

struct FilterOutcome {
    FilterId filter = FilterId::intra_dilemma_similarity;
    bool passed = false;
    std::map<std::string, double> metrics;

    bool operator==(const FilterOutcome&) const = default;
};

struct ValidationTrail {
    std::vector<FilterOutcome> outcomes;

    bool all_passed() const;
    /// Outcomes must follow the cascade order with at most the last one failed.
    bool well_formed() const;

    bool operator==(const ValidationTrail&) const = default;
};

struct BenchmarkRecord {
    DilemmaPair pair;
    PrologBundle bundle;
    ExecutionTrace unbiased_trace;
    ExecutionTrace biased_trace;
    double intra_cosine = 0.0;
    double intra_levenshtein = 0.0;
    double round_trip_cosine = 0.0;
    ValidationTrail trail;

    bool operator==(const BenchmarkRecord&) const = default;
};

/// Parses a raw dilemma surface against the structure template. Returns the
/// parsed text or a named violation: missing-question-mark, missing-option,
/// empty-body, identical-options.
Result<DilemmaText> validate_dilemma_text(std::string_view text);

/// Checks the cross-field invariants an accepted record must satisfy;
/// returns the first violation, or nullopt when the record is sound.
std::optional<std::string> record_invariant_violation(const BenchmarkRecord& record);

/// Line-delimited persistence: one record per line, schema tag "v1", stable
/// field order. Writers to the same path are mutually excluded.
void persist_dataset(const std::vector<BenchmarkRecord>& records, const std::filesystem::path& path);
std::vector<BenchmarkRecord> load_dataset(const std::filesystem::path& path);

std::string record_to_line(const BenchmarkRecord& record);
BenchmarkRecord record_from_line(std::string_view line);

}  // namespace probe

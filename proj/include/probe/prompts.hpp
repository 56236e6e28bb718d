#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "probe/common.hpp"
#include "probe/corpus.hpp"

namespace probe {

enum class PromptKind {
    expansion,
    decision_system,
    text_to_prolog,
    prolog_to_text,
    bias_identification,
    pairwise_bias_check,
    awareness_check,
};

std::string_view prompt_kind_key(PromptKind kind);  // "expansion", "decision-system", ...
std::optional<PromptKind> prompt_kind_from_key(std::string_view key);

/// Raw template text for a kind, exactly as shipped under templates/.
std::string_view prompt_template(PromptKind kind);

/// Placeholder names the kind requires, in template order.
const std::vector<std::string>& prompt_placeholders(PromptKind kind);

/// Substitutes {name} placeholders from the context. "{{" and "}}" pass
/// through untouched. Errors: missing-placeholder (names the key).
Result<std::string> render_prompt(PromptKind kind,
                                  const std::map<std::string, std::string>& context);

/// The affirmative decision literal of a judge prompt, with the bias label
/// substituted where the template parametrizes it.
std::string judge_positive_phrase(PromptKind kind, std::string_view bias_label);

struct CandidateTexts {
    DilemmaText unbiased;
    DilemmaText biased;
};

struct RejectedCandidate {
    std::string reason;   // e.g. "missing-question-mark"
    std::string snippet;  // first line of the offending side, for the run log
};

struct ExpansionParse {
    std::vector<CandidateTexts> candidates;
    std::vector<RejectedCandidate> rejections;
};

/// Extracts (unbiased, biased) pairs from an expansion response. Total:
/// malformed pairs are dropped with a reason, never an error.
ExpansionParse parse_expansion_output(std::string_view text);

/// Extracts the four sections of a conversion response. Errors:
/// missing-section, missing-goal-predicate, missing-consult, empty-axioms.
Result<PrologBundle> parse_prolog_sections(std::string_view text);

struct ExplainedDecision {
    std::string explanation;
    Option decision = Option::A;
};

/// Parses the Explanation/Decision grammar. Errors: missing-decision-line,
/// ambiguous-decision.
Result<ExplainedDecision> parse_explanation_decision(std::string_view text);

struct JudgeVerdict {
    std::string explanation;
    bool positive = false;
};

/// Positive iff the decision line starts with the affirmative literal
/// (case-insensitive prefix). Errors: missing-decision-line.
Result<JudgeVerdict> parse_judge_verdict(std::string_view text, std::string_view positive_phrase);

}  // namespace probe

#include "probe/prompts.hpp"

#include <algorithm>
#include <cctype>

namespace probe {

namespace detail {
// Defined in the generated templates_data.cpp.
extern const std::string_view kTemplateExpansion;
extern const std::string_view kTemplateDecisionSystem;
extern const std::string_view kTemplateTextToProlog;
extern const std::string_view kTemplatePrologToText;
extern const std::string_view kTemplateBiasIdentification;
extern const std::string_view kTemplatePairwiseBiasCheck;
extern const std::string_view kTemplateAwarenessCheck;
}  // namespace detail

namespace {

struct KindEntry {
    PromptKind kind;
    std::string_view key;
};

constexpr std::array<KindEntry, 7> kKinds = {{
    {PromptKind::expansion, "expansion"},
    {PromptKind::decision_system, "decision-system"},
    {PromptKind::text_to_prolog, "text-to-prolog"},
    {PromptKind::prolog_to_text, "prolog-to-text"},
    {PromptKind::bias_identification, "bias-identification"},
    {PromptKind::pairwise_bias_check, "pairwise-bias-check"},
    {PromptKind::awareness_check, "awareness-check"},
}};

bool is_placeholder_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
}

// Scans template text for single-brace {name} slots.
std::vector<std::string> scan_placeholders(std::string_view tpl) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < tpl.size(); ++i) {
        if (tpl[i] != '{') continue;
        if (i + 1 < tpl.size() && tpl[i + 1] == '{') {
            ++i;
            continue;
        }
        std::size_t j = i + 1;
        while (j < tpl.size() && is_placeholder_char(tpl[j])) ++j;
        if (j > i + 1 && j < tpl.size() && tpl[j] == '}') {
            std::string name(tpl.substr(i + 1, j - i - 1));
            if (std::find(names.begin(), names.end(), name) == names.end())
                names.push_back(std::move(name));
            i = j;
        }
    }
    return names;
}

}  // namespace

std::string_view prompt_kind_key(PromptKind kind) {
    for (const auto& e : kKinds)
        if (e.kind == kind) return e.key;
    return kKinds[0].key;
}

std::optional<PromptKind> prompt_kind_from_key(std::string_view key) {
    for (const auto& e : kKinds)
        if (e.key == key) return e.kind;
    return std::nullopt;
}

std::string_view prompt_template(PromptKind kind) {
    switch (kind) {
        case PromptKind::expansion: return detail::kTemplateExpansion;
        case PromptKind::decision_system: return detail::kTemplateDecisionSystem;
        case PromptKind::text_to_prolog: return detail::kTemplateTextToProlog;
        case PromptKind::prolog_to_text: return detail::kTemplatePrologToText;
        case PromptKind::bias_identification: return detail::kTemplateBiasIdentification;
        case PromptKind::pairwise_bias_check: return detail::kTemplatePairwiseBiasCheck;
        case PromptKind::awareness_check: return detail::kTemplateAwarenessCheck;
    }
    return {};
}

const std::vector<std::string>& prompt_placeholders(PromptKind kind) {
    static const auto* table = [] {
        auto* t = new std::map<PromptKind, std::vector<std::string>>;
        for (const auto& e : kKinds) (*t)[e.kind] = scan_placeholders(prompt_template(e.kind));
        return t;
    }();
    return table->at(kind);
}

Result<std::string> render_prompt(PromptKind kind,
                                  const std::map<std::string, std::string>& context) {
    using R = Result<std::string>;
    const std::string_view tpl = prompt_template(kind);
    std::string out;
    out.reserve(tpl.size());
    for (std::size_t i = 0; i < tpl.size(); ++i) {
        if (tpl[i] != '{') {
            out.push_back(tpl[i]);
            continue;
        }
        if (i + 1 < tpl.size() && tpl[i + 1] == '{') {
            // Literal double brace (the prolog-to-text format skeleton).
            out += "{{";
            ++i;
            continue;
        }
        std::size_t j = i + 1;
        while (j < tpl.size() && is_placeholder_char(tpl[j])) ++j;
        if (j > i + 1 && j < tpl.size() && tpl[j] == '}') {
            const std::string name(tpl.substr(i + 1, j - i - 1));
            const auto it = context.find(name);
            if (it == context.end()) return R::failure("missing-placeholder", name);
            out += it->second;
            i = j;
        } else {
            out.push_back(tpl[i]);
        }
    }
    return out;
}

std::string judge_positive_phrase(PromptKind kind, std::string_view bias_label) {
    switch (kind) {
        case PromptKind::pairwise_bias_check:
            return "Yes, BOTH the two POINTS hold true.";
        case PromptKind::bias_identification:
            return "Yes, it has a " + std::string(bias_label) + " and no other bias.";
        case PromptKind::awareness_check:
            return "Yes, the Decision Explanation explicitly endorses the user's " +
                   std::string(bias_label) + ".";
        default:
            return "Yes";
    }
}

// ---------------------------------------------------------------------------
// Expansion output

namespace {

// "## Unbiased Dilemma" -> heading text "unbiased dilemma"
std::optional<std::string> heading_text(std::string_view line) {
    std::size_t i = 0;
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (i >= line.size() || line[i] != '#') return std::nullopt;
    while (i < line.size() && line[i] == '#') ++i;
    return to_lower(trim(line.substr(i)));
}

bool is_fence(std::string_view line) { return trim(line).rfind("```", 0) == 0; }

// Section body: a fenced block when present, otherwise raw lines up to the
// next heading.
std::string collect_section(const std::vector<std::string>& lines, std::size_t& i) {
    while (i < lines.size() && trim(lines[i]).empty()) ++i;
    std::vector<std::string> body;
    if (i < lines.size() && is_fence(lines[i])) {
        ++i;
        while (i < lines.size() && !is_fence(lines[i])) body.push_back(lines[i++]);
        if (i < lines.size()) ++i;  // closing fence
    } else {
        while (i < lines.size() && !heading_text(lines[i])) body.push_back(lines[i++]);
        while (!body.empty() && trim(body.back()).empty()) body.pop_back();
    }
    return join(body, "\n");
}

std::string first_line_of(std::string_view text) {
    const auto pos = text.find('\n');
    return trim(pos == std::string_view::npos ? text : text.substr(0, pos));
}

}  // namespace

ExpansionParse parse_expansion_output(std::string_view text) {
    ExpansionParse out;
    const std::vector<std::string> lines = split_lines(text);

    std::vector<std::string> unbiased_raw, biased_raw;
    std::size_t i = 0;
    while (i < lines.size()) {
        const auto heading = heading_text(lines[i]);
        if (!heading) {
            ++i;
            continue;
        }
        ++i;
        if (heading->rfind("unbiased dilemma", 0) == 0) {
            unbiased_raw.push_back(collect_section(lines, i));
        } else if (heading->rfind("biased dilemma", 0) == 0) {
            biased_raw.push_back(collect_section(lines, i));
        }
    }

    const std::size_t pairs = std::min(unbiased_raw.size(), biased_raw.size());
    for (std::size_t k = pairs; k < unbiased_raw.size(); ++k)
        out.rejections.push_back({"missing-counterpart", first_line_of(unbiased_raw[k])});
    for (std::size_t k = pairs; k < biased_raw.size(); ++k)
        out.rejections.push_back({"missing-counterpart", first_line_of(biased_raw[k])});

    for (std::size_t k = 0; k < pairs; ++k) {
        const auto u = validate_dilemma_text(unbiased_raw[k]);
        if (!u) {
            out.rejections.push_back({u.error().code, first_line_of(unbiased_raw[k])});
            continue;
        }
        const auto b = validate_dilemma_text(biased_raw[k]);
        if (!b) {
            out.rejections.push_back({b.error().code, first_line_of(biased_raw[k])});
            continue;
        }
        if (u.value().render() == b.value().render()) {
            out.rejections.push_back({"identical-variants", first_line_of(unbiased_raw[k])});
            continue;
        }
        out.candidates.push_back({u.value(), b.value()});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Conversion output

Result<PrologBundle> parse_prolog_sections(std::string_view text) {
    using R = Result<PrologBundle>;
    const std::vector<std::string> lines = split_lines(text);

    std::optional<std::string> axioms, unbiased, biased, axioms_nl;
    std::size_t i = 0;
    while (i < lines.size()) {
        const auto heading = heading_text(lines[i]);
        if (!heading) {
            ++i;
            continue;
        }
        ++i;
        if (*heading == "axioms" && !axioms) {
            axioms = collect_section(lines, i);
        } else if (*heading == "unbiased" && !unbiased) {
            unbiased = collect_section(lines, i);
        } else if (*heading == "biased" && !biased) {
            biased = collect_section(lines, i);
        } else if (heading->rfind("nl representation", 0) == 0 && !axioms_nl) {
            std::string nl = collect_section(lines, i);
            // The template wraps the sentence in single backticks.
            std::string t = trim(nl);
            if (t.size() >= 2 && t.front() == '`' && t.back() == '`')
                t = trim(t.substr(1, t.size() - 2));
            axioms_nl = t;
        }
    }

    if (!axioms) return R::failure("missing-section", "Axioms");
    if (!unbiased) return R::failure("missing-section", "Unbiased");
    if (!biased) return R::failure("missing-section", "Biased");
    if (!axioms_nl) return R::failure("missing-section", "NL Representation of Axioms");
    if (trim(*axioms).empty()) return R::failure("empty-axioms", "Axioms section is empty");

    for (const auto* prog : {&*unbiased, &*biased}) {
        const bool is_biased = (prog == &*biased);
        const char* label = is_biased ? "Biased" : "Unbiased";
        if (prog->find("consult(") == std::string::npos)
            return R::failure("missing-consult", std::string(label) + " program lacks a consult directive");
        if (prog->find("decide_option(user") == std::string::npos)
            return R::failure("missing-goal-predicate",
                              std::string(label) + " program lacks decide_option(user, ...)");
    }

    PrologBundle bundle;
    bundle.axioms = *axioms;
    bundle.unbiased_program = *unbiased;
    bundle.biased_program = *biased;
    bundle.axioms_nl = *axioms_nl;
    return bundle;
}

// ---------------------------------------------------------------------------
// Decision grammars

namespace {

// First line whose content (ignoring leading '>'-style noise) starts with the
// label, case-insensitively; returns the text after it.
std::optional<std::string> labeled_line(const std::vector<std::string>& lines,
                                        std::string_view label) {
    for (const auto& raw : lines) {
        const std::string line = trim(raw);
        if (starts_with_ci(line, label)) return trim(line.substr(label.size()));
    }
    return std::nullopt;
}

}  // namespace

Result<ExplainedDecision> parse_explanation_decision(std::string_view text) {
    using R = Result<ExplainedDecision>;
    const auto lines = split_lines(text);
    const auto decision_line = labeled_line(lines, "decision:");
    if (!decision_line) return R::failure("missing-decision-line", "no 'Decision:' line");

    const bool has_a = contains_ci(*decision_line, "option a");
    const bool has_b = contains_ci(*decision_line, "option b");
    if (has_a == has_b)
        return R::failure("ambiguous-decision",
                          has_a ? "both options mentioned" : "no option mentioned");

    ExplainedDecision out;
    out.decision = has_a ? Option::A : Option::B;
    out.explanation = labeled_line(lines, "explanation:").value_or("");
    return out;
}

Result<JudgeVerdict> parse_judge_verdict(std::string_view text, std::string_view positive_phrase) {
    using R = Result<JudgeVerdict>;
    const auto lines = split_lines(text);
    auto decision_line = labeled_line(lines, "decision:");
    if (!decision_line) return R::failure("missing-decision-line", "no 'Decision:' line");

    // Tolerate the quoting the response-format examples use.
    std::string payload = *decision_line;
    while (!payload.empty() && (payload.front() == '\'' || payload.front() == '"' || payload.front() == '`'))
        payload.erase(payload.begin());

    JudgeVerdict verdict;
    verdict.positive = starts_with_ci(payload, positive_phrase);
    verdict.explanation = labeled_line(lines, "explanation:").value_or("");
    return verdict;
}

}  // namespace probe

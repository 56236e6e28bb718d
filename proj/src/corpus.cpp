#include "probe/corpus.hpp"

#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace probe {

using ordered_json = nlohmann::ordered_json;

std::string_view option_term(Option o) { return o == Option::A ? "option_A" : "option_B"; }

std::optional<Option> option_from_term(std::string_view term) {
    if (term == "option_A") return Option::A;
    if (term == "option_B") return Option::B;
    return std::nullopt;
}

Option other_option(Option o) { return o == Option::A ? Option::B : Option::A; }

std::string DilemmaText::render() const {
    std::string out = body;
    out += "\n- Option A: ";
    out += option_a;
    out += "\n- Option B: ";
    out += option_b;
    out += "\n";
    out += question;
    return out;
}

// ---------------------------------------------------------------------------
// Filter taxonomy

namespace {

struct FilterNames {
    FilterId id;
    std::string_view key;
    std::string_view display;
};

constexpr std::array<FilterNames, kFilterCount> kFilters = {{
    {FilterId::intra_dilemma_similarity, "intra-dilemma-similarity", "Intra-dilemma similarity"},
    {FilterId::logic_correctness, "logic-correctness", "Logic correctness"},
    {FilterId::bias_presence, "bias-presence", "Bias presence"},
    {FilterId::prolog_text_alignment, "prolog-text-alignment", "Prolog-text alignment"},
    {FilterId::output_matching, "output-matching", "Output matching"},
    {FilterId::inter_dilemma_similarity, "inter-dilemma-similarity", "Inter-dilemma similarity"},
}};

constexpr std::array<FilterId, kFilterCount> kCascadeOrder = {
    FilterId::intra_dilemma_similarity, FilterId::logic_correctness,
    FilterId::bias_presence,            FilterId::prolog_text_alignment,
    FilterId::output_matching,          FilterId::inter_dilemma_similarity,
};

// Row order of the discard table in reports.
constexpr std::array<FilterId, kFilterCount> kLedgerOrder = {
    FilterId::logic_correctness,    FilterId::intra_dilemma_similarity,
    FilterId::prolog_text_alignment, FilterId::output_matching,
    FilterId::bias_presence,        FilterId::inter_dilemma_similarity,
};

const FilterNames& names_of(FilterId f) {
    for (const auto& n : kFilters)
        if (n.id == f) return n;
    return kFilters[0];
}

}  // namespace

std::string_view filter_key(FilterId f) { return names_of(f).key; }
std::string_view filter_display(FilterId f) { return names_of(f).display; }

std::optional<FilterId> filter_from_key(std::string_view key) {
    for (const auto& n : kFilters)
        if (n.key == key) return n.id;
    return std::nullopt;
}

const std::array<FilterId, kFilterCount>& cascade_filter_order() { return kCascadeOrder; }
const std::array<FilterId, kFilterCount>& ledger_filter_order() { return kLedgerOrder; }

bool ValidationTrail::all_passed() const {
    if (outcomes.empty()) return false;
    for (const auto& o : outcomes)
        if (!o.passed) return false;
    return true;
}

bool ValidationTrail::well_formed() const {
    if (outcomes.size() > kCascadeOrder.size()) return false;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        if (outcomes[i].filter != kCascadeOrder[i]) return false;
        const bool last = (i + 1 == outcomes.size());
        if (!outcomes[i].passed && !last) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Dilemma surface parsing

namespace {

// Matches "- Option A:" / "Option B :" style leads, returns text after colon.
std::optional<std::string> option_line_payload(std::string_view line, char which) {
    std::size_t i = 0;
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (i < line.size() && (line[i] == '-' || line[i] == '*')) ++i;
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (!starts_with_ci(line.substr(i), "option")) return std::nullopt;
    i += 6;
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (i >= line.size() || std::tolower(static_cast<unsigned char>(line[i])) !=
                                std::tolower(static_cast<unsigned char>(which)))
        return std::nullopt;
    ++i;
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (i >= line.size() || line[i] != ':') return std::nullopt;
    return trim(line.substr(i + 1));
}

}  // namespace

Result<DilemmaText> validate_dilemma_text(std::string_view text) {
    using R = Result<DilemmaText>;

    const std::string trimmed = trim(text);
    if (trimmed.empty() || trimmed.back() != '?')
        return R::failure("missing-question-mark", "dilemma does not end with '?'");

    const std::vector<std::string> lines = split_lines(trimmed);
    std::optional<std::size_t> a_line, b_line;
    std::string option_a, option_b;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (!a_line) {
            if (auto payload = option_line_payload(lines[i], 'A')) {
                a_line = i;
                option_a = *payload;
                continue;
            }
        }
        if (!b_line) {
            if (auto payload = option_line_payload(lines[i], 'B')) {
                b_line = i;
                option_b = *payload;
            }
        }
    }
    if (!a_line) return R::failure("missing-option", "Option A not found");
    if (!b_line) return R::failure("missing-option", "Option B not found");
    if (*b_line < *a_line) return R::failure("missing-option", "Option B precedes Option A");
    if (option_a.empty()) return R::failure("missing-option", "Option A is empty");
    if (option_b.empty()) return R::failure("missing-option", "Option B is empty");
    if (option_a == option_b) return R::failure("identical-options", "options A and B are identical");

    std::vector<std::string> body_lines(lines.begin(), lines.begin() + static_cast<long>(*a_line));
    while (!body_lines.empty() && trim(body_lines.back()).empty()) body_lines.pop_back();
    const std::string body = trim(join(body_lines, "\n"));
    if (body.empty()) return R::failure("empty-body", "no task description before the options");

    std::vector<std::string> tail(lines.begin() + static_cast<long>(*b_line) + 1, lines.end());
    std::vector<std::string> question_parts;
    for (const auto& l : tail) {
        const std::string t = trim(l);
        if (!t.empty()) question_parts.push_back(t);
    }
    const std::string question = join(question_parts, " ");
    if (question.empty() || question.back() != '?')
        return R::failure("missing-question-mark", "no closing question after the options");

    DilemmaText out;
    out.body = body;
    out.option_a = option_a;
    out.option_b = option_b;
    out.question = question;
    return out;
}

// ---------------------------------------------------------------------------
// Record invariants

std::optional<std::string> record_invariant_violation(const BenchmarkRecord& r) {
    if (r.pair.id.empty()) return "record id is empty";
    if (r.pair.unbiased.question.empty() || r.pair.unbiased.question.back() != '?')
        return "unbiased question does not end with '?'";
    if (r.pair.biased.question.empty() || r.pair.biased.question.back() != '?')
        return "biased question does not end with '?'";
    if (r.unbiased_trace.decision != r.biased_trace.decision) return "trace decisions differ";
    if (r.unbiased_trace.inference_steps != r.biased_trace.inference_steps)
        return "trace inference steps differ";
    if (r.unbiased_trace.choice_steps != r.biased_trace.choice_steps)
        return "trace choice steps differ";
    if (r.unbiased_trace.inference_steps < 0 || r.unbiased_trace.choice_steps < 0)
        return "negative step count";
    if (r.intra_cosine < -1.0 || r.intra_cosine > 1.0) return "intra cosine out of range";
    if (r.intra_levenshtein < 0.0 || r.intra_levenshtein > 1.0)
        return "intra levenshtein out of range";
    if (!r.trail.well_formed()) return "validation trail out of protocol order";
    if (!r.trail.all_passed()) return "accepted record with failed filter outcome";
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

ordered_json text_to_json(const DilemmaText& t) {
    return ordered_json{{"body", t.body},
                        {"option_a", t.option_a},
                        {"option_b", t.option_b},
                        {"question", t.question}};
}

DilemmaText text_from_json(const ordered_json& j) {
    DilemmaText t;
    t.body = j.at("body").get<std::string>();
    t.option_a = j.at("option_a").get<std::string>();
    t.option_b = j.at("option_b").get<std::string>();
    t.question = j.at("question").get<std::string>();
    return t;
}

ordered_json trace_to_json(const ExecutionTrace& t) {
    return ordered_json{{"decision", std::string(option_term(t.decision))},
                        {"inference_steps", t.inference_steps},
                        {"choice_steps", t.choice_steps}};
}

ExecutionTrace trace_from_json(const ordered_json& j) {
    ExecutionTrace t;
    const auto term = j.at("decision").get<std::string>();
    const auto opt = option_from_term(term);
    if (!opt) throw ProbeError("malformed-line", "unknown decision term: " + term);
    t.decision = *opt;
    t.inference_steps = j.at("inference_steps").get<std::int64_t>();
    t.choice_steps = j.at("choice_steps").get<std::int64_t>();
    return t;
}

}  // namespace

std::string record_to_line(const BenchmarkRecord& r) {
    ordered_json j;
    j["v"] = "v1";
    j["id"] = r.pair.id;
    j["bias"] = std::string(bias_info(r.pair.bias).key);
    j["generator_model"] = r.pair.generator_model;
    j["created_at"] = r.pair.created_at;
    j["unbiased"] = text_to_json(r.pair.unbiased);
    j["biased"] = text_to_json(r.pair.biased);
    j["axioms"] = r.bundle.axioms;
    j["unbiased_program"] = r.bundle.unbiased_program;
    j["biased_program"] = r.bundle.biased_program;
    j["axioms_nl"] = r.bundle.axioms_nl;
    j["unbiased_trace"] = trace_to_json(r.unbiased_trace);
    j["biased_trace"] = trace_to_json(r.biased_trace);
    j["intra_cosine"] = r.intra_cosine;
    j["intra_levenshtein"] = r.intra_levenshtein;
    j["round_trip_cosine"] = r.round_trip_cosine;
    ordered_json trail = ordered_json::array();
    for (const auto& o : r.trail.outcomes) {
        ordered_json metrics = ordered_json::object();
        for (const auto& [k, v] : o.metrics) metrics[k] = v;
        trail.push_back(ordered_json{{"filter", std::string(filter_key(o.filter))},
                                     {"passed", o.passed},
                                     {"metrics", metrics}});
    }
    j["trail"] = trail;
    return j.dump();
}

BenchmarkRecord record_from_line(std::string_view line) {
    ordered_json j;
    try {
        j = ordered_json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw ProbeError("malformed-line", e.what());
    }
    try {
        if (j.at("v").get<std::string>() != "v1")
            throw ProbeError("malformed-line", "unsupported schema version");
        BenchmarkRecord r;
        r.pair.id = j.at("id").get<std::string>();
        const auto bias_key = j.at("bias").get<std::string>();
        const auto bias = bias_from_key(bias_key);
        if (!bias) throw ProbeError("malformed-line", "unknown bias label: " + bias_key);
        r.pair.bias = *bias;
        r.pair.generator_model = j.at("generator_model").get<std::string>();
        r.pair.created_at = j.at("created_at").get<std::string>();
        r.pair.unbiased = text_from_json(j.at("unbiased"));
        r.pair.biased = text_from_json(j.at("biased"));
        r.bundle.axioms = j.at("axioms").get<std::string>();
        r.bundle.unbiased_program = j.at("unbiased_program").get<std::string>();
        r.bundle.biased_program = j.at("biased_program").get<std::string>();
        r.bundle.axioms_nl = j.at("axioms_nl").get<std::string>();
        r.unbiased_trace = trace_from_json(j.at("unbiased_trace"));
        r.biased_trace = trace_from_json(j.at("biased_trace"));
        r.intra_cosine = j.at("intra_cosine").get<double>();
        r.intra_levenshtein = j.at("intra_levenshtein").get<double>();
        r.round_trip_cosine = j.at("round_trip_cosine").get<double>();
        for (const auto& o : j.at("trail")) {
            FilterOutcome out;
            const auto key = o.at("filter").get<std::string>();
            const auto f = filter_from_key(key);
            if (!f) throw ProbeError("malformed-line", "unknown filter id: " + key);
            out.filter = *f;
            out.passed = o.at("passed").get<bool>();
            for (const auto& [k, v] : o.at("metrics").items())
                out.metrics[k] = v.get<double>();
            r.trail.outcomes.push_back(std::move(out));
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw ProbeError("malformed-line", e.what());
    }
}

namespace {

// Writes to one path are serialized; concurrent runs may append to
// different datasets freely.
std::mutex& path_mutex(const std::filesystem::path& path) {
    static std::mutex registry_mutex;
    static std::unordered_map<std::string, std::mutex> registry;
    std::error_code ec;
    auto canonical = std::filesystem::weakly_canonical(path, ec);
    const std::string key = ec ? path.string() : canonical.string();
    std::lock_guard<std::mutex> lock(registry_mutex);
    return registry[key];
}

}  // namespace

void persist_dataset(const std::vector<BenchmarkRecord>& records, const std::filesystem::path& path) {
    std::vector<std::string> lines;
    lines.reserve(records.size());
    std::set<std::string> seen;
    for (const auto& r : records) {
        if (auto violation = record_invariant_violation(r))
            throw ProbeError("serialization-failure", r.pair.id + ": " + *violation);
        if (!seen.insert(r.pair.id).second)
            throw ProbeError("serialization-failure", "duplicate record id: " + r.pair.id);
        lines.push_back(record_to_line(r));
    }

    std::lock_guard<std::mutex> lock(path_mutex(path));
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ProbeError("unwritable-path", "cannot open " + path.string());
    for (const auto& line : lines) out << line << '\n';
    out.flush();
    if (!out) throw ProbeError("unwritable-path", "write failed for " + path.string());
}

std::vector<BenchmarkRecord> load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ProbeError("unwritable-path", "cannot open " + path.string());
    std::vector<BenchmarkRecord> records;
    std::set<std::string> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        BenchmarkRecord r;
        try {
            r = record_from_line(line);
        } catch (const ProbeError& e) {
            throw ProbeError("malformed-line",
                             "line " + std::to_string(lineno) + ": " + e.what());
        }
        if (!seen.insert(r.pair.id).second)
            throw ProbeError("duplicate-id",
                             "line " + std::to_string(lineno) + ": id " + r.pair.id);
        records.push_back(std::move(r));
    }
    return records;
}

}  // namespace probe

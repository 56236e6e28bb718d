#include "probe/pipeline.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace probe {

using json = nlohmann::json;

void CascadeConfig::validate() const {
    auto bad = [](const std::string& field) {
        throw ProbeError("bad-config", "cascade." + field);
    };
    if (batch_size < 1) bad("batch_size");
    if (judge_runs < 1) bad("judge_runs");
    if (audit_runs < 1) bad("audit_runs");
    if (!(vote_threshold > 0.0 && vote_threshold <= 1.0)) bad("vote_threshold");
    if (!(round_trip_tau > 0.0 && round_trip_tau <= 1.0)) bad("round_trip_tau");
    if (!(collision_tau > 0.0 && collision_tau <= 1.0)) bad("collision_tau");
    if (conversion_retries < 0) bad("conversion_retries");
    if (divergence_attempts < 1) bad("divergence_attempts");
    if (target_count < 1) bad("target_count");
}

// ---------------------------------------------------------------------------
// Ledger

void DiscardLedger::record_discard(Bias bias, FilterId filter) {
    std::lock_guard<std::mutex> lock(mutex_);
    ++discards_[{bias, filter}];
}

void DiscardLedger::record_accept(Bias bias) {
    std::lock_guard<std::mutex> lock(mutex_);
    ++accepted_[bias];
}

void DiscardLedger::record_expansion_rejection(Bias bias, const std::string& reason) {
    std::lock_guard<std::mutex> lock(mutex_);
    ++expansion_rejections_[bias][reason];
}

std::int64_t DiscardLedger::discards(Bias bias, FilterId filter) const {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = discards_.find({bias, filter});
    return it == discards_.end() ? 0 : it->second;
}

std::int64_t DiscardLedger::discards_for_filter(FilterId filter) const {
    std::lock_guard<std::mutex> lock(mutex_);
    std::int64_t total = 0;
    for (const auto& [key, count] : discards_)
        if (key.second == filter) total += count;
    return total;
}

std::int64_t DiscardLedger::total_discards() const {
    std::lock_guard<std::mutex> lock(mutex_);
    std::int64_t total = 0;
    for (const auto& [key, count] : discards_) total += count;
    return total;
}

std::int64_t DiscardLedger::accepted(Bias bias) const {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = accepted_.find(bias);
    return it == accepted_.end() ? 0 : it->second;
}

std::int64_t DiscardLedger::total_accepted() const {
    std::lock_guard<std::mutex> lock(mutex_);
    std::int64_t total = 0;
    for (const auto& [bias, count] : accepted_) total += count;
    return total;
}

std::int64_t DiscardLedger::candidates(Bias bias) const {
    std::lock_guard<std::mutex> lock(mutex_);
    std::int64_t total = 0;
    if (auto it = accepted_.find(bias); it != accepted_.end()) total += it->second;
    for (const auto& [key, count] : discards_)
        if (key.first == bias) total += count;
    return total;
}

std::map<std::string, std::int64_t> DiscardLedger::expansion_rejections(Bias bias) const {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = expansion_rejections_.find(bias);
    return it == expansion_rejections_.end() ? std::map<std::string, std::int64_t>{} : it->second;
}

std::int64_t DiscardLedger::total_expansion_rejections() const {
    std::lock_guard<std::mutex> lock(mutex_);
    std::int64_t total = 0;
    for (const auto& [bias, reasons] : expansion_rejections_)
        for (const auto& [reason, count] : reasons) total += count;
    return total;
}

// ---------------------------------------------------------------------------

bool vote(const std::vector<bool>& verdicts, double threshold) {
    if (verdicts.empty()) throw ProbeError("bad-config", "vote over zero verdicts");
    int positive = 0;
    for (bool v : verdicts) positive += v ? 1 : 0;
    return static_cast<double>(positive) / static_cast<double>(verdicts.size()) >= threshold;
}

// ---------------------------------------------------------------------------
// Seed corpus

namespace {

DilemmaText seed_text(const json& j, const std::string& where) {
    const auto parsed = validate_dilemma_text(j.get<std::string>());
    if (!parsed)
        throw ProbeError("bad-config",
                         "seed corpus: " + where + ": " + parsed.error().code + " (" +
                             parsed.error().message + ")");
    return parsed.value();
}

}  // namespace

SeedCorpus SeedCorpus::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ProbeError("bad-config", "seed corpus not readable: " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string bytes = buf.str();

    json doc;
    try {
        doc = json::parse(bytes);
    } catch (const json::exception& e) {
        throw ProbeError("bad-config", "seed corpus is not valid JSON: " + std::string(e.what()));
    }

    SeedCorpus corpus;
    corpus.digest = sha256_hex(bytes);
    if (!doc.contains("biases") || !doc["biases"].is_object())
        throw ProbeError("bad-config", "seed corpus lacks a 'biases' object");

    for (const auto& [key, entry] : doc["biases"].items()) {
        const auto bias = bias_from_key(key);
        if (!bias) throw ProbeError("bad-config", "seed corpus: unknown bias '" + key + "'");
        BiasSeeds seeds;
        for (const auto& pair : entry.at("pairs")) {
            SeedPair sp;
            sp.unbiased = seed_text(pair.at("unbiased"), key + ".pairs.unbiased");
            sp.biased = seed_text(pair.at("biased"), key + ".pairs.biased");
            seeds.pairs.push_back(std::move(sp));
        }
        if (seeds.pairs.size() < 2)
            throw ProbeError("bad-config", "seed corpus: bias '" + key + "' needs two seed pairs");
        const auto& ex = entry.at("conversion_example");
        seeds.example.unbiased_text = ex.at("unbiased_text").get<std::string>();
        seeds.example.biased_text = ex.at("biased_text").get<std::string>();
        seeds.example.axioms = ex.at("axioms").get<std::string>();
        seeds.example.unbiased_prolog = ex.at("unbiased_prolog").get<std::string>();
        seeds.example.biased_prolog = ex.at("biased_prolog").get<std::string>();
        seeds.example.axioms_nl = ex.at("axioms_nl").get<std::string>();
        corpus.entries[*bias] = std::move(seeds);
    }
    return corpus;
}

const BiasSeeds& SeedCorpus::for_bias(Bias bias) const {
    auto it = entries.find(bias);
    if (it == entries.end())
        throw ProbeError("bad-config",
                         "seed corpus has no entry for bias '" +
                             std::string(bias_info(bias).key) + "'");
    return it->second;
}

// ---------------------------------------------------------------------------
// Cascade

Cascade::Cascade(Gateway& gateway, ModelHandle generator, ModelHandle embedder,
                 EngineConfig engine, const SeedCorpus& seeds, CascadeConfig config,
                 std::string created_at)
    : gateway_(gateway),
      generator_(std::move(generator)),
      embedder_(std::move(embedder)),
      engine_(std::move(engine)),
      seeds_(seeds),
      config_(config),
      created_at_(std::move(created_at)) {
    config_.validate();
}

std::vector<double> Cascade::embed(const std::string& text) {
    return gateway_.embed_text(embedder_, text);
}

std::vector<DilemmaPair> Cascade::expand_batch(Bias bias, DiscardLedger& ledger) {
    const BiasSeeds& seeds = seeds_.for_bias(bias);
    const BiasInfo& info = bias_info(bias);

    std::map<std::string, std::string> context;
    context["batch_size"] = std::to_string(config_.batch_size);
    context["bias_label"] = std::string(info.prompt_label);
    context["pair_1_nobias"] = seeds.pairs[0].unbiased.render();
    context["pair_1_bias"] = seeds.pairs[0].biased.render();
    context["pair_2_nobias"] = seeds.pairs[1].unbiased.render();
    context["pair_2_bias"] = seeds.pairs[1].biased.render();

    const auto prompt = render_prompt(PromptKind::expansion, context);
    if (!prompt) throw ProbeError("bad-config", "expansion template: " + prompt.error().code);

    const std::string response = gateway_.complete_chat(generator_, "", prompt.value(),
                                                        creative_profile(), "expansion");
    const ExpansionParse parsed = parse_expansion_output(response);
    for (const auto& rejection : parsed.rejections)
        ledger.record_expansion_rejection(bias, rejection.reason);

    std::vector<DilemmaPair> pairs;
    pairs.reserve(parsed.candidates.size());
    for (const auto& candidate : parsed.candidates) {
        DilemmaPair pair;
        const int seq = ++id_counters_[bias];
        pair.id = std::string(info.key) + "-" + std::to_string(seq);
        pair.bias = bias;
        pair.unbiased = candidate.unbiased;
        pair.biased = candidate.biased;
        pair.generator_model = generator_.model;
        pair.created_at = created_at_;
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

Result<PrologBundle> Cascade::convert_to_prolog(const DilemmaPair& pair, int retries) {
    const BiasSeeds& seeds = seeds_.for_bias(pair.bias);
    const BiasInfo& info = bias_info(pair.bias);

    std::map<std::string, std::string> context;
    context["bias_label"] = std::string(info.prompt_label);
    context["unbiased_description_example_1"] = seeds.example.unbiased_text;
    context["biased_description_example_1"] = seeds.example.biased_text;
    context["prolog_axioms_example_1"] = seeds.example.axioms;
    context["unbiased_prolog_example_1"] = seeds.example.unbiased_prolog;
    context["biased_prolog_example_1"] = seeds.example.biased_prolog;
    context["axioms_description_example_1"] = seeds.example.axioms_nl;

    const auto system = render_prompt(PromptKind::text_to_prolog, context);
    if (!system) throw ProbeError("bad-config", "conversion template: " + system.error().code);

    const std::string user = "## Unbiased NL Dilemma\n" + pair.unbiased.render() +
                             "\n\n## Biased NL Dilemma\n" + pair.biased.render() + "\n";

    std::string last_error = "no attempts made";
    for (int attempt = 0; attempt <= retries; ++attempt) {
        const std::string response = gateway_.complete_chat(
            generator_, system.value(), user, deterministic_profile(), "text-to-prolog");
        auto parsed = parse_prolog_sections(response);
        if (parsed) return parsed;
        last_error = parsed.error().code;
    }
    return Result<PrologBundle>::failure("conversion-exhausted", last_error);
}

std::vector<bool> Cascade::judge_pair(const DilemmaPair& pair, Option wrong_option) {
    const BiasInfo& info = bias_info(pair.bias);
    std::map<std::string, std::string> context;
    context["bias_label"] = std::string(info.prompt_label);
    context["bias_definition"] = std::string(info.definition);
    context["wrong_option"] = wrong_option == Option::A ? "Option A" : "Option B";

    const auto system = render_prompt(PromptKind::pairwise_bias_check, context);
    if (!system) throw ProbeError("bad-config", "pairwise template: " + system.error().code);

    const std::string user = "# Version A\n" + pair.unbiased.render() + "\n\n# Version B\n" +
                             pair.biased.render() + "\n";
    const std::string positive = judge_positive_phrase(PromptKind::pairwise_bias_check, info.prompt_label);

    std::vector<bool> verdicts;
    verdicts.reserve(static_cast<std::size_t>(config_.judge_runs));
    for (int run = 0; run < config_.judge_runs; ++run) {
        const std::string response = gateway_.complete_chat(
            generator_, system.value(), user, deterministic_profile(), "pairwise-bias-check");
        const auto verdict = parse_judge_verdict(response, positive);
        // An unparseable judge run counts as a negative vote.
        verdicts.push_back(verdict ? verdict.value().positive : false);
    }
    return verdicts;
}

std::string Cascade::reconstruct_text(const PrologBundle& bundle, Bias bias) {
    const BiasSeeds& seeds = seeds_.for_bias(bias);
    std::map<std::string, std::string> context;
    context["dilemma_example"] = seeds.example.unbiased_prolog;
    context["description_example"] = seeds.example.unbiased_text;
    context["dilemma_to_encode"] = bundle.unbiased_program;

    const auto prompt = render_prompt(PromptKind::prolog_to_text, context);
    if (!prompt) throw ProbeError("bad-config", "round-trip template: " + prompt.error().code);

    return trim(gateway_.complete_chat(generator_, "", prompt.value(), deterministic_profile(),
                                       "prolog-to-text"));
}

AuditOutcome Cascade::audit_decisions(const DilemmaText& unbiased, Option oracle, int runs) {
    if (runs < 1) throw ProbeError("bad-config", "audit_runs");
    const auto system = render_prompt(PromptKind::decision_system, {});
    if (!system) throw ProbeError("bad-config", "decision template: " + system.error().code);

    int count_a = 0, count_b = 0;
    for (int run = 0; run < runs; ++run) {
        const std::string response = gateway_.complete_chat(
            generator_, system.value(), unbiased.render(), deterministic_profile(),
            "decision-system");
        const auto decision = parse_explanation_decision(response);
        if (!decision) continue;  // counts as disagreement with the mode
        (decision.value().decision == Option::A ? count_a : count_b) += 1;
    }

    AuditOutcome outcome;
    const Option modal = count_a >= count_b ? Option::A : Option::B;
    const int modal_count = std::max(count_a, count_b);
    outcome.parsed_mode_count = modal_count;
    outcome.agreement = static_cast<double>(modal_count) / static_cast<double>(runs);
    if (outcome.agreement < kAuditAgreement) {
        outcome.passed = false;
        outcome.reason = "low-agreement";
    } else if (modal != oracle) {
        outcome.passed = false;
        outcome.reason = "oracle-mismatch";
    } else {
        outcome.passed = true;
    }
    return outcome;
}

std::variant<BenchmarkRecord, FilterId> Cascade::run_cascade(const DilemmaPair& candidate,
                                                             CollisionRegistry& registry,
                                                             DiscardLedger& ledger) {
    BenchmarkRecord record;
    record.pair = candidate;

    auto discard = [&](FilterId filter) -> std::variant<BenchmarkRecord, FilterId> {
        ledger.record_discard(candidate.bias, filter);
        return filter;
    };

    // 1. Intra-dilemma similarity band.
    const std::string unbiased_surface = candidate.unbiased.render();
    const std::string biased_surface = candidate.biased.render();
    const auto unbiased_vec = embed(unbiased_surface);
    const auto biased_vec = embed(biased_surface);
    record.intra_cosine = cosine_similarity(unbiased_vec, biased_vec);
    record.intra_levenshtein = normalized_levenshtein(unbiased_surface, biased_surface);

    FilterOutcome intra;
    intra.filter = FilterId::intra_dilemma_similarity;
    intra.passed = check_intra_band(record.intra_cosine, candidate.bias);
    intra.metrics["cosine"] = record.intra_cosine;
    intra.metrics["levenshtein"] = record.intra_levenshtein;
    record.trail.outcomes.push_back(intra);
    if (!intra.passed) return discard(FilterId::intra_dilemma_similarity);

    // 2. Logic correctness: conversion, execution, equivalence.
    FilterOutcome logic;
    logic.filter = FilterId::logic_correctness;
    auto bundle = convert_to_prolog(candidate, config_.conversion_retries);
    if (!bundle) {
        logic.passed = false;
        record.trail.outcomes.push_back(logic);
        return discard(FilterId::logic_correctness);
    }
    record.bundle = bundle.value();
    try {
        record.unbiased_trace = execute_program(record.bundle, Variant::unbiased, engine_);
        record.biased_trace = execute_program(record.bundle, Variant::biased, engine_);
    } catch (const ProbeError& e) {
        // A non-executable program is a protocol discard; infrastructure
        // faults abort the run instead.
        if (e.code() == "engine-not-found" || e.code() == "bad-config") throw;
        logic.passed = false;
        record.trail.outcomes.push_back(logic);
        return discard(FilterId::logic_correctness);
    }
    const EquivalenceCheck equivalence =
        verify_pair_equivalence(record.unbiased_trace, record.biased_trace);
    logic.passed = equivalence.passed;
    logic.metrics["inference_steps"] = static_cast<double>(record.unbiased_trace.inference_steps);
    logic.metrics["choice_steps"] = static_cast<double>(record.unbiased_trace.choice_steps);
    record.trail.outcomes.push_back(logic);
    if (!equivalence.passed) return discard(FilterId::logic_correctness);

    const Option oracle = record.unbiased_trace.decision;
    const Option wrong_option = other_option(oracle);

    // 3. Bias presence: m judge runs, binary majority vote.
    FilterOutcome presence;
    presence.filter = FilterId::bias_presence;
    const std::vector<bool> verdicts = judge_pair(candidate, wrong_option);
    int positive = 0;
    for (bool v : verdicts) positive += v ? 1 : 0;
    presence.passed = vote(verdicts, config_.vote_threshold);
    presence.metrics["votes_positive"] = positive;
    presence.metrics["votes_total"] = static_cast<double>(verdicts.size());
    record.trail.outcomes.push_back(presence);
    if (!presence.passed) return discard(FilterId::bias_presence);

    // 4. Prolog-text alignment: reconstruct from the unbiased program.
    FilterOutcome alignment;
    alignment.filter = FilterId::prolog_text_alignment;
    const std::string reconstruction = reconstruct_text(record.bundle, candidate.bias);
    const auto reconstruction_vec = embed(reconstruction);
    record.round_trip_cosine = cosine_similarity(unbiased_vec, reconstruction_vec);
    alignment.passed = check_round_trip(record.round_trip_cosine, config_.round_trip_tau);
    alignment.metrics["round_trip_cosine"] = record.round_trip_cosine;
    record.trail.outcomes.push_back(alignment);
    if (!alignment.passed) return discard(FilterId::prolog_text_alignment);

    // 5. Output matching: decision audit against the oracle.
    FilterOutcome matching;
    matching.filter = FilterId::output_matching;
    const AuditOutcome audit = audit_decisions(candidate.unbiased, oracle, config_.audit_runs);
    matching.passed = audit.passed;
    matching.metrics["agreement"] = audit.agreement;
    record.trail.outcomes.push_back(matching);
    if (!audit.passed) return discard(FilterId::output_matching);

    // 6. Inter-dilemma similarity: collision against accepted dilemmas.
    FilterOutcome collision;
    collision.filter = FilterId::inter_dilemma_similarity;
    const auto hit = registry.first_collision(unbiased_vec, config_.collision_tau);
    collision.passed = !hit.has_value();
    collision.metrics["registry_size"] = static_cast<double>(registry.size());
    record.trail.outcomes.push_back(collision);
    if (hit) return discard(FilterId::inter_dilemma_similarity);

    registry.add(unbiased_vec, candidate.id);
    ledger.record_accept(candidate.bias);
    return record;
}

GenerateResult Cascade::generate_benchmark(Bias bias, CollisionRegistry& registry,
                                           DiscardLedger& ledger) {
    GenerateResult result;
    int batches = 0;
    while (static_cast<int>(result.records.size()) < config_.target_count) {
        if (batches >= config_.divergence_attempts &&
            static_cast<int>(result.records.size()) <= 1) {
            throw ProbeError("divergence",
                             std::string(bias_info(bias).key) + ": " +
                                 std::to_string(result.records.size()) + " accepted after " +
                                 std::to_string(batches) + " batches");
        }
        const std::vector<DilemmaPair> batch = expand_batch(bias, ledger);
        ++batches;
        for (const auto& candidate : batch) {
            auto outcome = run_cascade(candidate, registry, ledger);
            if (std::holds_alternative<BenchmarkRecord>(outcome)) {
                result.records.push_back(std::get<BenchmarkRecord>(std::move(outcome)));
                if (static_cast<int>(result.records.size()) >= config_.target_count) break;
            }
        }
    }
    return result;
}

}  // namespace probe

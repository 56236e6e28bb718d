#include "probe/cli.hpp"

#include <cmath>
#include <iostream>

#include <CLI11.hpp>

#include "probe/config.hpp"
#include "probe/report.hpp"
#include "probe/similarity.hpp"

namespace probe {

namespace {

Gateway make_gateway(const RunConfig& config) {
    GatewayOptions options;
    options.max_in_flight = config.parallelism;
    return Gateway(make_transport(config), std::move(options));
}

int run_generate(const RunConfig& config) {
    // Environment errors surface before any model call.
    const EngineConfig engine = engine_from_env();
    if (!engine_available(engine))
        throw ProbeError("engine-not-found",
                         "Prolog engine '" + engine.executable +
                             "' is not runnable; set PROBE_SWIPL");
    const std::string engine_ver = engine_version(engine);
    const SeedCorpus seeds = SeedCorpus::load(config.seed_corpus);
    Gateway gateway = make_gateway(config);

    std::filesystem::create_directories(config.output_dir);
    const std::filesystem::path out_dir(config.output_dir);

    Cascade cascade(gateway, config.generator_handle(), config.embedding_handle(), engine,
                    seeds, config.cascade, config.effective_created_at());
    CollisionRegistry registry;
    DiscardLedger ledger;
    std::vector<BenchmarkRecord> records;

    std::string failure;
    for (Bias bias : config.biases) {
        try {
            GenerateResult result = cascade.generate_benchmark(bias, registry, ledger);
            std::cout << bias_info(bias).key << ": accepted " << result.records.size()
                      << " of " << ledger.candidates(bias) << " candidates\n";
            for (auto& record : result.records) records.push_back(std::move(record));
        } catch (const ProbeError& e) {
            if (std::string(e.code()) != "divergence") throw;
            failure = e.what();
            break;
        }
    }

    GenerateStats stats;
    stats.candidates = ledger.total_accepted() + ledger.total_discards();
    stats.accepted = ledger.total_accepted();
    stats.discarded = ledger.total_discards();
    for (Bias bias : config.biases)
        for (const auto& [reason, count] : ledger.expansion_rejections(bias))
            stats.expansion_rejections[reason] += count;
    for (const auto& record : records) {
        if (record.unbiased_trace.decision == Option::A)
            ++stats.correct_option_a;
        else
            ++stats.correct_option_b;
    }

    persist_dataset(records, out_dir / "dataset.v1");
    write_ledger_tsv(ledger, config.biases, out_dir / "ledger.tsv");
    write_manifest(config, "generate", seeds.digest, engine, engine_ver, stats,
                   out_dir / "manifest.v1");

    if (!failure.empty()) {
        std::cerr << "probe: " << failure << "\n";
        return 1;
    }
    std::cout << "dataset: " << (out_dir / "dataset.v1").string() << " (" << records.size()
              << " records)\n";
    return 0;
}

int run_evaluate(const RunConfig& config, const std::string& dataset_path,
                 std::vector<std::string> models) {
    const std::vector<BenchmarkRecord> dataset = load_dataset(dataset_path);
    if (dataset.empty()) throw ProbeError("bad-config", "dataset is empty: " + dataset_path);
    if (models.empty()) models = config.evaluated_models;
    if (models.empty()) throw ProbeError("bad-config", "evaluated_models: none configured");

    Gateway gateway = make_gateway(config);
    const ModelHandle judge = config.generator_handle();

    std::vector<std::int64_t> steps;
    steps.reserve(dataset.size());
    for (const auto& record : dataset) steps.push_back(record.unbiased_trace.inference_steps);
    std::optional<TierBoundaries> boundaries;
    if (steps.size() >= 4) boundaries = complexity_quartiles(steps);

    std::vector<ModelEvaluation> evaluations;
    for (const auto& model_id : models) {
        ModelHandle handle = config.generator_handle();
        handle.model = model_id;
        ModelEvaluation eval;
        eval.model = model_id;
        eval.log = evaluate_model(gateway, handle, dataset, config.parallelism);
        eval.awareness = assess_awareness(gateway, judge, eval.log, dataset);
        evaluations.push_back(std::move(eval));
        std::cout << "evaluated " << model_id << " on " << dataset.size() << " records\n";
    }

    const std::filesystem::path reports = std::filesystem::path(config.output_dir) / "reports";
    write_sensitivity_tsv(evaluations, reports / "sensitivity.tsv");
    write_tiers_tsv(evaluations, dataset, boundaries, reports / "tiers.tsv");
    write_awareness_tsv(evaluations, reports / "awareness.tsv");
    write_decisions_tsv(evaluations, dataset, boundaries, reports / "decisions.tsv");
    std::cout << "reports: " << reports.string() << "\n";
    return 0;
}

int run_stats(const std::string& report_path, const std::string& dataset_path,
              const std::string& out_dir_arg) {
    const std::string out_dir = out_dir_arg.empty() ? "." : out_dir_arg;
    const std::vector<BenchmarkRecord> dataset = load_dataset(dataset_path);
    const auto logs = read_decisions_tsv(report_path);
    if (logs.empty()) throw ProbeError("bad-config", "decisions report has no rows");
    const std::filesystem::path reports = std::filesystem::path(out_dir) / "reports";
    write_significance_tsv(logs, dataset, reports / "significance.tsv");
    write_proxies_tsv(logs, dataset, reports / "proxies.tsv");
    std::cout << "reports: " << (reports / "significance.tsv").string() << ", "
              << (reports / "proxies.tsv").string() << "\n";
    return 0;
}

int run_validate(const RunConfig& config, const std::string& dataset_path) {
    const std::vector<BenchmarkRecord> dataset = load_dataset(dataset_path);
    const EngineConfig engine = engine_from_env();
    const bool engine_ok = engine_available(engine);
    const bool offline_embedder = config.embedding_model == kHashEmbeddingModel;
    if (!engine_ok)
        std::cerr << "probe: engine unavailable; skipping re-execution checks\n";

    int failures = 0;
    std::vector<std::vector<double>> registry;
    for (const auto& record : dataset) {
        std::vector<std::string> reasons;
        if (auto violation = record_invariant_violation(record)) reasons.push_back(*violation);

        if (!check_intra_band(record.intra_cosine, record.pair.bias))
            reasons.push_back("intra cosine outside the acceptance band");
        if (!check_round_trip(record.round_trip_cosine, config.cascade.round_trip_tau))
            reasons.push_back("round-trip similarity at or below tau");

        const std::string unbiased_surface = record.pair.unbiased.render();
        const std::string biased_surface = record.pair.biased.render();
        const double lev = normalized_levenshtein(unbiased_surface, biased_surface);
        if (std::abs(lev - record.intra_levenshtein) > 1e-9)
            reasons.push_back("stored levenshtein does not match the texts");

        if (offline_embedder) {
            const auto u = hash_embedding(unbiased_surface);
            const auto b = hash_embedding(biased_surface);
            const double cosine = cosine_similarity(u, b);
            if (std::abs(cosine - record.intra_cosine) > 1e-9)
                reasons.push_back("stored intra cosine does not match the texts");
            if (check_collision(u, registry, config.cascade.collision_tau))
                reasons.push_back("collides with an earlier record");
            registry.push_back(u);
        }

        if (engine_ok) {
            try {
                const auto unbiased = execute_program(record.bundle, Variant::unbiased, engine);
                const auto biased = execute_program(record.bundle, Variant::biased, engine);
                if (!(unbiased == record.unbiased_trace))
                    reasons.push_back("unbiased re-execution trace differs");
                if (!(biased == record.biased_trace))
                    reasons.push_back("biased re-execution trace differs");
            } catch (const ProbeError& e) {
                reasons.push_back(std::string("re-execution failed: ") + e.what());
            }
        }

        if (reasons.empty()) {
            std::cout << record.pair.id << ": ok\n";
        } else {
            ++failures;
            for (const auto& reason : reasons)
                std::cout << record.pair.id << ": FAIL: " << reason << "\n";
        }
    }
    std::cout << (dataset.size() - static_cast<std::size_t>(failures)) << "/" << dataset.size()
              << " records valid\n";
    return failures == 0 ? 0 : 1;
}

}  // namespace

int dispatch(const std::vector<std::string>& args) {
    CLI::App app{"Dynamic cognitive-bias benchmark pipeline"};
    app.require_subcommand(1);

    std::string config_path, dataset_path, report_path, out_dir;
    std::vector<std::string> bias_keys, models;
    int count = 0;

    auto* generate = app.add_subcommand("generate", "Generate a benchmark dataset");
    generate->add_option("--config", config_path, "Run configuration file")->required();
    generate->add_option("--bias", bias_keys, "Bias subset override");
    generate->add_option("--count", count, "Accepted pairs per bias override");
    generate->add_option("--out", out_dir, "Output directory override");

    auto* evaluate = app.add_subcommand("evaluate", "Evaluate models on a dataset");
    evaluate->add_option("--config", config_path, "Run configuration file")->required();
    evaluate->add_option("--dataset", dataset_path, "Dataset file")->required();
    evaluate->add_option("--model", models, "Model id override");
    evaluate->add_option("--out", out_dir, "Output directory override");

    auto* stats = app.add_subcommand("stats", "Tier significance and proxy correlations");
    stats->add_option("--report", report_path, "decisions.tsv from evaluate")->required();
    stats->add_option("--dataset", dataset_path, "Dataset file")->required();
    stats->add_option("--out", out_dir, "Output directory");

    auto* validate = app.add_subcommand("validate", "Re-check an existing dataset");
    validate->add_option("--config", config_path, "Run configuration file")->required();
    validate->add_option("--dataset", dataset_path, "Dataset file")->required();

    std::vector<std::string> argv_like = args;
    argv_like.insert(argv_like.begin(), "probe");
    std::vector<char*> argv;
    argv.reserve(argv_like.size());
    for (auto& a : argv_like) argv.push_back(a.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {  // --help
            std::cout << app.help();
            return 0;
        }
        std::cerr << "probe: " << e.what() << "\n";
        return 2;
    }

    try {
        if (stats->parsed()) return run_stats(report_path, dataset_path, out_dir);

        RunConfig config = RunConfig::load_file(config_path);
        if (!bias_keys.empty()) {
            config.biases.clear();
            for (const auto& key : bias_keys) {
                const auto bias = bias_from_key(key);
                if (!bias) throw ProbeError("bad-config", "--bias: unknown label '" + key + "'");
                config.biases.push_back(*bias);
            }
        }
        if (count > 0) config.cascade.target_count = count;
        if (!out_dir.empty()) config.output_dir = out_dir;
        config.validate();

        if (generate->parsed()) return run_generate(config);
        if (evaluate->parsed()) return run_evaluate(config, dataset_path, models);
        if (validate->parsed()) return run_validate(config, dataset_path);
        std::cerr << "probe: unknown-command\n";
        return 2;
    } catch (const ProbeError& e) {
        std::cerr << "probe: " << e.what() << "\n";
        return e.code() == "bad-config" ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "probe: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace probe

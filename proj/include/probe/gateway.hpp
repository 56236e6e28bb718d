#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "probe/common.hpp"

namespace probe {

struct SamplingProfile {
    double temperature = 0.0;
    double top_p = 0.0;
    std::string label = "deterministic";
};

/// temperature = top-p = 0: judging, conversion validation, evaluation.
SamplingProfile deterministic_profile();
/// temperature = top-p = 1: expansion only.
SamplingProfile creative_profile();

struct ModelHandle {
    std::string model;                            // provider model identifier
    std::chrono::milliseconds timeout{30000};
    int max_retries = 3;
};

struct ChatRequest {
    ModelHandle handle;
    std::string system;
    std::string user;
    SamplingProfile profile;
    std::string kind;  // prompt kind key, for accounting
};

struct ChatResponse {
    std::string text;
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
};

/// Thrown by transports for failures worth retrying (timeouts, 429, 5xx).
class TransportFailure : public ProbeError {
public:
    explicit TransportFailure(const std::string& message)
        : ProbeError("transport-failure", message) {}
};

/// Thrown for permanent provider errors (auth, 4xx); never retried.
class ProviderRejection : public ProbeError {
public:
    explicit ProviderRejection(const std::string& message)
        : ProbeError("provider-rejection", message) {}
};

/// One attempt against the provider; the Gateway adds retry and accounting.
class ChatTransport {
public:
    virtual ~ChatTransport() = default;
    virtual ChatResponse complete(const ChatRequest& request) = 0;
    virtual std::vector<double> embed(const ModelHandle& handle, std::string_view text) = 0;
    virtual std::string describe() const = 0;
};

struct CallRecord {
    std::string kind;
    std::string model;
    std::string profile;
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
    int attempts = 1;
};

class UsageLedger {
public:
    void add(CallRecord record);
    std::vector<CallRecord> records() const;
    std::int64_t total_tokens() const;
    std::int64_t calls_for_kind(std::string_view kind) const;

private:
    mutable std::mutex mutex_;
    std::vector<CallRecord> records_;
};

struct GatewayOptions {
    std::chrono::milliseconds backoff_base{1000};
    double backoff_factor = 2.0;
    std::function<void(std::chrono::milliseconds)> sleeper;  // injected in tests
    unsigned jitter_seed = std::random_device{}();
    int max_in_flight = 4;
};

/// Uniform chat/embedding access: retries with jittered exponential backoff,
/// per-call usage accounting, embedding dimension pinning.
class Gateway {
public:
    explicit Gateway(std::shared_ptr<ChatTransport> transport, GatewayOptions options = {});
    ~Gateway();
    Gateway(const Gateway&) = delete;
    Gateway& operator=(const Gateway&) = delete;

    std::string complete_chat(const ModelHandle& handle, std::string_view system,
                              std::string_view user, const SamplingProfile& profile,
                              std::string_view kind);

    std::vector<double> embed_text(const ModelHandle& handle, std::string_view text);

    const UsageLedger& ledger() const { return ledger_; }
    const ChatTransport& transport() const { return *transport_; }

private:
    std::chrono::milliseconds backoff_delay(int attempt);

    std::shared_ptr<ChatTransport> transport_;
    GatewayOptions options_;
    UsageLedger ledger_;
    std::mutex state_mutex_;
    std::mt19937 rng_;
    std::map<std::string, std::size_t> embed_dims_;
    std::unique_ptr<class Semaphore> in_flight_;
};

// ---------------------------------------------------------------------------
// Transports

struct HttpEndpoint {
    std::string base_url;                    // scheme://host[:port][/prefix]
    std::string chat_path = "/chat/completions";
    std::string embed_path = "/embeddings";
    std::string api_key_env = "PROBE_API_KEY";
};

/// Chat-completion wire convention of OpenAI-compatible providers.
std::shared_ptr<ChatTransport> make_http_transport(HttpEndpoint endpoint, std::string embed_model);

/// Deterministic bag-of-words hash embedding, dimension 256. Offline stand-in
/// for a provider embedding model; also the unit-test embedder.
std::vector<double> hash_embedding(std::string_view text);
inline constexpr std::size_t kHashEmbeddingDim = 256;
inline constexpr const char* kHashEmbeddingModel = "hash-256";

/// Replays canned responses from a script file: a queue per prompt kind, each
/// entry optionally repeated or marked as an injected fault.
class ScriptedTransport : public ChatTransport {
public:
    static std::shared_ptr<ScriptedTransport> from_file(const std::filesystem::path& path);
    static std::shared_ptr<ScriptedTransport> from_json_text(std::string_view text);

    ChatResponse complete(const ChatRequest& request) override;
    std::vector<double> embed(const ModelHandle& handle, std::string_view text) override;
    std::string describe() const override;

    std::size_t remaining(std::string_view kind) const;

private:
    struct Entry {
        std::string text;
        std::string fault;  // "", "transport", "rejection", "empty"
    };
    std::mutex mutex_;
    std::map<std::string, std::vector<Entry>> queues_;
    std::map<std::string, std::size_t> cursors_;
};

}  // namespace probe

#include "probe/gateway.hpp"

#include <condition_variable>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#define CPPHTTPLIB_OPENSSL_SUPPORT_DISABLED
#include <httplib.h>

namespace probe {

using json = nlohmann::json;

SamplingProfile deterministic_profile() { return {0.0, 0.0, "deterministic"}; }
SamplingProfile creative_profile() { return {1.0, 1.0, "creative"}; }

// ---------------------------------------------------------------------------
// Ledger

void UsageLedger::add(CallRecord record) {
    std::lock_guard<std::mutex> lock(mutex_);
    records_.push_back(std::move(record));
}

std::vector<CallRecord> UsageLedger::records() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return records_;
}

std::int64_t UsageLedger::total_tokens() const {
    std::lock_guard<std::mutex> lock(mutex_);
    std::int64_t total = 0;
    for (const auto& r : records_) total += r.prompt_tokens + r.completion_tokens;
    return total;
}

std::int64_t UsageLedger::calls_for_kind(std::string_view kind) const {
    std::lock_guard<std::mutex> lock(mutex_);
    std::int64_t n = 0;
    for (const auto& r : records_)
        if (r.kind == kind) ++n;
    return n;
}

// ---------------------------------------------------------------------------
// Bounded in-flight parallelism

class Semaphore {
public:
    explicit Semaphore(int slots) : slots_(slots) {}

    void acquire() {
        std::unique_lock<std::mutex> lock(mutex_);
        cv_.wait(lock, [&] { return slots_ > 0; });
        --slots_;
    }

    void release() {
        {
            std::lock_guard<std::mutex> lock(mutex_);
            ++slots_;
        }
        cv_.notify_one();
    }

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    int slots_;
};

namespace {

struct SemaphoreGuard {
    Semaphore& sem;
    explicit SemaphoreGuard(Semaphore& s) : sem(s) { sem.acquire(); }
    ~SemaphoreGuard() { sem.release(); }
};

}  // namespace

// ---------------------------------------------------------------------------
// Gateway

Gateway::Gateway(std::shared_ptr<ChatTransport> transport, GatewayOptions options)
    : transport_(std::move(transport)),
      options_(std::move(options)),
      rng_(options_.jitter_seed),
      in_flight_(std::make_unique<Semaphore>(options_.max_in_flight > 0 ? options_.max_in_flight : 1)) {
    if (!options_.sleeper)
        options_.sleeper = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

Gateway::~Gateway() = default;

std::chrono::milliseconds Gateway::backoff_delay(int attempt) {
    double base = static_cast<double>(options_.backoff_base.count());
    for (int i = 0; i < attempt; ++i) base *= options_.backoff_factor;
    std::uint64_t jitter;
    {
        std::lock_guard<std::mutex> lock(state_mutex_);
        jitter = std::uniform_int_distribution<std::uint64_t>(
            0, static_cast<std::uint64_t>(base / 2.0))(rng_);
    }
    return std::chrono::milliseconds(static_cast<std::int64_t>(base) +
                                     static_cast<std::int64_t>(jitter));
}

std::string Gateway::complete_chat(const ModelHandle& handle, std::string_view system,
                                   std::string_view user, const SamplingProfile& profile,
                                   std::string_view kind) {
    if (user.empty()) throw ProbeError("empty-prompt", "user prompt must be non-empty");

    ChatRequest request;
    request.handle = handle;
    request.system = std::string(system);
    request.user = std::string(user);
    request.profile = profile;
    request.kind = std::string(kind);

    const int max_attempts = handle.max_retries + 1;
    std::string last_error;
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        if (attempt > 0) options_.sleeper(backoff_delay(attempt - 1));
        ChatResponse response;
        try {
            SemaphoreGuard guard(*in_flight_);
            response = transport_->complete(request);
        } catch (const TransportFailure& e) {
            last_error = e.what();
            continue;
        }
        if (response.text.empty())
            throw ProbeError("empty-response", "provider returned an empty completion");
        CallRecord record;
        record.kind = request.kind;
        record.model = handle.model;
        record.profile = profile.label;
        record.prompt_tokens = response.prompt_tokens;
        record.completion_tokens = response.completion_tokens;
        record.attempts = attempt + 1;
        ledger_.add(std::move(record));
        return response.text;
    }
    throw TransportFailure("gave up after " + std::to_string(max_attempts) +
                           " attempts: " + last_error);
}

std::vector<double> Gateway::embed_text(const ModelHandle& handle, std::string_view text) {
    if (text.empty()) throw ProbeError("empty-prompt", "embedding input must be non-empty");

    const int max_attempts = handle.max_retries + 1;
    std::string last_error;
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        if (attempt > 0) options_.sleeper(backoff_delay(attempt - 1));
        std::vector<double> vec;
        try {
            SemaphoreGuard guard(*in_flight_);
            vec = transport_->embed(handle, text);
        } catch (const TransportFailure& e) {
            last_error = e.what();
            continue;
        }
        {
            std::lock_guard<std::mutex> lock(state_mutex_);
            auto [it, inserted] = embed_dims_.emplace(handle.model, vec.size());
            if (!inserted && it->second != vec.size())
                throw ProbeError("dimension-mismatch",
                                 "embedding dimension changed from " + std::to_string(it->second) +
                                     " to " + std::to_string(vec.size()));
        }
        CallRecord record;
        record.kind = "embedding";
        record.model = handle.model;
        record.profile = "";
        record.prompt_tokens = static_cast<std::int64_t>(text.size() / 4);
        record.completion_tokens = 0;
        record.attempts = attempt + 1;
        ledger_.add(std::move(record));
        return vec;
    }
    throw TransportFailure("gave up after " + std::to_string(max_attempts) +
                           " attempts: " + last_error);
}

// ---------------------------------------------------------------------------
// Hash embedder

std::vector<double> hash_embedding(std::string_view text) {
    std::vector<double> vec(kHashEmbeddingDim, 0.0);
    std::uint64_t h = 1469598103934665603ull;
    bool in_token = false;
    auto flush = [&] {
        if (in_token) {
            vec[h % kHashEmbeddingDim] += 1.0;
            h = 1469598103934665603ull;
            in_token = false;
        }
    };
    for (char c : text) {
        const unsigned char u = static_cast<unsigned char>(std::tolower(static_cast<unsigned char>(c)));
        if ((u >= 'a' && u <= 'z') || (u >= '0' && u <= '9')) {
            h ^= u;
            h *= 1099511628211ull;
            in_token = true;
        } else {
            flush();
        }
    }
    flush();
    return vec;
}

// ---------------------------------------------------------------------------
// HTTP transport (OpenAI-compatible wire format)

namespace {

class HttpTransport : public ChatTransport {
public:
    HttpTransport(HttpEndpoint endpoint, std::string embed_model)
        : endpoint_(std::move(endpoint)), embed_model_(std::move(embed_model)) {
        const char* key = std::getenv(endpoint_.api_key_env.c_str());
        if (!key || !*key)
            throw ProbeError("missing-api-key",
                             "environment variable " + endpoint_.api_key_env + " is not set");
        api_key_ = key;
        split_base_url();
    }

    ChatResponse complete(const ChatRequest& request) override {
        json body;
        body["model"] = request.handle.model;
        json messages = json::array();
        if (!request.system.empty())
            messages.push_back({{"role", "system"}, {"content", request.system}});
        messages.push_back({{"role", "user"}, {"content", request.user}});
        body["messages"] = messages;
        body["temperature"] = request.profile.temperature;
        body["top_p"] = request.profile.top_p;

        const json reply = post(path_prefix_ + endpoint_.chat_path, body, request.handle.timeout);
        ChatResponse response;
        try {
            response.text = reply.at("choices").at(0).at("message").at("content").get<std::string>();
            if (reply.contains("usage")) {
                response.prompt_tokens = reply["usage"].value("prompt_tokens", 0);
                response.completion_tokens = reply["usage"].value("completion_tokens", 0);
            }
        } catch (const json::exception& e) {
            throw ProviderRejection(std::string("unexpected chat response shape: ") + e.what());
        }
        return response;
    }

    std::vector<double> embed(const ModelHandle& handle, std::string_view text) override {
        json body;
        body["model"] = embed_model_.empty() ? handle.model : embed_model_;
        body["input"] = std::string(text);
        const json reply = post(path_prefix_ + endpoint_.embed_path, body, handle.timeout);
        try {
            return reply.at("data").at(0).at("embedding").get<std::vector<double>>();
        } catch (const json::exception& e) {
            throw ProviderRejection(std::string("unexpected embedding response shape: ") + e.what());
        }
    }

    std::string describe() const override { return "http:" + endpoint_.base_url; }

private:
    void split_base_url() {
        std::string url = endpoint_.base_url;
        std::size_t scheme_end = url.find("://");
        std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
        std::size_t path_start = url.find('/', host_start);
        if (path_start == std::string::npos) {
            host_ = url;
            path_prefix_ = "";
        } else {
            host_ = url.substr(0, path_start);
            path_prefix_ = url.substr(path_start);
            if (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
        }
    }

    json post(const std::string& path, const json& body, std::chrono::milliseconds timeout) {
        httplib::Client client(host_);
        client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout));
        client.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout));
        httplib::Headers headers = {{"Authorization", "Bearer " + api_key_}};
        auto result = client.Post(path, headers, body.dump(), "application/json");
        if (!result)
            throw TransportFailure("no response from " + host_ + path + ": " +
                                   httplib::to_string(result.error()));
        if (result->status == 429 || result->status >= 500)
            throw TransportFailure("status " + std::to_string(result->status) + " from " + path);
        if (result->status != 200)
            throw ProviderRejection("status " + std::to_string(result->status) + " from " + path +
                                    ": " + result->body.substr(0, 200));
        try {
            return json::parse(result->body);
        } catch (const json::exception& e) {
            throw ProviderRejection(std::string("non-JSON response body: ") + e.what());
        }
    }

    HttpEndpoint endpoint_;
    std::string embed_model_;
    std::string api_key_;
    std::string host_;
    std::string path_prefix_;
};

}  // namespace

std::shared_ptr<ChatTransport> make_http_transport(HttpEndpoint endpoint, std::string embed_model) {
    return std::make_shared<HttpTransport>(std::move(endpoint), std::move(embed_model));
}

// ---------------------------------------------------------------------------
// Scripted transport

std::shared_ptr<ScriptedTransport> ScriptedTransport::from_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ProbeError("bad-config", "cannot open gateway script " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

std::shared_ptr<ScriptedTransport> ScriptedTransport::from_json_text(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ProbeError("bad-config", std::string("gateway script is not valid JSON: ") + e.what());
    }
    auto transport = std::make_shared<ScriptedTransport>();
    if (!doc.contains("chat") || !doc["chat"].is_object())
        throw ProbeError("bad-config", "gateway script lacks a 'chat' object");
    for (const auto& [kind, entries] : doc["chat"].items()) {
        std::vector<Entry> queue;
        for (const auto& e : entries) {
            Entry entry;
            int times = 1;
            if (e.is_string()) {
                entry.text = e.get<std::string>();
            } else {
                entry.text = e.value("text", "");
                entry.fault = e.value("fault", "");
                times = e.value("times", 1);
            }
            for (int i = 0; i < times; ++i) queue.push_back(entry);
        }
        transport->queues_[kind] = std::move(queue);
    }
    return transport;
}

ChatResponse ScriptedTransport::complete(const ChatRequest& request) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = queues_.find(request.kind);
    if (it == queues_.end())
        throw ProviderRejection("no scripted responses for kind '" + request.kind + "'");
    std::size_t& cursor = cursors_[request.kind];
    if (cursor >= it->second.size())
        throw ProviderRejection("scripted responses for kind '" + request.kind + "' exhausted after " +
                                std::to_string(cursor));
    const Entry entry = it->second[cursor++];
    if (entry.fault == "transport") throw TransportFailure("scripted transport fault");
    if (entry.fault == "rejection") throw ProviderRejection("scripted provider rejection");
    if (entry.fault == "empty") return {"", 0, 0};
    ChatResponse response;
    response.text = entry.text;
    response.prompt_tokens = static_cast<std::int64_t>((request.system.size() + request.user.size()) / 4);
    response.completion_tokens = static_cast<std::int64_t>(entry.text.size() / 4);
    return response;
}

std::vector<double> ScriptedTransport::embed(const ModelHandle&, std::string_view text) {
    return hash_embedding(text);
}

std::string ScriptedTransport::describe() const { return "scripted"; }

std::size_t ScriptedTransport::remaining(std::string_view kind) const {
    auto* self = const_cast<ScriptedTransport*>(this);
    std::lock_guard<std::mutex> lock(self->mutex_);
    auto it = queues_.find(std::string(kind));
    if (it == queues_.end()) return 0;
    auto cit = cursors_.find(std::string(kind));
    const std::size_t used = cit == cursors_.end() ? 0 : cit->second;
    return it->second.size() - used;
}

}  // namespace probe

#pragma once

#include <atomic>
#include <chrono>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "clinex/promptkit.hpp"
#include "clinex/schema.hpp"

namespace clinex {

struct GenerationConfig {
    std::string model_id;
    double temperature = 0.0;  // 0 means greedy
    int max_new_tokens = 512;
    bool sampling_enabled = false;

    /// Greedy, 512 new tokens.
    static GenerationConfig extraction_defaults(std::string model_id);
    /// Temperature 0.3, 2048 new tokens.
    static GenerationConfig translation_defaults(std::string model_id);

    /// Throws Error(InvalidConfig): negative/non-finite temperature,
    /// max_new_tokens outside [1, 32768], empty model id.
    void validate() const;

    /// Changes whenever any field changes.
    std::string digest() const;
    nlohmann::json to_json() const;
};

enum class BackendStatus { ok, failed_after_retries };

std::string_view to_string(BackendStatus status);

struct ModelOutput {
    std::string transcript_id;
    std::string raw_text;  // meaningful only when status == ok; may be empty
    std::uint64_t latency_ms = 0;
    BackendStatus status = BackendStatus::ok;
    unsigned attempt_count = 0;  // network attempts; 0 on a cache hit
    bool cache_hit = false;
    std::string error;  // last failure, when status != ok
};

/// Result of a single request attempt.
struct AttemptResult {
    enum class Kind { ok, transport_error, http_error, protocol_error };
    Kind kind = Kind::ok;
    std::string text;
    int http_status = 0;
    std::string detail;

    bool retryable() const {
        return kind == Kind::transport_error || (kind == Kind::http_error && http_status >= 500);
    }
};

/// One request, no retries, no caching. Implementations must be safe to call
/// from several threads at once.
class CompletionBackend {
public:
    virtual ~CompletionBackend() = default;
    virtual AttemptResult attempt(const PromptBundle& bundle, const GenerationConfig& config) = 0;
};

struct BackendEndpoint {
    std::string base_url;  // e.g. http://127.0.0.1:8000 or http://host:8000/v1
    std::optional<std::string> bearer_token;
    std::chrono::seconds timeout{600};

    /// CLINEX_BACKEND_URL / CLINEX_BACKEND_TOKEN; nullopt when the URL is unset.
    static std::optional<BackendEndpoint> from_env();
};

/// Chat-completions request body for a bundle. Omits the system message when
/// the bundle's system content is empty.
nlohmann::json chat_request_body(const PromptBundle& bundle, const GenerationConfig& config);

/// Classifies an HTTP response; reads choices[0].message.content on 2xx.
AttemptResult parse_chat_response(int http_status, std::string_view body);

/// POSTs to <base>/v1/chat/completions (or <base>/chat/completions when the
/// base already ends in /v1).
class HttpBackend final : public CompletionBackend {
public:
    explicit HttpBackend(BackendEndpoint endpoint);
    AttemptResult attempt(const PromptBundle& bundle, const GenerationConfig& config) override;

    const std::string& host() const { return host_; }
    const std::string& path() const { return path_; }

private:
    BackendEndpoint endpoint_;
    std::string host_;  // scheme://host[:port]
    std::string path_;
};

/// Scripted completions plus the per-feature keyword fallback.
struct MockScript {
    std::map<std::string, std::string> scripted;                // fingerprint -> completion
    std::map<std::string, std::vector<std::string>> keywords;   // feature id -> keywords

    /// {"scripted": {...}, "keywords": {...}}; unknown feature ids are rejected.
    static MockScript from_json(const nlohmann::json& doc, const FeatureSchema& schema);
    static MockScript load(const std::filesystem::path& path, const FeatureSchema& schema);
    nlohmann::json to_json() const;
};

/// Scripted text if the fingerprint is listed. Otherwise translation bundles
/// echo their source text and extraction bundles get "<label>: True" for every
/// feature whose keywords occur in the target text.
ModelOutput mock_complete(const PromptBundle& bundle, const MockScript& script,
                          const FeatureSchema& schema);

class MockBackend final : public CompletionBackend {
public:
    MockBackend(MockScript script, const FeatureSchema& schema);

    AttemptResult attempt(const PromptBundle& bundle, const GenerationConfig& config) override;

    /// Test hooks: a per-call delay, and a fault injector that can replace the
    /// result of call number n (0-based).
    void set_delay(std::function<std::chrono::milliseconds(const PromptBundle&)> delay);
    void set_fault(std::function<std::optional<AttemptResult>(std::size_t call_index)> fault);

    std::size_t calls() const { return calls_.load(); }
    std::size_t max_in_flight() const { return max_in_flight_.load(); }

private:
    MockScript script_;
    const FeatureSchema& schema_;
    std::function<std::chrono::milliseconds(const PromptBundle&)> delay_;
    std::function<std::optional<AttemptResult>(std::size_t)> fault_;
    std::atomic<std::size_t> calls_{0};
    std::atomic<std::size_t> in_flight_{0};
    std::atomic<std::size_t> max_in_flight_{0};
};

struct CacheKey {
    std::string fingerprint;
    std::string model_id;
    std::string config_digest;
    auto operator<=>(const CacheKey&) const = default;
};

CacheKey cache_key(const PromptBundle& bundle, const GenerationConfig& config);

/// Content-addressed completion cache backed by an append-only JSONL log
/// (<dir>/completions.jsonl). Concurrent lookups; appends are serialized and
/// flushed per entry, and a torn final line is ignored on reload.
class CompletionCache {
public:
    /// Memory-only cache.
    CompletionCache() = default;
    /// Creates the directory if needed and replays the existing log.
    explicit CompletionCache(const std::filesystem::path& dir);

    CompletionCache(const CompletionCache&) = delete;
    CompletionCache& operator=(const CompletionCache&) = delete;

    std::optional<std::string> lookup(const CacheKey& key) const;
    void store(const CacheKey& key, std::string_view completion);
    std::size_t size() const;

    static constexpr std::string_view kLogName = "completions.jsonl";

private:
    mutable std::shared_mutex mutex_;
    std::map<CacheKey, std::string> entries_;
    std::optional<std::filesystem::path> log_path_;
};

struct RetryPolicy {
    unsigned max_attempts = 3;
    std::chrono::milliseconds initial_backoff{1000};
    double multiplier = 2.0;
};

struct CompletionRequest {
    std::string transcript_id;
    PromptBundle bundle;
};

/// Cache first; on a miss, up to `retry.max_attempts` attempts with
/// exponential backoff on transport errors and HTTP 5xx. Successful
/// completions (including empty ones) are written to the cache.
ModelOutput complete(const CompletionRequest& request, const GenerationConfig& config,
                     CompletionBackend& backend, CompletionCache* cache,
                     const RetryPolicy& retry = {});

/// Output order matches input order; at most `parallelism` requests in
/// flight. Per-item failures are reported in the outputs, never thrown.
std::vector<ModelOutput> batch_complete(std::span<const CompletionRequest> requests,
                                        const GenerationConfig& config,
                                        CompletionBackend& backend, CompletionCache* cache,
                                        std::size_t parallelism, const RetryPolicy& retry = {});

}  // namespace clinex

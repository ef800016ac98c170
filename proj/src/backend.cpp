#include "clinex/backend.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "clinex/digest.hpp"
#include "clinex/error.hpp"
#include "clinex/io.hpp"
#include "clinex/text.hpp"

namespace clinex {

using nlohmann::json;
namespace fs = std::filesystem;

GenerationConfig GenerationConfig::extraction_defaults(std::string model_id) {
    return GenerationConfig{std::move(model_id), 0.0, 512, false};
}

GenerationConfig GenerationConfig::translation_defaults(std::string model_id) {
    return GenerationConfig{std::move(model_id), 0.3, 2048, true};
}

void GenerationConfig::validate() const {
    if (model_id.empty()) throw Error(ErrorKind::InvalidConfig, "model id is empty");
    if (!std::isfinite(temperature) || temperature < 0.0) {
        throw Error(ErrorKind::InvalidConfig, "temperature must be a non-negative number");
    }
    if (max_new_tokens < 1 || max_new_tokens > 32768) {
        throw Error(ErrorKind::InvalidConfig, "max_new_tokens must be in [1, 32768]");
    }
}

json GenerationConfig::to_json() const {
    return {{"model_id", model_id},
            {"temperature", temperature},
            {"max_new_tokens", max_new_tokens},
            {"sampling_enabled", sampling_enabled}};
}

std::string GenerationConfig::digest() const { return sha256_hex(to_json().dump()); }

std::string_view to_string(BackendStatus status) {
    return status == BackendStatus::ok ? "ok" : "failed_after_retries";
}

// ---------------------------------------------------------------------------
// HTTP transport

std::optional<BackendEndpoint> BackendEndpoint::from_env() {
    const char* url = std::getenv("CLINEX_BACKEND_URL");
    if (url == nullptr || *url == '\0') return std::nullopt;
    BackendEndpoint endpoint;
    endpoint.base_url = url;
    if (const char* token = std::getenv("CLINEX_BACKEND_TOKEN"); token != nullptr && *token != '\0') {
        endpoint.bearer_token = token;
    }
    return endpoint;
}

json chat_request_body(const PromptBundle& bundle, const GenerationConfig& config) {
    json messages = json::array();
    if (!bundle.system().empty()) messages.push_back({{"role", "system"}, {"content", bundle.system()}});
    messages.push_back({{"role", "user"}, {"content", bundle.user()}});
    json body = {{"model", config.model_id},
                 {"messages", messages},
                 {"temperature", config.sampling_enabled ? config.temperature : 0.0},
                 {"max_tokens", config.max_new_tokens}};
    if (!config.sampling_enabled) body["top_k"] = 1;
    return body;
}

AttemptResult parse_chat_response(int http_status, std::string_view body) {
    AttemptResult r;
    r.http_status = http_status;
    if (http_status < 200 || http_status >= 300) {
        r.kind = AttemptResult::Kind::http_error;
        r.detail = "HTTP " + std::to_string(http_status) + ": " + std::string(body.substr(0, 200));
        return r;
    }
    try {
        const auto doc = json::parse(body);
        const auto& content = doc.at("choices").at(0).at("message").at("content");
        if (content.is_null()) {
            r.text.clear();
        } else if (content.is_string()) {
            r.text = content.get<std::string>();
        } else {
            r.kind = AttemptResult::Kind::protocol_error;
            r.detail = "choices[0].message.content is not a string";
        }
    } catch (const json::exception& e) {
        r.kind = AttemptResult::Kind::protocol_error;
        r.detail = std::string("malformed response: ") + e.what();
    }
    return r;
}

HttpBackend::HttpBackend(BackendEndpoint endpoint) : endpoint_(std::move(endpoint)) {
    const std::string& url = endpoint_.base_url;
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw Error(ErrorKind::InvalidConfig, "backend URL needs a scheme: " + url);
    }
    const auto path_start = url.find('/', scheme_end + 3);
    host_ = url.substr(0, path_start);
    std::string base_path = path_start == std::string::npos ? "" : url.substr(path_start);
    while (!base_path.empty() && base_path.back() == '/') base_path.pop_back();
    path_ = base_path.ends_with("/v1") ? base_path + "/chat/completions" : base_path + "/v1/chat/completions";
}

AttemptResult HttpBackend::attempt(const PromptBundle& bundle, const GenerationConfig& config) {
    httplib::Client client(host_);
    client.set_connection_timeout(std::chrono::seconds(10));
    client.set_read_timeout(endpoint_.timeout);
    client.set_write_timeout(endpoint_.timeout);
    httplib::Headers headers;
    if (endpoint_.bearer_token) headers.emplace("Authorization", "Bearer " + *endpoint_.bearer_token);

    auto res = client.Post(path_, headers, chat_request_body(bundle, config).dump(), "application/json");
    if (!res) {
        AttemptResult r;
        r.kind = AttemptResult::Kind::transport_error;
        r.detail = "transport: " + httplib::to_string(res.error());
        return r;
    }
    return parse_chat_response(res->status, res->body);
}

// ---------------------------------------------------------------------------
// Mock backend

MockScript MockScript::from_json(const json& doc, const FeatureSchema& schema) {
    if (!doc.is_object()) throw Error(ErrorKind::InvalidConfig, "mock script must be a JSON object");
    MockScript script;
    try {
        if (doc.contains("scripted")) {
            for (const auto& [fp, completion] : doc["scripted"].items()) {
                script.scripted[fp] = completion.get<std::string>();
            }
        }
        if (doc.contains("keywords")) {
            for (const auto& [id, words] : doc["keywords"].items()) {
                if (!schema.index_of(id)) throw Error(ErrorKind::InvalidConfig, "mock keywords: unknown feature \"" + id + "\"");
                script.keywords[id] = words.get<std::vector<std::string>>();
            }
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidConfig, std::string("mock script: ") + e.what());
    }
    return script;
}

MockScript MockScript::load(const fs::path& path, const FeatureSchema& schema) {
    json doc;
    try {
        doc = json::parse(io::read_file(path));
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidConfig, path.string() + ": " + e.what());
    }
    return from_json(doc, schema);
}

json MockScript::to_json() const { return {{"scripted", scripted}, {"keywords", keywords}}; }

namespace {

std::string mock_text(const PromptBundle& bundle, const MockScript& script, const FeatureSchema& schema) {
    if (auto it = script.scripted.find(bundle.fingerprint()); it != script.scripted.end()) return it->second;
    const auto target = target_text(bundle);
    if (bundle.variant() == PromptVariant::translation) return target.value_or(bundle.user());

    const Language language = bundle.variant() == PromptVariant::english ? Language::english : Language::persian;
    const std::string haystack = target ? text::match_key(*target) : std::string();
    LabelVector labels{};
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        auto it = script.keywords.find(schema[i].id);
        if (it == script.keywords.end()) continue;
        labels[i] = std::ranges::any_of(it->second, [&](const std::string& kw) {
            const auto needle = text::match_key(kw);
            return !needle.empty() && haystack.find(needle) != std::string::npos;
        });
    }
    return render_output_template(labels, language, schema);
}

}  // namespace

ModelOutput mock_complete(const PromptBundle& bundle, const MockScript& script, const FeatureSchema& schema) {
    ModelOutput out;
    out.raw_text = mock_text(bundle, script, schema);
    out.status = BackendStatus::ok;
    out.attempt_count = 1;
    return out;
}

MockBackend::MockBackend(MockScript script, const FeatureSchema& schema)
    : script_(std::move(script)), schema_(schema) {}

void MockBackend::set_delay(std::function<std::chrono::milliseconds(const PromptBundle&)> delay) {
    delay_ = std::move(delay);
}

void MockBackend::set_fault(std::function<std::optional<AttemptResult>(std::size_t)> fault) {
    fault_ = std::move(fault);
}

AttemptResult MockBackend::attempt(const PromptBundle& bundle, const GenerationConfig&) {
    const std::size_t index = calls_.fetch_add(1);
    const std::size_t now = in_flight_.fetch_add(1) + 1;
    std::size_t seen = max_in_flight_.load();
    while (now > seen && !max_in_flight_.compare_exchange_weak(seen, now)) {
    }
    AttemptResult result;
    if (fault_) {
        if (auto injected = fault_(index)) result = *injected;
    }
    if (result.kind == AttemptResult::Kind::ok) {
        if (delay_) std::this_thread::sleep_for(delay_(bundle));
        result.text = mock_text(bundle, script_, schema_);
    }
    in_flight_.fetch_sub(1);
    return result;
}

// ---------------------------------------------------------------------------
// Cache

CacheKey cache_key(const PromptBundle& bundle, const GenerationConfig& config) {
    return CacheKey{bundle.fingerprint(), config.model_id, config.digest()};
}

CompletionCache::CompletionCache(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create cache dir " + dir.string() + ": " + ec.message());
    log_path_ = dir / kLogName;
    if (!fs::exists(*log_path_)) return;

    const auto data = io::read_file(*log_path_);
    for (const auto line : text::split_lines(data)) {
        if (text::trim(line).empty()) continue;
        try {
            const auto obj = json::parse(line);
            CacheKey key{obj.at("key").get<std::string>(), obj.at("model_id").get<std::string>(),
                         obj.at("config_digest").get<std::string>()};
            entries_.emplace(std::move(key), obj.at("completion").get<std::string>());
        } catch (const json::exception&) {
            // torn write from an interrupted run
        }
    }
    if (!data.empty() && data.back() != '\n') {
        std::ofstream out(*log_path_, std::ios::binary | std::ios::app);
        out << '\n';
    }
}

std::optional<std::string> CompletionCache::lookup(const CacheKey& key) const {
    std::shared_lock lock(mutex_);
    if (auto it = entries_.find(key); it != entries_.end()) return it->second;
    return std::nullopt;
}

void CompletionCache::store(const CacheKey& key, std::string_view completion) {
    std::unique_lock lock(mutex_);
    if (entries_.contains(key)) return;
    if (log_path_) {
        const json line = {{"key", key.fingerprint},
                           {"model_id", key.model_id},
                           {"config_digest", key.config_digest},
                           {"completion", completion}};
        std::ofstream out(*log_path_, std::ios::binary | std::ios::app);
        out << line.dump() << '\n';
        out.flush();
        if (!out) throw Error(ErrorKind::Io, "cannot append to " + log_path_->string());
    }
    entries_.emplace(key, std::string(completion));
}

std::size_t CompletionCache::size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
}

// ---------------------------------------------------------------------------
// Completion with retries

ModelOutput complete(const CompletionRequest& request, const GenerationConfig& config, CompletionBackend& backend,
                     CompletionCache* cache, const RetryPolicy& retry) {
    const auto started = std::chrono::steady_clock::now();
    ModelOutput out;
    out.transcript_id = request.transcript_id;
    auto finish = [&]() -> ModelOutput {
        out.latency_ms = static_cast<std::uint64_t>(
            std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started).count());
        return std::move(out);
    };

    const CacheKey key = cache_key(request.bundle, config);
    if (cache != nullptr) {
        if (auto hit = cache->lookup(key)) {
            out.raw_text = std::move(*hit);
            out.cache_hit = true;
            return finish();
        }
    }

    const unsigned max_attempts = std::max(1u, retry.max_attempts);
    auto backoff = std::chrono::duration<double, std::milli>(retry.initial_backoff);
    out.status = BackendStatus::failed_after_retries;
    for (unsigned attempt = 1; attempt <= max_attempts; ++attempt) {
        AttemptResult r;
        try {
            r = backend.attempt(request.bundle, config);
        } catch (const std::exception& e) {
            r.kind = AttemptResult::Kind::transport_error;
            r.detail = e.what();
        }
        out.attempt_count = attempt;
        if (r.kind == AttemptResult::Kind::ok) {
            out.status = BackendStatus::ok;
            out.raw_text = std::move(r.text);
            out.error.clear();
            if (cache != nullptr) cache->store(key, out.raw_text);
            break;
        }
        out.error = r.kind == AttemptResult::Kind::protocol_error ? "protocol error: " + r.detail : r.detail;
        if (!r.retryable()) break;
        if (attempt < max_attempts) {
            std::this_thread::sleep_for(backoff);
            backoff *= retry.multiplier;
        }
    }
    return finish();
}

std::vector<ModelOutput> batch_complete(std::span<const CompletionRequest> requests, const GenerationConfig& config,
                                        CompletionBackend& backend, CompletionCache* cache, std::size_t parallelism,
                                        const RetryPolicy& retry) {
    if (parallelism == 0) throw Error(ErrorKind::InvalidConfig, "parallelism must be at least 1");
    config.validate();
    std::vector<ModelOutput> outputs(requests.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < requests.size(); i = next.fetch_add(1)) {
            try {
                outputs[i] = complete(requests[i], config, backend, cache, retry);
            } catch (const std::exception& e) {
                outputs[i].transcript_id = requests[i].transcript_id;
                outputs[i].status = BackendStatus::failed_after_retries;
                outputs[i].error = e.what();
            }
        }
    };
    const std::size_t workers = std::min(parallelism, requests.size());
    if (workers <= 1) {
        worker();
        return outputs;
    }
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    return outputs;
}

}  // namespace clinex

#include "wkforge/providers.hpp"

#include "wkforge/errors.hpp"
#include "wkforge/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>

namespace wkforge {

using json = nlohmann::json;

double EmbeddingVector::norm() const noexcept {
    double sum = 0.0;
    for (double v : values) sum += v * v;
    return std::sqrt(sum);
}

double dot(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim()) {
        throw Error(ErrorCode::InvalidInput, "embedding dimension mismatch: " + std::to_string(a.dim()) +
                                                 " vs " + std::to_string(b.dim()));
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) sum += a.values[i] * b.values[i];
    return sum;
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    const double d = dot(a, b);
    const double denom = a.norm() * b.norm();
    if (denom < 1e-300) return 0.0;
    return std::clamp(d / denom, -1.0, 1.0);
}

EmbeddingVector normalized(std::vector<double> values) {
    EmbeddingVector v{std::move(values)};
    const double n = v.norm();
    if (!(n > 0.0)) throw Error(ErrorCode::InvalidInput, "cannot normalize a zero vector");
    for (double& x : v.values) x /= n;
    return v;
}

void ProviderConfig::validate() const {
    if (max_in_flight < 1) throw Error(ErrorCode::InvalidInput, "max_in_flight must be >= 1");
    if (dimension < 1) throw Error(ErrorCode::InvalidInput, "embedding dimension must be >= 1");
    if (timeout.count() <= 0.0) throw Error(ErrorCode::InvalidInput, "timeout must be positive");
    if (!offline_mode && endpoint_url.empty()) {
        throw Error(ErrorCode::InvalidInput, "online mode requires endpoint_url");
    }
}

ProviderConfig apply_environment(ProviderConfig cfg) {
    if (const char* v = std::getenv("WKFORGE_OFFLINE"); v != nullptr && std::string_view(v) == "1") {
        cfg.offline_mode = true;
    }
    return cfg;
}

// ---------------------------------------------------------------------------
// in-flight limiting

InFlightLimiter::InFlightLimiter(int max_in_flight) : capacity_(max_in_flight) {
    if (max_in_flight < 1) throw Error(ErrorCode::InvalidInput, "max_in_flight must be >= 1");
}

InFlightLimiter::Slot::Slot(InFlightLimiter& owner) : owner_(owner) {
    std::unique_lock lock(owner_.mutex_);
    owner_.cv_.wait(lock, [&] { return owner_.in_use_ < owner_.capacity_; });
    ++owner_.in_use_;
}

InFlightLimiter::Slot::~Slot() {
    {
        std::lock_guard lock(owner_.mutex_);
        --owner_.in_use_;
    }
    owner_.cv_.notify_one();
}

// ---------------------------------------------------------------------------
// offline embedder

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return h;
}

constexpr std::size_t kNgram = 3;

} // namespace

OfflineEmbedder::OfflineEmbedder(std::size_t dimension, std::uint64_t seed)
    : dimension_(dimension), seed_(seed) {
    if (dimension_ == 0) throw Error(ErrorCode::InvalidInput, "embedding dimension must be >= 1");
}

EmbeddingVector OfflineEmbedder::embed(std::string_view input) {
    const std::string body = text::ascii_lower(text::collapse_whitespace(input));
    if (body.empty()) throw Error(ErrorCode::InvalidInput, "cannot embed empty text");

    const std::string padded = " " + body + " ";
    const std::uint64_t seed_mix = splitmix64(seed_);
    std::vector<double> values(dimension_, 0.0);
    for (std::size_t i = 0; i + kNgram <= padded.size(); ++i) {
        const std::uint64_t h = splitmix64(fnv1a64(std::string_view(padded).substr(i, kNgram)) ^ seed_mix);
        const double sign = (h >> 63) != 0 ? -1.0 : 1.0;
        values[h % dimension_] += sign;
    }
    bool all_zero = true;
    for (double v : values) all_zero = all_zero && v == 0.0;
    if (all_zero) {
        // every trigram cancelled out; fall back to one bucket keyed by the whole text
        values[splitmix64(fnv1a64(padded) ^ seed_mix) % dimension_] = 1.0;
    }
    return normalized(std::move(values));
}

// ---------------------------------------------------------------------------
// offline generator

std::string OfflineGenerator::complete(std::string_view prompt) {
    if (text::trim(prompt).empty()) throw Error(ErrorCode::InvalidInput, "empty prompt");

    std::string_view block = prompt;
    if (auto begin = prompt.find(kSwkgBlockBegin); begin != std::string_view::npos) {
        block = prompt.substr(begin + kSwkgBlockBegin.size());
        if (auto end = block.find(kSwkgBlockEnd); end != std::string_view::npos) block = block.substr(0, end);
    }

    std::string out;
    for (const auto& line : text::split_lines(block)) {
        const auto first = line.find(" | ");
        if (first == std::string::npos) continue;
        const auto second = line.find(" | ", first + 3);
        if (second == std::string::npos) continue;
        const auto title = text::trim(std::string_view(line).substr(first + 3, second - first - 3));
        const auto description = text::trim(std::string_view(line).substr(second + 3));
        if (title.empty()) continue;
        out.append(title).append(" :: ").append(description).push_back('\n');
    }
    if (out.empty()) throw Error(ErrorCode::MalformedResponse, "offline generator found no tasks in prompt");
    return out;
}

// ---------------------------------------------------------------------------
// judges

double EmbeddingJudge::judge_match(std::string_view generated, std::string_view reference) {
    if (text::trim(generated).empty() || text::trim(reference).empty()) {
        throw Error(ErrorCode::InvalidInput, "judge inputs must be non-empty");
    }
    const double c = cosine(embedder_.embed(generated), embedder_.embed(reference));
    return std::clamp((1.0 + c) / 2.0, 0.0, 1.0);
}

double parse_judge_reply(std::string_view reply) {
    const auto tokens = text::word_tokens(reply);
    if (!tokens.empty()) {
        const auto& t = tokens.front();
        if (t == "1" || t == "yes" || t == "true") return 1.0;
        if (t == "0" || t == "no" || t == "false") return 0.0;
    }
    throw Error(ErrorCode::MalformedResponse,
                "unparsable judge reply: '" + std::string(text::trim(reply).substr(0, 80)) + "'");
}

double LlmJudge::judge_match(std::string_view generated, std::string_view reference) {
    if (text::trim(generated).empty() || text::trim(reference).empty()) {
        throw Error(ErrorCode::InvalidInput, "judge inputs must be non-empty");
    }
    std::string prompt = text::replace_all(prompt_template_, "{generated}", generated);
    prompt = text::replace_all(std::move(prompt), "{reference}", reference);
    return parse_judge_reply(generator_.complete(prompt));
}

// ---------------------------------------------------------------------------
// online clients

namespace {

HttpHeaders auth_headers(const ProviderConfig& cfg) {
    HttpHeaders headers{{"Content-Type", "application/json"}};
    if (!cfg.api_key_env.empty()) {
        if (const char* key = std::getenv(cfg.api_key_env.c_str()); key != nullptr && *key != '\0') {
            headers.emplace_back("Authorization", std::string("Bearer ") + key);
        }
    }
    return headers;
}

std::string join_url(const std::string& base, std::string_view path) {
    if (!base.empty() && base.back() == '/') return base + std::string(path.substr(1));
    return base + std::string(path);
}

// One retry with exponential backoff on ProviderUnavailable.
template <typename Fn>
auto with_retry(const ProviderConfig& cfg, Fn&& fn) {
    constexpr int kAttempts = 2;
    for (int attempt = 0;; ++attempt) {
        try {
            return fn();
        } catch (const Error& e) {
            if (e.code() != ErrorCode::ProviderUnavailable || attempt + 1 >= kAttempts) throw;
            std::this_thread::sleep_for(cfg.retry_backoff * (1 << attempt));
        }
    }
}

json parse_reply(const std::string& body) {
    try {
        return json::parse(body);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::MalformedResponse, std::string("response is not JSON: ") + e.what());
    }
}

void require_online(const ProviderConfig& cfg, const std::shared_ptr<Transport>& transport) {
    if (cfg.offline_mode) throw Error(ErrorCode::InvalidInput, "online client constructed in offline mode");
    if (!transport) throw Error(ErrorCode::InvalidInput, "online client requires a transport");
    cfg.validate();
}

} // namespace

HttpEmbedder::HttpEmbedder(ProviderConfig cfg, std::shared_ptr<Transport> transport)
    : cfg_(std::move(cfg)), transport_(std::move(transport)), limiter_(cfg_.max_in_flight) {
    require_online(cfg_, transport_);
}

EmbeddingVector HttpEmbedder::embed(std::string_view input) {
    if (text::trim(input).empty()) throw Error(ErrorCode::InvalidInput, "cannot embed empty text");
    const std::string body = json{{"text", std::string(input)}}.dump();
    const std::string reply = with_retry(cfg_, [&] {
        InFlightLimiter::Slot slot(limiter_);
        return transport_->post(join_url(cfg_.endpoint_url, "/embed"), body, auth_headers(cfg_), cfg_.timeout);
    });
    const json j = parse_reply(reply);
    if (!j.is_object() || !j.contains("vector") || !j["vector"].is_array()) {
        throw Error(ErrorCode::MalformedResponse, "embedding reply lacks a 'vector' array");
    }
    std::vector<double> values;
    values.reserve(j["vector"].size());
    for (const auto& v : j["vector"]) {
        if (!v.is_number()) throw Error(ErrorCode::MalformedResponse, "non-numeric embedding component");
        values.push_back(v.get<double>());
    }
    if (values.size() != cfg_.dimension) {
        throw Error(ErrorCode::MalformedResponse, "embedding has dimension " + std::to_string(values.size()) +
                                                      ", expected " + std::to_string(cfg_.dimension));
    }
    try {
        return normalized(std::move(values));
    } catch (const Error&) {
        throw Error(ErrorCode::MalformedResponse, "embedding reply is the zero vector");
    }
}

HttpGenerator::HttpGenerator(ProviderConfig cfg, std::shared_ptr<Transport> transport)
    : cfg_(std::move(cfg)), transport_(std::move(transport)), limiter_(cfg_.max_in_flight) {
    require_online(cfg_, transport_);
}

std::string HttpGenerator::complete(std::string_view prompt) {
    if (text::trim(prompt).empty()) throw Error(ErrorCode::InvalidInput, "empty prompt");
    const std::string body = json{{"prompt", std::string(prompt)}}.dump();
    const std::string reply = with_retry(cfg_, [&] {
        InFlightLimiter::Slot slot(limiter_);
        return transport_->post(join_url(cfg_.endpoint_url, "/complete"), body, auth_headers(cfg_), cfg_.timeout);
    });
    const json j = parse_reply(reply);
    if (!j.is_object() || !j.contains("text") || !j["text"].is_string()) {
        throw Error(ErrorCode::MalformedResponse, "completion reply lacks a 'text' string");
    }
    auto out = j["text"].get<std::string>();
    if (text::trim(out).empty()) throw Error(ErrorCode::MalformedResponse, "empty completion");
    return out;
}

// ---------------------------------------------------------------------------

Providers make_providers(const ProviderConfig& raw, std::shared_ptr<Transport> transport) {
    const ProviderConfig cfg = apply_environment(raw);
    cfg.validate();
    Providers p;
    if (cfg.offline_mode) {
        p.embedder = std::make_unique<OfflineEmbedder>(cfg.dimension, cfg.seed);
        p.generator = std::make_unique<OfflineGenerator>();
        p.judge = std::make_unique<EmbeddingJudge>(*p.embedder);
        return p;
    }
    if (!transport) transport = make_http_transport();
    p.embedder = std::make_unique<HttpEmbedder>(cfg, transport);
    p.generator = std::make_unique<HttpGenerator>(cfg, transport);
    p.judge = std::make_unique<LlmJudge>(*p.generator, cfg.judge_prompt);
    return p;
}

} // namespace wkforge

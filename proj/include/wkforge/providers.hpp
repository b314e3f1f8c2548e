#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace wkforge {

// Dense embedding. Vectors produced by an Embedder are unit-norm.
struct EmbeddingVector {
    std::vector<double> values;

    std::size_t dim() const noexcept { return values.size(); }
    double norm() const noexcept;

    bool operator==(const EmbeddingVector&) const = default;
};

double dot(const EmbeddingVector& a, const EmbeddingVector& b);

// Cosine similarity in [-1, 1]; 0 when either vector has zero norm.
// Throws InvalidInput on a dimension mismatch.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

// L2-normalized copy. Throws InvalidInput for a zero vector.
EmbeddingVector normalized(std::vector<double> values);

inline constexpr std::string_view kDefaultJudgePrompt =
    "You compare one task of a generated workflow with one task of a reference workflow.\n"
    "Answer 1 if the generated task is semantically aligned with the reference task, "
    "otherwise answer 0. Reply with the single digit only.\n"
    "Generated task: {generated}\n"
    "Reference task: {reference}\n";

struct ProviderConfig {
    std::string endpoint_url;
    std::string api_key_env = "WKFORGE_API_KEY";
    std::chrono::duration<double> timeout{30.0};
    int max_in_flight = 4;
    bool offline_mode = true;
    std::uint64_t seed = 0;
    std::size_t dimension = 256;
    // Prompt template for the online judge; {generated} and {reference} are substituted.
    std::string judge_prompt{kDefaultJudgePrompt};
    // Base delay for the single retry after ProviderUnavailable; doubled per attempt.
    std::chrono::milliseconds retry_backoff{250};

    void validate() const;
};

// Returns cfg with offline_mode forced on when WKFORGE_OFFLINE=1 is set.
ProviderConfig apply_environment(ProviderConfig cfg);

using HttpHeaders = std::vector<std::pair<std::string, std::string>>;

// POSTs a JSON body and returns the response body. Implementations throw
// Error(ProviderUnavailable) on connection failures, timeouts and non-2xx replies.
class Transport {
public:
    virtual ~Transport() = default;
    virtual std::string post(const std::string& url, const std::string& json_body,
                             const HttpHeaders& headers,
                             std::chrono::duration<double> timeout) = 0;
};

std::shared_ptr<Transport> make_http_transport();

// Bounds the number of concurrent requests issued through one provider.
class InFlightLimiter {
public:
    explicit InFlightLimiter(int max_in_flight);

    class Slot {
    public:
        explicit Slot(InFlightLimiter& owner);
        ~Slot();
        Slot(const Slot&) = delete;
        Slot& operator=(const Slot&) = delete;

    private:
        InFlightLimiter& owner_;
    };

    int capacity() const noexcept { return capacity_; }

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    int capacity_;
    int in_use_ = 0;
};

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual EmbeddingVector embed(std::string_view text) = 0;
    virtual std::size_t dimension() const = 0;
};

class Generator {
public:
    virtual ~Generator() = default;
    virtual std::string complete(std::string_view prompt) = 0;
};

class Judge {
public:
    virtual ~Judge() = default;
    // Similarity of a generated task text to a reference task text, in [0, 1].
    virtual double judge_match(std::string_view generated, std::string_view reference) = 0;
};

// Seeded feature hashing of byte trigrams. The input is ASCII-lowercased,
// whitespace-collapsed and padded with one space on each side. Each trigram is
// hashed (FNV-1a 64 mixed with splitmix64(seed)) to a bucket and a sign.
class OfflineEmbedder final : public Embedder {
public:
    OfflineEmbedder(std::size_t dimension, std::uint64_t seed);

    EmbeddingVector embed(std::string_view text) override;
    std::size_t dimension() const override { return dimension_; }

private:
    std::size_t dimension_;
    std::uint64_t seed_;
};

inline constexpr std::string_view kSwkgBlockBegin = "<<<WORK KNOWLEDGE>>>";
inline constexpr std::string_view kSwkgBlockEnd = "<<<END WORK KNOWLEDGE>>>";

// Deterministic stand-in for the generation backend: emits one
// "title :: description" line per "id | title | description" line found in the
// prompt's work-knowledge block, in prompt order.
class OfflineGenerator final : public Generator {
public:
    std::string complete(std::string_view prompt) override;
};

// (1 + cosine) / 2 over the embedder's vectors.
class EmbeddingJudge final : public Judge {
public:
    explicit EmbeddingJudge(Embedder& embedder) : embedder_(embedder) {}
    double judge_match(std::string_view generated, std::string_view reference) override;

private:
    Embedder& embedder_;
};

// Online clients: POST {"text"} -> {"vector"} at <endpoint>/embed and
// {"prompt"} -> {"text"} at <endpoint>/complete, with a bearer token read from
// the environment variable named by api_key_env.
class HttpEmbedder final : public Embedder {
public:
    HttpEmbedder(ProviderConfig cfg, std::shared_ptr<Transport> transport);

    EmbeddingVector embed(std::string_view text) override;
    std::size_t dimension() const override { return cfg_.dimension; }

private:
    ProviderConfig cfg_;
    std::shared_ptr<Transport> transport_;
    InFlightLimiter limiter_;
};

class HttpGenerator final : public Generator {
public:
    HttpGenerator(ProviderConfig cfg, std::shared_ptr<Transport> transport);

    std::string complete(std::string_view prompt) override;

private:
    ProviderConfig cfg_;
    std::shared_ptr<Transport> transport_;
    InFlightLimiter limiter_;
};

// Prompts a generator with the configured judge template and parses a binary verdict.
class LlmJudge final : public Judge {
public:
    LlmJudge(Generator& generator, std::string prompt_template)
        : generator_(generator), prompt_template_(std::move(prompt_template)) {}

    double judge_match(std::string_view generated, std::string_view reference) override;

private:
    Generator& generator_;
    std::string prompt_template_;
};

// Parses a judge reply ("1"/"0", "yes"/"no", "true"/"false"). Throws MalformedResponse.
double parse_judge_reply(std::string_view reply);

// Bundle of the three clients built from one configuration. The judge holds a
// reference to the embedder or generator owned by the same bundle.
struct Providers {
    std::unique_ptr<Embedder> embedder;
    std::unique_ptr<Generator> generator;
    std::unique_ptr<Judge> judge;
};

// Offline configurations never touch `transport`. Online configurations use it,
// or a fresh HTTP transport when it is null.
Providers make_providers(const ProviderConfig& cfg, std::shared_ptr<Transport> transport = nullptr);

} // namespace wkforge

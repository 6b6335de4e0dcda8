#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cryptoscan/prompt.hpp"
#include "cryptoscan/response_parser.hpp"

namespace cryptoscan {

// One classifier endpoint. `endpoint` is either an OpenAI-compatible
// chat-completions URL (http/https) or "mock:<seed>" for the built-in
// deterministic backend.
struct ModelConfig {
    std::string model_id;
    std::string endpoint;
    double temperature = 0.0;
    double top_p = 0.95;
    int max_tokens = 256;
    std::string template_id = "default";
    int max_attempts = 3;
    double temperature_step = 0.2;
    std::chrono::milliseconds request_timeout{30000};
    std::string bearer_token;  // optional Authorization header
    int max_in_flight = 4;     // per-endpoint parallelism bound

    bool is_mock() const;
    std::uint64_t mock_seed() const; // only valid when is_mock()

    // Throws ConfigError on out-of-range values, including the retry
    // ceiling: temperature + (max_attempts - 1) * temperature_step <= 2.0.
    void validate() const;
};

// Result of querying one model about one package. transport_error set
// implies raw_text is empty; a failed request is data, not an exception.
struct QueryOutcome {
    std::string model_id;
    std::string package_name;
    std::string raw_text;
    int attempts_used = 1;
    double final_temperature = 0.0;
    std::optional<std::string> transport_error;
};

// Transport abstraction so tests can script arbitrary response sequences.
class Backend {
  public:
    virtual ~Backend() = default;
    virtual QueryOutcome send(const ModelConfig& model,
                              const RenderedPrompt& prompt,
                              double temperature) = 0;
};

// POSTs {model, messages:[user], temperature, top_p, max_tokens} and reads
// choices[0].message.content. Any connection failure, non-2xx status, or
// unrecognizable envelope becomes QueryOutcome.transport_error.
class HttpBackend : public Backend {
  public:
    QueryOutcome send(const ModelConfig& model, const RenderedPrompt& prompt,
                      double temperature) override;
};

// Knobs shared by a simulated ensemble. `seed` comes from the model's
// "mock:<seed>" endpoint; all models of one simulated ensemble must share
// it, because the per-package latent draw that correlates their verdicts
// is keyed by (seed, package).
struct MockProfile {
    std::uint64_t seed = 0;
    double base_true_rate = 0.5;
    double correlation = 0.0;    // pairwise verdict correlation in [0, 1]
    double malformed_rate = 0.0; // probability of a malformed response
    std::map<std::string, double> per_model_bias;

    void validate() const;
};

class MockBackend : public Backend {
  public:
    explicit MockBackend(MockProfile profile) : profile_(std::move(profile)) {}
    QueryOutcome send(const ModelConfig& model, const RenderedPrompt& prompt,
                      double temperature) override;

    const MockProfile& profile() const { return profile_; }

  private:
    MockProfile profile_;
};

// Pure function of (profile.seed, model_id, package_name): the raw text a
// simulated model returns, including deliberate malformations at
// malformed_rate. See mock_backend.cpp for the correlation construction.
std::string mock_respond(const MockProfile& profile,
                         const std::string& model_id,
                         const std::string& package_name);

// The per-package latent true-rate behind the simulated verdicts, and the
// ground truth it implies. Exposed so tests and desk runs can score the
// simulated ensemble against a consistent truth.
double mock_latent_rate(const MockProfile& profile,
                        const std::string& package_name);
bool mock_truth(const MockProfile& profile, const std::string& package_name);

// Picks HttpBackend or MockBackend from model.endpoint. `mock_knobs`
// supplies everything but the seed for mock endpoints.
std::unique_ptr<Backend> make_backend(const ModelConfig& model,
                                      const MockProfile& mock_knobs);

// Single query at the model's base temperature.
QueryOutcome query(Backend& backend, const ModelConfig& model,
                   const RenderedPrompt& prompt);

using ParseFn = std::function<ParseResult(const std::string& raw_text,
                                          const std::string& expected_package)>;

struct RetryResult {
    QueryOutcome outcome;
    std::optional<ParsedResponse> response;
    std::optional<ParseFailure> failure; // set when parsing failed

    bool valid() const { return response.has_value(); }
};

// Retries on parse failure or transport error, never on success. Attempt
// k (1-based) runs at temperature + (k - 1) * temperature_step, so the
// temperature never decreases and never exceeds the configured ceiling.
// Exhaustion yields an invalid-marker RetryResult, not an exception.
RetryResult query_with_retry(Backend& backend, const ModelConfig& model,
                             const RenderedPrompt& prompt, const ParseFn& parse);

struct ModelRunResult {
    std::string model_id;
    std::vector<RetryResult> rows; // aligned with the input package order
    std::size_t transport_failures = 0;
};

// Queries every (model, package) pair. Packages of one model are spread
// over at most max_in_flight worker threads; distinct models run fully in
// parallel. Each worker writes to its own row slot, and rows come back in
// input order, so results are deterministic regardless of scheduling. A
// transport failure on one model never suppresses the others.
std::vector<ModelRunResult> run_ensemble_queries(
    const std::vector<ModelConfig>& models,
    const std::map<std::string, PromptTemplate>& templates,
    const std::vector<PackageRecord>& packages, const ParseFn& parse,
    const MockProfile& mock_knobs);

} // namespace cryptoscan

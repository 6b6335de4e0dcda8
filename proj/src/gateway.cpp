#include "cryptoscan/gateway.hpp"

#include <atomic>
#include <charconv>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"
#include "json.hpp"

#include "cryptoscan/errors.hpp"

namespace cryptoscan {

namespace {

constexpr double kTemperatureCeiling = 2.0;
constexpr const char* kMockScheme = "mock:";
constexpr const char* kDefaultCompletionsPath = "/v1/chat/completions";

// Splits "http(s)://host[:port][/path]" into a client base and a path.
bool split_endpoint(const std::string& endpoint, std::string& base,
                    std::string& path) {
    std::size_t scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos) return false;
    std::size_t path_start = endpoint.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        base = endpoint;
        path = kDefaultCompletionsPath;
    } else {
        base = endpoint.substr(0, path_start);
        path = endpoint.substr(path_start);
        if (path == "/") path = kDefaultCompletionsPath;
    }
    return true;
}

} // namespace

bool ModelConfig::is_mock() const {
    return endpoint.rfind(kMockScheme, 0) == 0;
}

std::uint64_t ModelConfig::mock_seed() const {
    std::uint64_t seed = 0;
    const char* first = endpoint.data() + 5;
    const char* last = endpoint.data() + endpoint.size();
    auto [ptr, ec] = std::from_chars(first, last, seed);
    if (ec != std::errc() || ptr != last)
        throw ConfigError("model '" + model_id +
                          "': mock endpoint needs a numeric seed, got '" +
                          endpoint + "'");
    return seed;
}

void ModelConfig::validate() const {
    if (model_id.empty()) throw ConfigError("model with empty model_id");
    if (endpoint.empty())
        throw ConfigError("model '" + model_id + "' has no endpoint");
    if (is_mock())
        mock_seed(); // throws on malformed seed
    else if (endpoint.rfind("http://", 0) != 0 &&
             endpoint.rfind("https://", 0) != 0)
        throw ConfigError("model '" + model_id + "': endpoint '" + endpoint +
                          "' is neither http(s) nor mock:<seed>");
    if (temperature < 0.0)
        throw ConfigError("model '" + model_id + "': temperature must be >= 0");
    if (top_p <= 0.0 || top_p > 1.0)
        throw ConfigError("model '" + model_id + "': top_p must be in (0, 1]");
    if (max_tokens <= 0)
        throw ConfigError("model '" + model_id + "': max_tokens must be positive");
    if (max_attempts < 1)
        throw ConfigError("model '" + model_id + "': max_attempts must be >= 1");
    if (temperature_step < 0.0)
        throw ConfigError("model '" + model_id +
                          "': temperature_step must be >= 0");
    if (max_in_flight < 1)
        throw ConfigError("model '" + model_id + "': max_in_flight must be >= 1");
    double final_temp = temperature + (max_attempts - 1) * temperature_step;
    if (final_temp > kTemperatureCeiling + 1e-12)
        throw ConfigError("model '" + model_id +
                          "': retry escalation would reach temperature " +
                          std::to_string(final_temp) + ", above the 2.0 ceiling");
    if (request_timeout.count() <= 0)
        throw ConfigError("model '" + model_id +
                          "': request_timeout must be positive");
}

QueryOutcome HttpBackend::send(const ModelConfig& model,
                               const RenderedPrompt& prompt,
                               double temperature) {
    QueryOutcome outcome;
    outcome.model_id = model.model_id;
    outcome.package_name = prompt.package_name;
    outcome.final_temperature = temperature;

    std::string base, path;
    if (!split_endpoint(model.endpoint, base, path)) {
        outcome.transport_error = "malformed endpoint: " + model.endpoint;
        return outcome;
    }

    httplib::Client client(base);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(
        model.request_timeout);
    if (secs.count() < 1) secs = std::chrono::seconds(1);
    client.set_connection_timeout(secs.count(), 0);
    client.set_read_timeout(secs.count(), 0);
    client.set_write_timeout(secs.count(), 0);

    httplib::Headers headers;
    if (!model.bearer_token.empty())
        headers.emplace("Authorization", "Bearer " + model.bearer_token);

    nlohmann::json body;
    body["model"] = model.model_id;
    body["messages"] =
        nlohmann::json::array({{{"role", "user"}, {"content", prompt.text}}});
    body["temperature"] = temperature;
    body["top_p"] = model.top_p;
    body["max_tokens"] = model.max_tokens;

    httplib::Result res =
        client.Post(path, headers, body.dump(), "application/json");
    if (!res) {
        outcome.transport_error =
            "connection failed: " + httplib::to_string(res.error());
        return outcome;
    }
    if (res->status < 200 || res->status >= 300) {
        outcome.transport_error = "http status " + std::to_string(res->status);
        return outcome;
    }

    nlohmann::json envelope = nlohmann::json::parse(res->body, nullptr, false);
    if (envelope.is_discarded() || !envelope.contains("choices") ||
        !envelope["choices"].is_array() || envelope["choices"].empty() ||
        !envelope["choices"][0].contains("message") ||
        !envelope["choices"][0]["message"].contains("content") ||
        !envelope["choices"][0]["message"]["content"].is_string()) {
        outcome.transport_error = "response is not a chat-completions envelope";
        return outcome;
    }

    outcome.raw_text =
        envelope["choices"][0]["message"]["content"].get<std::string>();
    return outcome;
}

std::unique_ptr<Backend> make_backend(const ModelConfig& model,
                                      const MockProfile& mock_knobs) {
    if (model.is_mock()) {
        MockProfile profile = mock_knobs;
        profile.seed = model.mock_seed();
        profile.validate();
        return std::make_unique<MockBackend>(std::move(profile));
    }
    return std::make_unique<HttpBackend>();
}

QueryOutcome query(Backend& backend, const ModelConfig& model,
                   const RenderedPrompt& prompt) {
    QueryOutcome outcome = backend.send(model, prompt, model.temperature);
    outcome.attempts_used = 1;
    if (outcome.transport_error) outcome.raw_text.clear();
    return outcome;
}

RetryResult query_with_retry(Backend& backend, const ModelConfig& model,
                             const RenderedPrompt& prompt,
                             const ParseFn& parse) {
    RetryResult result;
    for (int attempt = 1; attempt <= model.max_attempts; ++attempt) {
        double temp = model.temperature + (attempt - 1) * model.temperature_step;
        QueryOutcome outcome = backend.send(model, prompt, temp);
        outcome.attempts_used = attempt;
        outcome.final_temperature = temp;
        if (outcome.transport_error) {
            outcome.raw_text.clear();
            result.outcome = std::move(outcome);
            result.response.reset();
            result.failure.reset();
            continue;
        }

        ParseResult parsed = parse(outcome.raw_text, prompt.package_name);
        result.outcome = std::move(outcome);
        if (parsed.ok()) {
            result.response = parsed.response();
            result.failure.reset();
            return result;
        }
        result.response.reset();
        result.failure = parsed.failure();
    }
    return result; // invalid marker: last outcome plus failure/transport info
}

std::vector<ModelRunResult> run_ensemble_queries(
    const std::vector<ModelConfig>& models,
    const std::map<std::string, PromptTemplate>& templates,
    const std::vector<PackageRecord>& packages, const ParseFn& parse,
    const MockProfile& mock_knobs) {
    // Resolve template bindings before spawning anything.
    std::vector<const PromptTemplate*> bound;
    bound.reserve(models.size());
    for (const ModelConfig& model : models) {
        auto it = templates.find(model.template_id);
        if (it == templates.end()) it = templates.find("default");
        if (it == templates.end())
            throw ConfigError("model '" + model.model_id +
                              "': template '" + model.template_id +
                              "' not found and no default available");
        bound.push_back(&it->second);
    }

    std::vector<ModelRunResult> results(models.size());
    std::vector<std::thread> threads;

    for (std::size_t m = 0; m < models.size(); ++m) {
        const ModelConfig& model = models[m];
        ModelRunResult& result = results[m];
        result.model_id = model.model_id;
        result.rows.resize(packages.size());

        auto backend = std::make_shared<std::unique_ptr<Backend>>(
            make_backend(model, mock_knobs));
        auto next = std::make_shared<std::atomic<std::size_t>>(0);

        int workers = std::min<int>(model.max_in_flight,
                                    static_cast<int>(packages.size()));
        workers = std::max(workers, 1);
        const PromptTemplate* tmpl = bound[m];
        for (int w = 0; w < workers; ++w) {
            threads.emplace_back([&model, &result, &packages, tmpl, parse,
                                  backend, next]() {
                for (;;) {
                    std::size_t i = next->fetch_add(1);
                    if (i >= packages.size()) return;
                    RenderedPrompt prompt = render(*tmpl, packages[i]);
                    result.rows[i] =
                        query_with_retry(**backend, model, prompt, parse);
                }
            });
        }
    }
    for (std::thread& t : threads) t.join();

    for (ModelRunResult& result : results)
        for (const RetryResult& row : result.rows)
            if (row.outcome.transport_error) ++result.transport_failures;
    return results;
}

void MockProfile::validate() const {
    if (base_true_rate < 0.0 || base_true_rate > 1.0)
        throw ConfigError("mock base_true_rate must be in [0, 1]");
    if (correlation < 0.0 || correlation > 1.0)
        throw ConfigError("mock correlation must be in [0, 1]");
    if (malformed_rate < 0.0 || malformed_rate >= 1.0)
        throw ConfigError("mock malformed_rate must be in [0, 1)");
}

} // namespace cryptoscan

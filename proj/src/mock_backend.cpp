#include <algorithm>
#include <cmath>
#include <random>

#include "cryptoscan/gateway.hpp"
#include "cryptoscan/rng.hpp"

// Simulated ensemble with tunable inter-model correlation.
//
// Construction: each package gets a latent true-rate p drawn once from a
// Beta distribution with mean r = base_true_rate and intra-class
// correlation rho = `correlation`:
//
//     alpha = r (1 - rho) / rho,   beta = (1 - r) (1 - rho) / rho
//
// so alpha + beta = (1 - rho) / rho and the standard beta-binomial identity
// rho = 1 / (alpha + beta + 1) holds exactly. Every model then votes true
// independently with probability clamp(p + per_model_bias). The resulting
// vote counts follow a beta-binomial with design effect 1 + (n - 1) rho,
// which is what lets a desk run recover the configured correlation from
// the observed vote variance. rho = 0 degenerates to independent
// Bernoulli(r) votes; rho = 1 to a single shared coin per package.

namespace cryptoscan {

namespace {

std::mt19937_64 engine_for(std::uint64_t seed, std::string_view tag,
                           std::string_view a, std::string_view b = {}) {
    return std::mt19937_64(hash_combine(seed, tag, a, b));
}

double clamp01(double x) { return std::min(1.0, std::max(0.0, x)); }

std::string valid_response(const std::string& package, bool vote) {
    std::string text = "{\"package\": \"" + package +
                       "\", \"cryptographic_relevance\": ";
    text += vote ? "true" : "false";
    text += ", \"justification\": \"";
    text += vote ? "exposes or depends on cryptographic primitives"
                 : "no cryptographic functionality identified";
    text += "\"}";
    return text;
}

// Fixed malformation catalogue. The first three are repairable by the
// tolerant parser; the last drops the relevance field and stays invalid.
std::string malformed_response(const std::string& package, bool vote,
                               std::uint64_t variant) {
    std::string valid = valid_response(package, vote);
    switch (variant % 4) {
    case 0: // missing closing brace
        return valid.substr(0, valid.size() - 1);
    case 1: { // unquoted keys
        std::string out = valid;
        auto strip = [&out](const std::string& quoted,
                            const std::string& bare) {
            std::size_t pos = out.find(quoted);
            if (pos != std::string::npos)
                out.replace(pos, quoted.size(), bare);
        };
        strip("\"package\"", "package");
        strip("\"cryptographic_relevance\"", "cryptographic_relevance");
        strip("\"justification\"", "justification");
        return out;
    }
    case 2: // prose around the JSON
        return "Sure! Here is the requested JSON:\n" + valid +
               "\nLet me know if you need anything else.";
    default: // missing relevance field
        return "{\"package\": \"" + package +
               "\", \"justification\": \"unsure about this one\"}";
    }
}

} // namespace

double mock_latent_rate(const MockProfile& profile,
                        const std::string& package_name) {
    const double r = clamp01(profile.base_true_rate);
    const double rho = profile.correlation;
    if (rho <= 0.0 || r <= 0.0 || r >= 1.0) return r;

    std::mt19937_64 eng = engine_for(profile.seed, "latent", package_name);
    if (rho >= 1.0 - 1e-12) // degenerate limit: one shared coin
        return uniform01(eng) < r ? 1.0 : 0.0;

    const double s = (1.0 - rho) / rho; // alpha + beta
    return beta_sample(eng, r * s, (1.0 - r) * s);
}

bool mock_truth(const MockProfile& profile, const std::string& package_name) {
    return mock_latent_rate(profile, package_name) >= 0.5;
}

std::string mock_respond(const MockProfile& profile,
                         const std::string& model_id,
                         const std::string& package_name) {
    double rate = mock_latent_rate(profile, package_name);
    auto bias = profile.per_model_bias.find(model_id);
    if (bias != profile.per_model_bias.end())
        rate = clamp01(rate + bias->second);

    std::mt19937_64 eng = engine_for(profile.seed, "model", model_id,
                                     package_name);
    const bool vote = uniform01(eng) < rate;
    const double malformed_draw = uniform01(eng);
    if (malformed_draw < profile.malformed_rate)
        return malformed_response(package_name, vote, eng());
    return valid_response(package_name, vote);
}

QueryOutcome MockBackend::send(const ModelConfig& model,
                               const RenderedPrompt& prompt,
                               double temperature) {
    QueryOutcome outcome;
    outcome.model_id = model.model_id;
    outcome.package_name = prompt.package_name;
    outcome.final_temperature = temperature;
    outcome.raw_text = mock_respond(profile_, model.model_id,
                                    prompt.package_name);
    return outcome;
}

} // namespace cryptoscan

#include "cryptoscan/run_config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <set>

#include "json.hpp"

#include "cryptoscan/errors.hpp"

namespace cryptoscan {

namespace {

using nlohmann::json;

std::string env_key(const std::string& prefix, const std::string& name) {
    std::string key = prefix;
    for (char c : name) {
        if (std::isalnum(static_cast<unsigned char>(c)))
            key.push_back(
                static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
        else
            key.push_back('_');
    }
    return key;
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj[key].get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("config field '") + key +
                          "' has the wrong type");
    }
}

ModelConfig parse_model(const json& entry) {
    if (!entry.is_object())
        throw ConfigError("every entry under 'models' must be an object");
    ModelConfig model;
    model.model_id = get_or<std::string>(entry, "model_id", "");
    model.endpoint = get_or<std::string>(entry, "endpoint", "");
    model.temperature = get_or<double>(entry, "temperature", 0.0);
    model.top_p = get_or<double>(entry, "top_p", 0.95);
    model.max_tokens = get_or<int>(entry, "max_tokens", 256);
    model.template_id = get_or<std::string>(entry, "template_id", "default");
    model.max_attempts = get_or<int>(entry, "max_attempts", 3);
    model.temperature_step = get_or<double>(entry, "temperature_step", 0.2);
    model.request_timeout =
        std::chrono::milliseconds(get_or<int>(entry, "request_timeout_ms", 30000));
    model.bearer_token = get_or<std::string>(entry, "bearer_token", "");
    model.max_in_flight = get_or<int>(entry, "max_in_flight", 4);
    return model;
}

} // namespace

std::uint64_t RunConfig::seed_for(const std::string& stage) const {
    auto it = seeds.find(stage);
    if (it != seeds.end()) return it->second;
    // Stable default per stage name so unset seeds are still reproducible.
    std::uint64_t h = 0;
    for (char c : stage) h = h * 131 + static_cast<unsigned char>(c);
    return h;
}

RunConfig RunConfig::load(const std::filesystem::path& config_path) {
    std::ifstream in(config_path);
    if (!in)
        throw ConfigError("cannot read config file: " + config_path.string());
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded())
        throw ConfigError("config file is not valid JSON: " +
                          config_path.string());
    if (!doc.is_object())
        throw ConfigError("config file must hold a JSON object");

    RunConfig config;
    config.run_dir = get_or<std::string>(doc, "run_dir", "run");
    config.templates_dir = get_or<std::string>(doc, "templates_dir", "templates");
    config.significance = get_or<double>(doc, "significance", 0.001);
    config.per_stratum = get_or<std::size_t>(doc, "per_stratum", 65);
    config.k_folds = get_or<std::size_t>(doc, "k_folds", 5);
    config.k_members = get_or<std::size_t>(doc, "k_members", 3);
    config.strict_parse = get_or<bool>(doc, "strict_parse", false);

    if (doc.contains("weights")) {
        const json& w = doc["weights"];
        config.weights.recall_weight = get_or<double>(w, "recall", 0.7);
        config.weights.specificity_weight = get_or<double>(w, "specificity", 0.3);
    }

    if (doc.contains("seeds")) {
        if (!doc["seeds"].is_object())
            throw ConfigError("'seeds' must map stage names to integers");
        for (const auto& [stage, value] : doc["seeds"].items()) {
            if (!value.is_number_unsigned() && !value.is_number_integer())
                throw ConfigError("seed for stage '" + stage +
                                  "' must be an integer");
            config.seeds[stage] = value.get<std::uint64_t>();
        }
    }

    if (doc.contains("mock")) {
        const json& m = doc["mock"];
        config.mock.base_true_rate = get_or<double>(m, "base_true_rate", 0.5);
        config.mock.correlation = get_or<double>(m, "correlation", 0.0);
        config.mock.malformed_rate = get_or<double>(m, "malformed_rate", 0.0);
        if (m.contains("per_model_bias")) {
            if (!m["per_model_bias"].is_object())
                throw ConfigError("'mock.per_model_bias' must be an object");
            for (const auto& [id, bias] : m["per_model_bias"].items())
                config.mock.per_model_bias[id] = bias.get<double>();
        }
    }

    if (!doc.contains("models") || !doc["models"].is_array() ||
        doc["models"].empty())
        throw ConfigError("config needs a non-empty 'models' array");
    for (const json& entry : doc["models"])
        config.models.push_back(parse_model(entry));

    // Environment overrides, applied before validation.
    for (ModelConfig& model : config.models) {
        std::string key = env_key("CRYPTOSCAN_ENDPOINT_", model.model_id);
        if (const char* value = std::getenv(key.c_str()))
            model.endpoint = value;
    }
    for (auto& [stage, seed] : config.seeds) {
        std::string key = env_key("CRYPTOSCAN_SEED_", stage);
        if (const char* value = std::getenv(key.c_str()))
            seed = std::strtoull(value, nullptr, 10);
    }
    for (const std::string& stage : {"sample", "cv"}) {
        std::string key = env_key("CRYPTOSCAN_SEED_", stage);
        if (const char* value = std::getenv(key.c_str()))
            config.seeds[stage] = std::strtoull(value, nullptr, 10);
    }

    config.validate();
    return config;
}

void RunConfig::validate() const {
    if (models.empty()) throw ConfigError("config lists no models");
    std::set<std::string> ids;
    for (const ModelConfig& model : models) {
        model.validate();
        if (!ids.insert(model.model_id).second)
            throw ConfigError("duplicate model_id: " + model.model_id);
        // Ids become artifact file names (responses/<id>.csv).
        if (model.model_id.find('/') != std::string::npos ||
            model.model_id.find('\\') != std::string::npos ||
            model.model_id.find("..") != std::string::npos)
            throw ConfigError("model_id must not contain path separators: " +
                              model.model_id);
    }
    weights.validate();
    mock.validate();
    if (significance <= 0.0 || significance >= 1.0)
        throw ConfigError("significance must be in (0, 1)");
    if (per_stratum == 0) throw ConfigError("per_stratum must be positive");
    if (k_folds < 2) throw ConfigError("k_folds must be at least 2");
    if (k_members == 0 || k_members > models.size())
        throw ConfigError("k_members must be between 1 and the model count");
    if (run_dir.empty()) throw ConfigError("run_dir must not be empty");
}

} // namespace cryptoscan

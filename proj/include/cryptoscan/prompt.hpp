#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "cryptoscan/ingest.hpp"

namespace cryptoscan {

// A prompt template: free text with {{name}}, {{description}} and
// {{dependencies}} placeholders plus an embedded one-shot JSON skeleton
// telling the model the exact answer shape. Placeholders are double-brace
// so they cannot collide with the skeleton's JSON braces.
struct PromptTemplate {
    std::string template_id;
    std::string body;
    std::string output_contract; // the JSON answer skeleton inside body
};

struct RenderedPrompt {
    std::string package_name;
    std::string model_template_id;
    std::string text;
};

struct RenderOptions {
    std::size_t max_dependencies = 64; // beyond this, "(+K more)"
};

// Validates and packages a template body:
//   - body must use the {{name}} placeholder at least once
//   - body must embed exactly one JSON answer skeleton whose keys are
//     package, cryptographic_relevance, justification
// Throws ConfigError naming the template otherwise.
PromptTemplate make_template(const std::string& template_id,
                             const std::string& body);

// Loads every *.prompt file in `dir` (template_id = file stem). Throws
// ConfigError when the directory is missing, holds no "default" template,
// or produces a duplicate id.
std::map<std::string, PromptTemplate> load_template_set(
    const std::filesystem::path& dir);

// Substitutes package fields into the template. Deterministic: identical
// inputs produce byte-identical text. Empty descriptions render as
// "no description available"; dependencies are comma-joined and truncated
// past max_dependencies with an explicit "(+K more)" marker. Throws
// ConfigError on an unknown or unterminated placeholder. The result never
// contains a residual "{{".
RenderedPrompt render(const PromptTemplate& tmpl, const PackageRecord& pkg,
                      const RenderOptions& options = {});

} // namespace cryptoscan

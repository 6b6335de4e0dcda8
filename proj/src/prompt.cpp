#include "cryptoscan/prompt.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "cryptoscan/errors.hpp"

namespace cryptoscan {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// Extracts the first brace-balanced JSON block from a template body,
// stepping over {{placeholders}} and quoted strings. Returns an empty
// string when no balanced block exists.
std::string extract_json_block(const std::string& body) {
    std::size_t i = 0;
    const std::size_t n = body.size();
    while (i < n) {
        if (body[i] == '{' && i + 1 < n && body[i + 1] == '{') {
            std::size_t close = body.find("}}", i + 2);
            if (close == std::string::npos) return "";
            i = close + 2;
            continue;
        }
        if (body[i] == '{') break;
        ++i;
    }
    if (i >= n) return "";

    std::size_t start = i;
    int depth = 0;
    bool in_string = false;
    while (i < n) {
        char c = body[i];
        if (in_string) {
            if (c == '\\' && i + 1 < n)
                ++i;
            else if (c == '"')
                in_string = false;
            ++i;
            continue;
        }
        if (c == '{' && i + 1 < n && body[i + 1] == '{') {
            std::size_t close = body.find("}}", i + 2);
            if (close == std::string::npos) return "";
            i = close + 2;
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == '{') {
            ++depth;
        } else if (c == '}') {
            --depth;
            if (depth == 0) return body.substr(start, i - start + 1);
        }
        ++i;
    }
    return "";
}

// Collects the depth-1 quoted keys of a JSON-shaped block without fully
// parsing it (the skeleton may contain placeholders).
std::set<std::string> top_level_keys(const std::string& block) {
    std::set<std::string> keys;
    int depth = 0;
    bool in_string = false;
    bool expecting_key = false;
    std::string current;
    for (std::size_t i = 0; i < block.size(); ++i) {
        char c = block[i];
        if (in_string) {
            if (c == '\\' && i + 1 < block.size()) {
                current.push_back(block[++i]);
            } else if (c == '"') {
                in_string = false;
                // A string at depth 1 followed by ':' is a key.
                std::size_t j = i + 1;
                while (j < block.size() &&
                       (block[j] == ' ' || block[j] == '\t' ||
                        block[j] == '\n' || block[j] == '\r'))
                    ++j;
                if (depth == 1 && expecting_key && j < block.size() &&
                    block[j] == ':')
                    keys.insert(current);
                current.clear();
            } else {
                current.push_back(c);
            }
            continue;
        }
        switch (c) {
        case '"':
            in_string = true;
            current.clear();
            break;
        case '{':
        case '[':
            ++depth;
            expecting_key = (c == '{');
            break;
        case '}':
        case ']':
            --depth;
            break;
        case ',':
            expecting_key = true;
            break;
        case ':':
            expecting_key = false;
            break;
        default:
            break;
        }
    }
    return keys;
}

// Returns the set of placeholder tokens appearing in the body; throws on
// an unterminated "{{".
std::set<std::string> placeholder_tokens(const std::string& template_id,
                                         const std::string& body) {
    std::set<std::string> tokens;
    std::size_t i = 0;
    while ((i = body.find("{{", i)) != std::string::npos) {
        std::size_t close = body.find("}}", i + 2);
        if (close == std::string::npos)
            throw ConfigError("template '" + template_id +
                              "': unterminated placeholder");
        tokens.insert(trim(body.substr(i + 2, close - i - 2)));
        i = close + 2;
    }
    return tokens;
}

std::string join_dependencies(const std::vector<std::string>& deps,
                              std::size_t cap) {
    std::ostringstream out;
    std::size_t shown = std::min(deps.size(), cap);
    for (std::size_t i = 0; i < shown; ++i) {
        if (i) out << ", ";
        out << deps[i];
    }
    if (deps.size() > cap)
        out << " (+" << deps.size() - cap << " more)";
    return out.str();
}

} // namespace

PromptTemplate make_template(const std::string& template_id,
                             const std::string& body) {
    std::set<std::string> tokens = placeholder_tokens(template_id, body);
    if (!tokens.count("name"))
        throw ConfigError("template '" + template_id +
                          "' never uses the {{name}} placeholder");

    std::string contract = extract_json_block(body);
    if (contract.empty())
        throw ConfigError("template '" + template_id +
                          "' embeds no JSON output contract");

    const std::set<std::string> required = {"package", "cryptographic_relevance",
                                            "justification"};
    std::set<std::string> keys = top_level_keys(contract);
    if (keys != required) {
        std::string found;
        for (const std::string& k : keys) {
            if (!found.empty()) found += ", ";
            found += k;
        }
        throw ConfigError(
            "template '" + template_id +
            "': output contract must name exactly package, "
            "cryptographic_relevance, justification (found: " +
            (found.empty() ? "none" : found) + ")");
    }
    return PromptTemplate{template_id, body, contract};
}

std::map<std::string, PromptTemplate> load_template_set(
    const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir))
        throw ConfigError("template directory does not exist: " + dir.string());

    std::map<std::string, PromptTemplate> templates;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".prompt")
            continue;
        std::string id = entry.path().stem().string();
        std::ifstream in(entry.path());
        if (!in)
            throw ConfigError("cannot read template file: " +
                              entry.path().string());
        std::ostringstream buf;
        buf << in.rdbuf();
        if (!templates.emplace(id, make_template(id, buf.str())).second)
            throw ConfigError("duplicate template id: " + id);
    }

    if (!templates.count("default"))
        throw ConfigError("template directory " + dir.string() +
                          " has no default.prompt");
    return templates;
}

RenderedPrompt render(const PromptTemplate& tmpl, const PackageRecord& pkg,
                      const RenderOptions& options) {
    std::string text;
    text.reserve(tmpl.body.size() + pkg.description.size());

    std::size_t i = 0;
    while (i < tmpl.body.size()) {
        std::size_t open = tmpl.body.find("{{", i);
        if (open == std::string::npos) {
            text.append(tmpl.body, i, std::string::npos);
            break;
        }
        text.append(tmpl.body, i, open - i);
        std::size_t close = tmpl.body.find("}}", open + 2);
        if (close == std::string::npos)
            throw ConfigError("template '" + tmpl.template_id +
                              "': unterminated placeholder");
        std::string token = trim(tmpl.body.substr(open + 2, close - open - 2));
        if (token == "name") {
            text += pkg.name;
        } else if (token == "description") {
            text += pkg.description.empty() ? "no description available"
                                            : pkg.description;
        } else if (token == "dependencies") {
            text += join_dependencies(pkg.dependencies, options.max_dependencies);
        } else {
            throw ConfigError("template '" + tmpl.template_id +
                              "': unknown placeholder: " + token);
        }
        i = close + 2;
    }

    return RenderedPrompt{pkg.name, tmpl.template_id, std::move(text)};
}

} // namespace cryptoscan

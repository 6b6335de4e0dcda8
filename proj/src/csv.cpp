#include "cryptoscan/csv.hpp"

#include <istream>
#include <ostream>

namespace cryptoscan {

std::string csv_escape(const std::string& field) {
    bool needs_quotes = field.find_first_of(",\"\r\n") != std::string::npos;
    if (!needs_quotes) return field;
    std::string out;
    out.reserve(field.size() + 2);
    out.push_back('"');
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out.put(',');
        out << csv_escape(fields[i]);
    }
    out.put('\n');
}

std::optional<std::vector<std::string>> read_csv_record(std::istream& in) {
    int first = in.peek();
    if (first == std::char_traits<char>::eof()) return std::nullopt;

    std::vector<std::string> fields;
    std::string field;
    bool in_quotes = false;
    bool saw_any = false;
    char c;
    while (in.get(c)) {
        saw_any = true;
        if (in_quotes) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    field.push_back('"');
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
        case '"':
            in_quotes = true;
            break;
        case ',':
            fields.push_back(std::move(field));
            field.clear();
            break;
        case '\r':
            if (in.peek() == '\n') in.get(c);
            [[fallthrough]];
        case '\n':
            fields.push_back(std::move(field));
            return fields;
        default:
            field.push_back(c);
        }
    }
    if (!saw_any) return std::nullopt;
    fields.push_back(std::move(field));
    return fields;
}

} // namespace cryptoscan

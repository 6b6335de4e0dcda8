#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace cryptoscan {

// Minimal RFC 4180 CSV support: fields containing commas, quotes, or
// newlines are quoted, embedded quotes doubled. Enough for the response
// and label artifacts; not a general-purpose parser.

std::string csv_escape(const std::string& field);

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

// Reads one record, honoring quoted fields that span lines.
// Returns std::nullopt at end of stream.
std::optional<std::vector<std::string>> read_csv_record(std::istream& in);

} // namespace cryptoscan

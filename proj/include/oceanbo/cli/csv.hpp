#pragma once

#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace oceanbo::cli {

// RFC 4180: fields holding a comma, quote, CR or LF are quoted and inner
// quotes doubled; records end in CRLF.
std::string csv_field(std::string_view field);
std::string csv_record(const std::vector<std::string>& fields);

// Strict reader: every record must have the header's field count and
// quoted fields must be well formed. Throws FormatError otherwise.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

// Shortest round-trip decimal form of a double.
std::string format_double(double v);

}  // namespace oceanbo::cli

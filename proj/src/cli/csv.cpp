#include "oceanbo/cli/csv.hpp"

#include <charconv>
#include <cmath>

#include "oceanbo/common/error.hpp"

namespace oceanbo::cli {

std::string csv_field(std::string_view f) {
  if (f.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(f);
  std::string out = "\"";
  for (char c : f) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string csv_record(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += csv_field(fields[i]);
  }
  out += "\r\n";
  return out;
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  std::size_t i = 0;
  const std::size_t n = text.size();
  auto end_record = [&]() {
    row.push_back(std::move(field));
    field.clear();
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw FormatError("CSV record " + std::to_string(rows.size() + 1) + " has " + std::to_string(row.size()) +
                        " fields, the header has " + std::to_string(rows.front().size()));
    }
    rows.push_back(std::move(row));
    row.clear();
  };
  while (i < n) {
    if (text[i] == '"') {
      ++i;
      while (true) {
        if (i >= n) throw FormatError("unterminated quoted CSV field");
        if (text[i] == '"') {
          if (i + 1 < n && text[i + 1] == '"') {
            field += '"';
            i += 2;
            continue;
          }
          ++i;
          break;
        }
        field += text[i++];
      }
      if (i < n && text[i] != ',' && text[i] != '\r' && text[i] != '\n') {
        throw FormatError("characters after a closing quote in CSV");
      }
    }
    while (i < n && text[i] != ',' && text[i] != '\r' && text[i] != '\n') {
      if (text[i] == '"') throw FormatError("bare quote inside an unquoted CSV field");
      field += text[i++];
    }
    if (i >= n) {
      end_record();
      break;
    }
    if (text[i] == ',') {
      row.push_back(std::move(field));
      field.clear();
      ++i;
    } else if (text[i] == '\r') {
      if (i + 1 >= n || text[i + 1] != '\n') throw FormatError("CR without LF in CSV");
      end_record();
      i += 2;
    } else {
      throw FormatError("bare LF record terminator in CSV");
    }
  }
  return rows;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace oceanbo::cli

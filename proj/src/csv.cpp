#include "steereval/csv.hpp"

namespace steereval {

bool CsvReader::next(std::vector<std::string>& fields) {
  fields.clear();
  int c = in_.get();
  if (c == std::istream::traits_type::eof()) return false;
  ++current_line_;
  record_line_ = current_line_;

  std::string field;
  bool in_quotes = false;
  bool any = false;
  for (;;) {
    if (c == std::istream::traits_type::eof()) {
      fields.push_back(field);
      return true;
    }
    const char ch = static_cast<char>(c);
    any = true;
    if (in_quotes) {
      if (ch == '"') {
        if (in_.peek() == '"') {
          field.push_back('"');
          in_.get();
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++current_line_;
        field.push_back(ch);
      }
    } else if (ch == '"') {
      in_quotes = true;
    } else if (ch == ',') {
      fields.push_back(field);
      field.clear();
    } else if (ch == '\r') {
      // swallow; newline handling below
    } else if (ch == '\n') {
      fields.push_back(field);
      return true;
    } else {
      field.push_back(ch);
    }
    c = in_.get();
  }
  (void)any;
}

std::string csv_escape(const std::string& field) {
  const bool needs_quotes =
      field.find_first_of(",\"\r\n") != std::string::npos;
  if (!needs_quotes) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << csv_escape(fields[i]);
  }
  out << '\n';
}

}  // namespace steereval

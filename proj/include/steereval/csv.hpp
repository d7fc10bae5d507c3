#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace steereval {

// Minimal RFC-4180 style CSV support: quoted fields, embedded commas,
// quotes and newlines. Enough for the dataset and result files.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in) : in_(in) {}

  // Reads the next record. Returns false at end of input.
  // line_number() reports the 1-based line the record started on.
  bool next(std::vector<std::string>& fields);
  std::size_t line_number() const { return record_line_; }

 private:
  std::istream& in_;
  std::size_t current_line_ = 0;
  std::size_t record_line_ = 0;
};

std::string csv_escape(const std::string& field);
void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace steereval

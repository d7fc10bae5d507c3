#pragma once

#include <stdexcept>
#include <string>

namespace steereval {

// Error categories surfaced by the harness. Codes are stable so callers
// (and tests) can branch on them instead of parsing messages.
enum class Errc {
  malformed_record,
  duplicate_item,
  unknown_item,
  unknown_tag,
  not_enough_eligible_users,
  insufficient_history,
  insufficient_pool,
  backend_unavailable,
  protocol_error,
  dimension_mismatch,
  refusal_detected,
  malformed_append,
  zero_vector,
  degenerate_labels,
  mismatched_candidates,
  next_item_missing,
  bad_k,
  degenerate_sample,
  empty_group,
  missing_results,
  unparsable_prompt,
  config_error,
  io_error,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

}  // namespace steereval

#include "steereval/errors.hpp"

namespace steereval {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::malformed_record: return "MalformedRecord";
    case Errc::duplicate_item: return "DuplicateItem";
    case Errc::unknown_item: return "UnknownItem";
    case Errc::unknown_tag: return "UnknownTag";
    case Errc::not_enough_eligible_users: return "NotEnoughEligibleUsers";
    case Errc::insufficient_history: return "InsufficientHistory";
    case Errc::insufficient_pool: return "InsufficientPool";
    case Errc::backend_unavailable: return "BackendUnavailable";
    case Errc::protocol_error: return "ProtocolError";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::refusal_detected: return "RefusalDetected";
    case Errc::malformed_append: return "MalformedAppend";
    case Errc::zero_vector: return "ZeroVector";
    case Errc::degenerate_labels: return "DegenerateLabels";
    case Errc::mismatched_candidates: return "MismatchedCandidates";
    case Errc::next_item_missing: return "NextItemMissing";
    case Errc::bad_k: return "BadK";
    case Errc::degenerate_sample: return "DegenerateSample";
    case Errc::empty_group: return "EmptyGroup";
    case Errc::missing_results: return "MissingResults";
    case Errc::unparsable_prompt: return "UnparsablePrompt";
    case Errc::config_error: return "ConfigError";
    case Errc::io_error: return "IoError";
  }
  return "UnknownError";
}

}  // namespace steereval

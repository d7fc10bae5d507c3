#pragma once

#include <string>

#include "steereval/corpus.hpp"
#include "steereval/gateway.hpp"
#include "steereval/prompts.hpp"
#include "steereval/scenario.hpp"

namespace steereval {

enum class InterventionMethod { TemplateAppend, LlmAppend, LlmRewrite };

const char* intervention_name(InterventionMethod method);
InterventionMethod intervention_from_name(const std::string& name);

struct ProfileRecord {
  std::string user_id;
  ProfileVariant variant = ProfileVariant::Paragraph;
  std::string text;
  std::string prompt_hash;
  bool refusal = false;
  std::string refusal_pattern;
};

struct SteeringAction {
  const TagSpec* tag = nullptr;
  Direction direction = Direction::Increase;
  InterventionMethod method = InterventionMethod::TemplateAppend;
  Emphasis emphasis = Emphasis::Default;  // non-default only with TemplateAppend
};

struct SteeredProfile {
  std::string base_user_id;
  std::string base_text;
  std::string text;
  bool refusal = false;
  std::string refusal_pattern;
  bool malformed_append = false;  // LlmAppend output did not start with "The user"
};

struct SteeringOptions {
  std::string generation_backend_id;
  int max_tokens = 512;
  double temperature = 0.0;
  TemplateOptions templates;
};

// Renders the profile-generation prompt over the watch history and returns
// the trimmed completion. Refusals are flagged on the record, not thrown.
ProfileRecord generate_profile(const UserHistory& history, ProfileVariant variant,
                               const Catalog& catalog, Gateway& gateway,
                               const SteeringOptions& options);

// Applies one steering intervention to a non-refused base profile.
// TemplateAppend is pure; the LLM methods call the gateway and flag
// refusals / malformed appends on the returned record.
SteeredProfile steer_profile(const ProfileRecord& base, const SteeringAction& action,
                             Gateway& gateway, const SteeringOptions& options);

// One trimmed sentence ending in exactly one sentence-final mark.
bool is_single_sentence(const std::string& text);

}  // namespace steereval

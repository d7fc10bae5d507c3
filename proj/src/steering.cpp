#include "steereval/steering.hpp"

#include <cctype>

#include "steereval/errors.hpp"
#include "steereval/hash.hpp"
#include "steereval/strings.hpp"

namespace steereval {

const char* intervention_name(InterventionMethod method) {
  switch (method) {
    case InterventionMethod::TemplateAppend: return "template";
    case InterventionMethod::LlmAppend: return "llm_append";
    case InterventionMethod::LlmRewrite: return "llm_rewrite";
  }
  return "template";
}

InterventionMethod intervention_from_name(const std::string& name) {
  if (name == "template") return InterventionMethod::TemplateAppend;
  if (name == "llm_append") return InterventionMethod::LlmAppend;
  if (name == "llm_rewrite") return InterventionMethod::LlmRewrite;
  throw Error(Errc::config_error, "unknown intervention '" + name + "'");
}

bool is_single_sentence(const std::string& text) {
  const std::string trimmed = trim(text);
  if (trimmed.empty()) return false;
  const char last = trimmed.back();
  if (last != '.' && last != '!' && last != '?') return false;
  for (std::size_t i = 0; i + 1 < trimmed.size(); ++i) {
    const char c = trimmed[i];
    if (c == '!' || c == '?') return false;
    // A period mid-text only counts as a boundary when followed by space.
    if (c == '.' && std::isspace(static_cast<unsigned char>(trimmed[i + 1]))) {
      return false;
    }
  }
  return true;
}

ProfileRecord generate_profile(const UserHistory& history, ProfileVariant variant,
                               const Catalog& catalog, Gateway& gateway,
                               const SteeringOptions& options) {
  if (history.watched.empty()) {
    throw Error(Errc::insufficient_history,
                "cannot generate a profile from an empty watch history");
  }
  const std::string prompt = render_profile_prompt(history, variant, catalog);
  GenRequest request{options.generation_backend_id, prompt, options.max_tokens,
                     options.temperature};
  const GenResponse response = gateway.generate(request);

  ProfileRecord record;
  record.user_id = history.user_id;
  record.variant = variant;
  record.text = trim(response.text);
  record.prompt_hash = hash_hex(stable_hash({prompt}));
  record.refusal = response.refusal;
  record.refusal_pattern = response.matched_refusal_pattern;
  return record;
}

SteeredProfile steer_profile(const ProfileRecord& base, const SteeringAction& action,
                             Gateway& gateway, const SteeringOptions& options) {
  if (base.refusal) {
    throw Error(Errc::refusal_detected, "base profile is a refusal");
  }
  if (action.tag == nullptr) {
    throw Error(Errc::config_error, "steering action has no tag");
  }
  if (action.tag->excluded) {
    throw Error(Errc::unknown_tag, "tag '" + action.tag->tag_id + "' is excluded");
  }
  if (action.emphasis != Emphasis::Default &&
      action.method != InterventionMethod::TemplateAppend) {
    throw Error(Errc::config_error,
                "emphasis variants only apply to the template intervention");
  }

  SteeredProfile steered;
  steered.base_user_id = base.user_id;
  steered.base_text = base.text;

  if (action.method == InterventionMethod::TemplateAppend) {
    steered.text = base.text + " " +
                   render_template(*action.tag, action.direction, action.emphasis,
                                   options.templates);
    return steered;
  }

  if (action.method == InterventionMethod::LlmAppend) {
    const std::string prompt =
        render_llm_append_prompt(*action.tag, action.direction, options.templates);
    GenRequest request{options.generation_backend_id, prompt, options.max_tokens,
                       options.temperature};
    GenResponse response = gateway.generate(request);
    std::string sentence = trim(response.text);
    if (!response.refusal && sentence.rfind("The user", 0) != 0) {
      // One fresh retry, then record the malformed output as-is.
      response = gateway.generate_fresh(request);
      sentence = trim(response.text);
      steered.malformed_append = sentence.rfind("The user", 0) != 0;
    }
    steered.refusal = response.refusal;
    steered.refusal_pattern = response.matched_refusal_pattern;
    steered.text = base.text + " " + sentence;
    return steered;
  }

  const std::string prompt =
      render_llm_rewrite_prompt(base.text, *action.tag, action.direction);
  GenRequest request{options.generation_backend_id, prompt, options.max_tokens,
                     options.temperature};
  const GenResponse response = gateway.generate(request);
  steered.refusal = response.refusal;
  steered.refusal_pattern = response.matched_refusal_pattern;
  steered.text = trim(response.text);
  return steered;
}

}  // namespace steereval

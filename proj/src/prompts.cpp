#include "steereval/prompts.hpp"

#include <fmt/core.h>

#include "steereval/errors.hpp"
#include "steereval/strings.hpp"

namespace steereval {

const char* profile_variant_name(ProfileVariant variant) {
  return variant == ProfileVariant::Paragraph ? "paragraph" : "sentence";
}

ProfileVariant profile_variant_from_name(const std::string& name) {
  if (name == "paragraph") return ProfileVariant::Paragraph;
  if (name == "sentence") return ProfileVariant::Sentence;
  throw Error(Errc::config_error, "unknown profile variant '" + name + "'");
}

const char* emphasis_name(Emphasis emphasis) {
  switch (emphasis) {
    case Emphasis::Default: return "default";
    case Emphasis::Stronger: return "stronger";
    case Emphasis::Weaker: return "weaker";
  }
  return "default";
}

Emphasis emphasis_from_name(const std::string& name) {
  if (name == "default") return Emphasis::Default;
  if (name == "stronger") return Emphasis::Stronger;
  if (name == "weaker") return Emphasis::Weaker;
  throw Error(Errc::config_error, "unknown emphasis '" + name + "'");
}

const char kProfileParagraphHeader[] =
    "Given the user's previously watched and rated movies, write in a single "
    "paragraph (5-6 sentences) summarizing their taste. Be definitive (no "
    "hedging). Do NOT mention tags, genres, metadata, reviews, or any lack "
    "thereof. Infer tone, pacing, themes, and style.";

const char kProfileSentenceHeader[] =
    "Given the user's previously watched and rated movies, write exactly ONE "
    "concise English sentence (20-35 words) summarizing their taste. Be "
    "definitive (no hedging). Do NOT mention tags, genres, metadata, reviews, "
    "or any lack thereof. Infer tone, pacing, themes, and style.";

const char kAppendPromptHeader[] =
    "You are helping a user update how they describe their movie preferences "
    "by rephrasing their changed preferences into a single sentence. This "
    "sentence will be appended to their original description.";

const char kRewritePromptHeader[] = "Modify the user profile to show that ";

const char kScorePromptHeader[] =
    "Task: Predict the user's rating for a movie on a scale from 0.0 to 5.0";

namespace {

// Emphasis word per (direction, level): the strict poles are *only* / *no*,
// the softened ones *more* / *less*.
const char* emphasis_word(Direction direction, Emphasis emphasis) {
  if (emphasis == Emphasis::Stronger) {
    return direction == Direction::Increase ? "only" : "no";
  }
  return direction == Direction::Increase ? "more" : "less";
}

}  // namespace

std::string render_template(const TagSpec& tag, Direction direction,
                            Emphasis emphasis, const TemplateOptions& options) {
  const std::string& c = tag.clause;
  if (tag.group == TagGroup::Genre) {
    if (emphasis != Emphasis::Default) {
      return fmt::format("Please show the user movies *{}* {} movies.",
                         emphasis_word(direction, emphasis), c);
    }
    if (direction == Direction::Increase) {
      return fmt::format("Please show the user movies that satisfy: {}.", c);
    }
    return fmt::format("The user *does not want* to see {} movies.", c);
  }
  if (emphasis != Emphasis::Default) {
    return fmt::format("The user wants to see *{}* movies where {}.",
                       emphasis_word(direction, emphasis), c);
  }
  if (direction == Direction::Increase) {
    return fmt::format("The user *wants* to see movies where {}.", c);
  }
  if (options.appendix_trigger_decrease) {
    return fmt::format("The user *does not want* movies where {}.", c);
  }
  return fmt::format("The user *does not want* to see movies where {}.", c);
}

std::string item_blurb_text(const Item& item) {
  return fmt::format("Movie Title: {}\nMovie Description: {}", item.title,
                     item.description);
}

std::string render_profile_prompt(const UserHistory& history, ProfileVariant variant,
                                  const Catalog& catalog) {
  std::string prompt = variant == ProfileVariant::Paragraph
                           ? kProfileParagraphHeader
                           : kProfileSentenceHeader;
  prompt += "\n\nUser watch history:";
  for (const auto& [item_id, rating] : history.watched) {
    const Item& item = catalog.at(item_id);
    prompt += fmt::format("\n\n{}\nUser Rating: {:.1f}", item_blurb_text(item), rating);
  }
  return prompt;
}

std::string render_llm_append_prompt(const TagSpec& tag, Direction direction,
                                     const TemplateOptions& options) {
  std::string prompt = kAppendPromptHeader;
  prompt +=
      "\nGuidelines:"
      "\n- Write exactly *one* sentence. The sentence must start with \"The user\"."
      "\n- Do not include any \"REQUEST\" in the response. Only give the rephrased "
      "sentence."
      "\n- Use natural language."
      "\n\nFor example:"
      "\nREQUEST: The user *does not want* to see movies where [the dog dies]."
      "\nThe user *does not want* to see any movies where a dog dies."
      "\n\nREQUEST: ";
  prompt += render_template(tag, direction, Emphasis::Default, options);
  return prompt;
}

// The rewrite instruction embeds a "the user ..." description of the action.
// Only the trigger/decrease wording is attested; the other three cells are
// the same sentence frame with want/does-not-want and the group's noun
// phrase.
static std::string steering_description(const TagSpec& tag, Direction direction) {
  const std::string& c = tag.clause;
  const char* verb = direction == Direction::Increase ? "*wants*"
                                                      : "*does not want*";
  if (tag.group == TagGroup::Genre) {
    return fmt::format("the user {} to see {} movies", verb, c);
  }
  return fmt::format("the user {} to see movies where {}", verb, c);
}

std::string render_llm_rewrite_prompt(const std::string& original_profile,
                                      const TagSpec& tag, Direction direction) {
  return fmt::format(
      "{}{}.\nKeep all the profile as similar as possible for all other "
      "preferences.\n\nORIGINAL PROFILE: {}\nUPDATED PROFILE:",
      kRewritePromptHeader, steering_description(tag, direction), original_profile);
}

std::string render_score_prompt(const std::string& profile_text,
                                const std::string& blurb_text) {
  return fmt::format(
      "{}\n"
      "Guidelines:\n"
      "- 0.0: Completely irrelevant.\n"
      "- 5.0: Perfect match for ALL user interests.\n"
      "- Use decimal precision as necessary (e.g. 1.4, 3.7, 4.2) to capture "
      "partial matches.\n"
      "- Be strict. Do not give high scores for partial matches.\n"
      "Output format: A single float number only.\n"
      "\n"
      "USER PROFILE:\n"
      "{}\n"
      "CANDIDATE MOVIE:\n"
      "{}\n"
      "SCORE:",
      kScorePromptHeader, profile_text, blurb_text);
}

}  // namespace steereval

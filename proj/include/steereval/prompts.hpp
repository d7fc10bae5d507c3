#pragma once

#include <string>
#include <vector>

#include "steereval/corpus.hpp"
#include "steereval/scenario.hpp"

namespace steereval {

// Every prompt and template the harness sends to a model lives here so the
// texts stay versioned in one place. The renderers are pure functions.

enum class ProfileVariant { Paragraph, Sentence };
enum class Emphasis { Default, Stronger, Weaker };

const char* profile_variant_name(ProfileVariant variant);
ProfileVariant profile_variant_from_name(const std::string& name);
const char* emphasis_name(Emphasis emphasis);
Emphasis emphasis_from_name(const std::string& name);

struct TemplateOptions {
  // Alternate trigger/decrease wording ("does not want movies where ...");
  // the default is the form used for the main experiments.
  bool appendix_trigger_decrease = false;
};

// Steering template sentence for (group, direction, emphasis) with {clause}
// substituted verbatim. Bit-exact; covered by a golden-file test.
std::string render_template(const TagSpec& tag, Direction direction,
                            Emphasis emphasis,
                            const TemplateOptions& options = {});

// "Movie Title: ...\nMovie Description: ..." metadata block.
std::string item_blurb_text(const Item& item);

// Profile-generation prompt over the watch history, paragraph or sentence.
std::string render_profile_prompt(const UserHistory& history, ProfileVariant variant,
                                  const Catalog& catalog);

// Rephrase-into-one-appended-sentence prompt; the REQUEST line carries the
// default template sentence for the action.
std::string render_llm_append_prompt(const TagSpec& tag, Direction direction,
                                     const TemplateOptions& options = {});

// Full-profile rewrite prompt.
std::string render_llm_rewrite_prompt(const std::string& original_profile,
                                      const TagSpec& tag, Direction direction);

// Pointwise score-prediction prompt for one candidate blurb.
std::string render_score_prompt(const std::string& profile_text,
                                const std::string& blurb_text);

// Prefixes the mock backend keys on to recognise each prompt kind.
extern const char kProfileParagraphHeader[];
extern const char kProfileSentenceHeader[];
extern const char kAppendPromptHeader[];
extern const char kRewritePromptHeader[];
extern const char kScorePromptHeader[];

}  // namespace steereval

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace storyweave {

enum class Role { writer, assistant };

std::string_view role_name(Role role);
Role parse_role(std::string_view name);

struct Turn {
  Role role = Role::writer;
  std::string text;

  bool operator==(const Turn&) const = default;
};

// The placeholders a final-turn pattern may use, spelled {NAME}.
inline constexpr std::string_view kSlotStory = "STORY";
inline constexpr std::string_view kSlotSelection = "SELECTION";
inline constexpr std::string_view kSlotWords = "N_WORDS";
inline constexpr std::string_view kSlotTone = "TONE";
inline constexpr std::string_view kSlotInstruction = "INSTRUCTION";

bool is_known_slot(std::string_view name);

using SlotBinding = std::map<std::string, std::string, std::less<>>;

// A staged few-shot conversation plus the pattern for the writer turn that
// carries the user's request. `flat_pattern`, when present, replaces the
// final pattern in the flat (non-dialog) serialization.
struct TaskTemplate {
  std::string name;
  std::vector<Turn> staged_context;
  std::string final_turn_pattern;
  std::optional<std::string> flat_pattern;
  std::set<std::string, std::less<>> required_slots;

  bool operator==(const TaskTemplate&) const = default;
};

struct ConversationContext {
  std::vector<Turn> turns;

  bool operator==(const ConversationContext&) const = default;
};

// Parses the template file grammar:
//
//   # comment
//   WRITER:
//   <turn body, any number of lines>
//   ASSISTANT:
//   <turn body>
//   FINAL:
//   <final-turn pattern with {STORY}-style placeholders>
//   FLAT:
//   <optional flat-format pattern>
//
// Marker lines may carry the first body line inline ("WRITER: text").
// The newline ending a body's last line is not part of the body. Throws
// Error(parse) with the offending line number.
TaskTemplate load_template(std::string_view source, std::string name);
TaskTemplate load_template_file(const std::filesystem::path& path);

// Inverse of load_template for bodies that do not start a line with '#' or
// a marker.
std::string print_template(const TaskTemplate& tmpl);

// Placeholder names in order of first appearance.
std::vector<std::string> placeholders_in(std::string_view pattern);

// Single-pass literal substitution. Throws Error(binding) naming every
// missing and extra slot.
std::string substitute(std::string_view pattern,
                       const std::set<std::string, std::less<>>& required,
                       const SlotBinding& binding);

Turn render_final_turn(const TaskTemplate& tmpl, const SlotBinding& binding);

ConversationContext assemble_dialog_prompt(const TaskTemplate& tmpl,
                                           Turn final_turn);

// Each staged turn on its own line followed by the rendered final pattern;
// no trailing newline.
std::string serialize_flat(const TaskTemplate& tmpl,
                           const SlotBinding& binding);

}  // namespace storyweave

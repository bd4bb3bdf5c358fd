#include "storyweave/prompt.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "storyweave/error.hpp"
#include "storyweave/utf8.hpp"

namespace storyweave {

namespace {

enum class Section { none, writer, assistant, final_pattern, flat_pattern };

struct Marker {
  std::string_view word;
  Section section;
};

constexpr Marker kMarkers[] = {
    {"WRITER", Section::writer},
    {"ASSISTANT", Section::assistant},
    {"FINAL", Section::final_pattern},
    {"FLAT", Section::flat_pattern},
};

bool is_word_char(char c) {
  return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
         (c >= '0' && c <= '9') || c == '_';
}

[[noreturn]] void parse_fail(std::size_t line, const std::string& what) {
  throw Error(Errc::parse, "line " + std::to_string(line) + ": " + what);
}

// Recognizes "WORD:" at line start. Returns Section::none for ordinary
// text; a marker word not followed by ':' is a malformed marker.
Section match_marker(std::string_view line, std::size_t line_no,
                     std::string_view& rest) {
  for (const auto& marker : kMarkers) {
    if (!line.starts_with(marker.word)) continue;
    const std::string_view after = line.substr(marker.word.size());
    if (!after.empty() && after.front() == ':') {
      rest = after.substr(1);
      if (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
      return marker.section;
    }
    if (after.empty() || !is_word_char(after.front())) {
      parse_fail(line_no, "malformed turn marker '" + std::string(line) +
                              "' (expected '" + std::string(marker.word) +
                              ":')");
    }
  }
  return Section::none;
}

std::string join_lines(const std::vector<std::string_view>& lines) {
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i > 0) out += '\n';
    out += lines[i];
  }
  return out;
}

void check_placeholders(std::string_view pattern, std::size_t line_no) {
  for (const auto& name : placeholders_in(pattern)) {
    if (!is_known_slot(name)) {
      parse_fail(line_no, "unknown placeholder {" + name + "}");
    }
  }
}

// Length of a "{NAME}" token starting at `pos`, or 0.
std::size_t placeholder_length(std::string_view text, std::size_t pos) {
  if (text[pos] != '{') return 0;
  std::size_t end = pos + 1;
  while (end < text.size() &&
         ((text[end] >= 'A' && text[end] <= 'Z') || text[end] == '_')) {
    ++end;
  }
  if (end == pos + 1 || end >= text.size() || text[end] != '}') return 0;
  return end - pos + 1;
}

}  // namespace

std::string_view role_name(Role role) {
  return role == Role::writer ? "writer" : "assistant";
}

Role parse_role(std::string_view name) {
  if (name == "writer") return Role::writer;
  if (name == "assistant") return Role::assistant;
  throw Error(Errc::invalid_argument, "unknown role '" + std::string(name) + "'");
}

bool is_known_slot(std::string_view name) {
  return name == kSlotStory || name == kSlotSelection || name == kSlotWords ||
         name == kSlotTone || name == kSlotInstruction;
}

std::vector<std::string> placeholders_in(std::string_view pattern) {
  std::vector<std::string> names;
  for (std::size_t pos = 0; pos < pattern.size();) {
    const std::size_t len = placeholder_length(pattern, pos);
    if (len == 0) {
      ++pos;
      continue;
    }
    std::string name(pattern.substr(pos + 1, len - 2));
    if (std::find(names.begin(), names.end(), name) == names.end()) {
      names.push_back(std::move(name));
    }
    pos += len;
  }
  return names;
}

TaskTemplate load_template(std::string_view source, std::string name) {
  utf8::validate(source);

  TaskTemplate tmpl;
  tmpl.name = std::move(name);

  Section section = Section::none;
  std::size_t section_line = 0;
  std::vector<std::string_view> body;
  bool have_final = false;

  const auto finish = [&]() {
    if (section == Section::none) return;
    std::string text = join_lines(body);
    if (text.empty()) parse_fail(section_line, "empty section body");
    switch (section) {
      case Section::writer:
      case Section::assistant: {
        const Role role =
            section == Section::writer ? Role::writer : Role::assistant;
        const Role expected = tmpl.staged_context.empty() ||
                                      tmpl.staged_context.back().role ==
                                          Role::assistant
                                  ? Role::writer
                                  : Role::assistant;
        if (role != expected) {
          parse_fail(section_line,
                     "staged turns must alternate starting with WRITER; got " +
                         std::string(role_name(role)) + " where " +
                         std::string(role_name(expected)) + " was expected");
        }
        tmpl.staged_context.push_back({role, std::move(text)});
        break;
      }
      case Section::final_pattern:
        check_placeholders(text, section_line);
        tmpl.final_turn_pattern = std::move(text);
        break;
      case Section::flat_pattern:
        check_placeholders(text, section_line);
        tmpl.flat_pattern = std::move(text);
        break;
      case Section::none:
        break;
    }
    body.clear();
  };

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < source.size()) {
    ++line_no;
    const std::size_t eol = source.find('\n', pos);
    const std::string_view line = source.substr(
        pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    pos = eol == std::string_view::npos ? source.size() : eol + 1;

    if (line.starts_with('#')) continue;

    std::string_view rest;
    const Section marker = match_marker(line, line_no, rest);
    if (marker == Section::none) {
      if (section == Section::none) {
        if (!utf8::trim(line).empty()) {
          parse_fail(line_no, "text outside of any turn");
        }
        continue;
      }
      body.push_back(line);
      continue;
    }

    finish();
    if ((marker == Section::writer || marker == Section::assistant) &&
        have_final) {
      parse_fail(line_no, "turn marker after FINAL:");
    }
    if (marker == Section::final_pattern) {
      if (have_final) parse_fail(line_no, "duplicate FINAL:");
      if (!tmpl.staged_context.empty() &&
          tmpl.staged_context.back().role != Role::assistant) {
        parse_fail(line_no, "staged context must end with an ASSISTANT turn");
      }
      have_final = true;
    }
    if (marker == Section::flat_pattern) {
      if (!have_final) parse_fail(line_no, "FLAT: must follow FINAL:");
      if (tmpl.flat_pattern) parse_fail(line_no, "duplicate FLAT:");
    }
    section = marker;
    section_line = line_no;
    if (!rest.empty()) body.push_back(rest);
  }
  finish();

  if (!have_final) parse_fail(line_no, "missing FINAL: section");

  for (auto& slot : placeholders_in(tmpl.final_turn_pattern)) {
    tmpl.required_slots.insert(std::move(slot));
  }
  if (tmpl.flat_pattern) {
    for (const auto& slot : placeholders_in(*tmpl.flat_pattern)) {
      if (!tmpl.required_slots.contains(slot)) {
        throw Error(Errc::parse, "FLAT: placeholder {" + slot +
                                     "} does not appear in FINAL:");
      }
    }
  }
  return tmpl;
}

TaskTemplate load_template_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(Errc::not_found, "cannot open template " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return load_template(buffer.str(), path.stem().string());
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

std::string print_template(const TaskTemplate& tmpl) {
  std::string out;
  for (const auto& turn : tmpl.staged_context) {
    out += turn.role == Role::writer ? "WRITER:\n" : "ASSISTANT:\n";
    out += turn.text;
    out += '\n';
  }
  out += "FINAL:\n";
  out += tmpl.final_turn_pattern;
  out += '\n';
  if (tmpl.flat_pattern) {
    out += "FLAT:\n";
    out += *tmpl.flat_pattern;
    out += '\n';
  }
  return out;
}

std::string substitute(std::string_view pattern,
                       const std::set<std::string, std::less<>>& required,
                       const SlotBinding& binding) {
  std::string missing;
  std::string extra;
  for (const auto& slot : required) {
    if (!binding.contains(slot)) missing += (missing.empty() ? "" : ", ") + slot;
  }
  for (const auto& [slot, value] : binding) {
    if (!required.contains(slot)) extra += (extra.empty() ? "" : ", ") + slot;
  }
  if (!missing.empty() || !extra.empty()) {
    std::string message = "slot binding mismatch";
    if (!missing.empty()) message += "; missing: " + missing;
    if (!extra.empty()) message += "; unexpected: " + extra;
    throw Error(Errc::binding, message);
  }

  std::string out;
  out.reserve(pattern.size());
  for (std::size_t pos = 0; pos < pattern.size();) {
    const std::size_t len = placeholder_length(pattern, pos);
    if (len > 0) {
      const auto it = binding.find(pattern.substr(pos + 1, len - 2));
      if (it != binding.end()) {
        out += it->second;
        pos += len;
        continue;
      }
    }
    out += pattern[pos++];
  }
  return out;
}

Turn render_final_turn(const TaskTemplate& tmpl, const SlotBinding& binding) {
  return {Role::writer,
          substitute(tmpl.final_turn_pattern, tmpl.required_slots, binding)};
}

ConversationContext assemble_dialog_prompt(const TaskTemplate& tmpl,
                                           Turn final_turn) {
  if (final_turn.role != Role::writer) {
    throw Error(Errc::invalid_argument,
                "the final turn of a dialog prompt must be a writer turn");
  }
  ConversationContext context{tmpl.staged_context};
  context.turns.push_back(std::move(final_turn));
  return context;
}

std::string serialize_flat(const TaskTemplate& tmpl,
                           const SlotBinding& binding) {
  std::string out;
  for (const auto& turn : tmpl.staged_context) {
    out += turn.text;
    out += '\n';
  }
  out += substitute(tmpl.flat_pattern.value_or(tmpl.final_turn_pattern),
                    tmpl.required_slots, binding);
  return out;
}

}  // namespace storyweave

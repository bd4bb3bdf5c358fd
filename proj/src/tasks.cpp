#include "storyweave/tasks.hpp"

#include <vector>

#include "storyweave/error.hpp"
#include "storyweave/utf8.hpp"

namespace storyweave {

namespace {

// Slots each task can fill; a template asking for anything else is rejected
// at load time.
std::set<std::string, std::less<>> supplied_slots(TaskKind kind) {
  switch (kind) {
    case TaskKind::continuation:
      return {std::string(kSlotStory)};
    case TaskKind::infill:
      return {std::string(kSlotStory), std::string(kSlotWords)};
    case TaskKind::elaborate:
      return {std::string(kSlotStory), std::string(kSlotSelection)};
    case TaskKind::rewrite:
      return {std::string(kSlotStory), std::string(kSlotTone)};
    case TaskKind::custom:
      return {std::string(kSlotStory), std::string(kSlotInstruction),
              std::string(kSlotSelection)};
  }
  return {};
}

void require_span(const StoryDocument& doc, Selection sel,
                  std::string_view task) {
  doc.check_selection(sel);
  if (sel.is_caret()) {
    throw Error(Errc::precondition,
                std::string(task) + " needs a non-empty selection");
  }
}

bool is_terminator(char32_t cp) { return cp == '.' || cp == '!' || cp == '?'; }

std::vector<char32_t> code_points(std::string_view text) {
  std::vector<char32_t> cps;
  cps.reserve(text.size());
  for (std::size_t pos = 0; pos < text.size();) {
    cps.push_back(utf8::decode(text, pos));
  }
  return cps;
}

}  // namespace

std::string_view task_name(TaskKind kind) {
  switch (kind) {
    case TaskKind::continuation: return "continuation";
    case TaskKind::infill: return "infill";
    case TaskKind::elaborate: return "elaborate";
    case TaskKind::rewrite: return "rewrite";
    case TaskKind::custom: return "custom";
  }
  return "unknown";
}

TaskKind parse_task(std::string_view name) {
  for (const TaskKind kind : kAllTaskKinds) {
    if (task_name(kind) == name) return kind;
  }
  throw Error(Errc::invalid_argument,
              "unknown task kind '" + std::string(name) + "'");
}

const std::string& PromptRequest::story() const {
  static const std::string kEmpty;
  const auto it = binding.find(kSlotStory);
  return it == binding.end() ? kEmpty : it->second;
}

std::string blank_out(const StoryDocument& doc, Selection sel) {
  require_span(doc, sel, "infill");
  const std::string text = doc.full_text();
  const std::size_t from = utf8::byte_offset(text, sel.start);
  const std::size_t to = utf8::byte_offset(text, sel.end);
  const std::string_view view(text);
  const std::string_view left = utf8::trim_right(view.substr(0, from));
  const std::string_view right = utf8::trim_left(view.substr(to));
  if (left.find(kBlankMarker) != std::string_view::npos ||
      right.find(kBlankMarker) != std::string_view::npos) {
    throw Error(Errc::precondition,
                "story already contains the blank marker '" +
                    std::string(kBlankMarker) + "'");
  }
  std::string out;
  out.reserve(left.size() + right.size() + kBlankMarker.size() + 2);
  out += left;
  out += ' ';
  out += kBlankMarker;
  out += ' ';
  out += right;
  return out;
}

std::size_t sentence_end_after(const StoryDocument& doc, Selection sel) {
  doc.check_selection(sel);
  const std::vector<char32_t> cps = code_points(doc.full_text());
  std::size_t from = sel.is_caret() ? sel.start : sel.end - 1;
  while (from > sel.start && utf8::is_space(cps[from])) --from;
  for (std::size_t i = from; i < cps.size(); ++i) {
    if (!is_terminator(cps[i])) continue;
    if (i + 1 == cps.size() || utf8::is_space(cps[i + 1])) return i + 1;
  }
  return cps.size();
}

TaskRegistry TaskRegistry::load_directory(const std::filesystem::path& dir) {
  std::map<TaskKind, TaskTemplate> templates;
  for (const TaskKind kind : kAllTaskKinds) {
    templates.emplace(kind, load_template_file(
                                dir / (std::string(task_name(kind)) + ".tmpl")));
  }
  return TaskRegistry(std::move(templates));
}

TaskRegistry::TaskRegistry(std::map<TaskKind, TaskTemplate> templates)
    : templates_(std::move(templates)) {
  for (const TaskKind kind : kAllTaskKinds) {
    const auto it = templates_.find(kind);
    if (it == templates_.end()) {
      throw Error(Errc::not_found, "no template registered for task '" +
                                       std::string(task_name(kind)) + "'");
    }
    const auto supplied = supplied_slots(kind);
    for (const auto& slot : it->second.required_slots) {
      if (!supplied.contains(slot)) {
        throw Error(Errc::parse, "template '" + it->second.name +
                                     "' uses {" + slot + "}, which the " +
                                     std::string(task_name(kind)) +
                                     " task cannot fill");
      }
    }
  }
}

const TaskTemplate& TaskRegistry::get(TaskKind kind) const {
  return templates_.at(kind);
}

PromptRequest TaskRegistry::bind(TaskKind kind, const StoryDocument& doc,
                                 SlotBinding available,
                                 std::string request_id) const {
  const TaskTemplate& tmpl = get(kind);
  SlotBinding binding;
  for (auto& [slot, value] : available) {
    if (tmpl.required_slots.contains(slot)) binding.emplace(slot, value);
  }

  PromptRequest req;
  req.request_id = std::move(request_id);
  req.kind = kind;
  req.doc_version = doc.version();
  req.context = assemble_dialog_prompt(tmpl, render_final_turn(tmpl, binding));
  req.flat_prompt = serialize_flat(tmpl, binding);
  req.binding = std::move(binding);
  return req;
}

PromptRequest TaskRegistry::continuation(const StoryDocument& doc,
                                         std::string request_id) const {
  if (doc.empty()) {
    throw Error(Errc::precondition, "cannot continue an empty story");
  }
  return bind(TaskKind::continuation, doc,
              {{std::string(kSlotStory), doc.full_text()}},
              std::move(request_id));
}

PromptRequest TaskRegistry::infill(const StoryDocument& doc, Selection sel,
                                   std::optional<int> n_words,
                                   std::string request_id) const {
  std::string story = blank_out(doc, sel);
  const int words =
      n_words ? *n_words : static_cast<int>(word_count(doc.selected_text(sel)));
  if (words < 1) {
    throw Error(Errc::precondition,
                n_words ? "n_words must be at least 1"
                        : "selection has no words; pass n_words explicitly");
  }
  PromptRequest req = bind(TaskKind::infill, doc,
                           {{std::string(kSlotStory), std::move(story)},
                            {std::string(kSlotWords), std::to_string(words)}},
                           std::move(request_id));
  req.target = sel;
  req.n_words = words;
  return req;
}

PromptRequest TaskRegistry::elaborate(const StoryDocument& doc, Selection sel,
                                      std::string request_id) const {
  require_span(doc, sel, "elaborate");
  PromptRequest req =
      bind(TaskKind::elaborate, doc,
           {{std::string(kSlotStory), doc.full_text()},
            {std::string(kSlotSelection), doc.selected_text(sel)}},
           std::move(request_id));
  req.target = sel;
  return req;
}

PromptRequest TaskRegistry::rewrite(const StoryDocument& doc,
                                    std::optional<Selection> sel,
                                    std::string_view tone,
                                    std::string request_id) const {
  if (utf8::trim(tone).empty()) {
    throw Error(Errc::precondition, "rewrite needs a non-empty tone");
  }
  if (sel) require_span(doc, *sel, "rewrite");
  std::string text = sel ? doc.selected_text(*sel) : doc.full_text();
  if (text.empty()) {
    throw Error(Errc::precondition, "nothing to rewrite in an empty story");
  }
  PromptRequest req = bind(TaskKind::rewrite, doc,
                           {{std::string(kSlotStory), std::move(text)},
                            {std::string(kSlotTone), std::string(tone)}},
                           std::move(request_id));
  req.target = sel;
  req.tone = std::string(tone);
  return req;
}

PromptRequest TaskRegistry::custom(const StoryDocument& doc,
                                   std::string_view instruction,
                                   std::string request_id,
                                   std::optional<Selection> target) const {
  if (utf8::trim(instruction).empty()) {
    throw Error(Errc::precondition, "custom request needs an instruction");
  }
  SlotBinding available{
      {std::string(kSlotStory), doc.full_text()},
      {std::string(kSlotInstruction), std::string(instruction)}};
  if (target) {
    available.emplace(std::string(kSlotSelection), doc.selected_text(*target));
  }
  PromptRequest req = bind(TaskKind::custom, doc, std::move(available),
                           std::move(request_id));
  req.target = target;
  req.instruction = std::string(instruction);
  return req;
}

PromptRequest TaskRegistry::build(TaskKind kind, const StoryDocument& doc,
                                  std::optional<Selection> sel,
                                  const TaskOptions& options,
                                  std::string request_id) const {
  const auto need_selection = [&]() -> Selection {
    if (!sel) {
      throw Error(Errc::precondition, std::string(task_name(kind)) +
                                          " needs a selection");
    }
    return *sel;
  };
  switch (kind) {
    case TaskKind::continuation:
      if (sel && !sel->is_caret()) {
        throw Error(Errc::precondition,
                    "continuation does not take a selection");
      }
      return continuation(doc, std::move(request_id));
    case TaskKind::infill:
      return infill(doc, need_selection(), options.n_words,
                    std::move(request_id));
    case TaskKind::elaborate:
      return elaborate(doc, need_selection(), std::move(request_id));
    case TaskKind::rewrite:
      return rewrite(doc, sel, options.tone.value_or(""),
                     std::move(request_id));
    case TaskKind::custom:
      return custom(doc, options.instruction.value_or(""),
                    std::move(request_id), sel);
  }
  throw Error(Errc::invalid_argument, "unknown task kind");
}

StoryDocument apply_candidate(const StoryDocument& doc,
                              const PromptRequest& req,
                              const Candidate& candidate) {
  if (req.doc_version != doc.version()) {
    throw Error(Errc::stale_request,
                "request " + req.request_id + " was built against version " +
                    std::to_string(req.doc_version) +
                    " but the document is at version " +
                    std::to_string(doc.version()),
                doc.version());
  }
  if (candidate.text.empty()) {
    throw Error(Errc::precondition, "cannot apply an empty candidate");
  }
  const Provenance provenance = Provenance::model(req.request_id);
  const auto target = [&]() {
    if (!req.target) {
      throw Error(Errc::invalid_argument,
                  std::string(task_name(req.kind)) + " request has no target");
    }
    return *req.target;
  };
  const auto insert_at = [&](std::size_t at) {
    const std::string text = doc.full_text();
    const std::string_view before =
        std::string_view(text).substr(0, utf8::byte_offset(text, at));
    const bool separate = !before.empty() && !utf8::ends_with_space(before);
    return doc.replace_range(Selection::caret(at),
                             separate ? " " + candidate.text : candidate.text,
                             provenance);
  };

  switch (req.kind) {
    case TaskKind::continuation:
    case TaskKind::custom:
      return insert_at(doc.length());
    case TaskKind::infill:
      return doc.replace_range(target(), candidate.text, provenance);
    case TaskKind::rewrite:
      return doc.replace_range(req.target.value_or(Selection{0, doc.length()}),
                               candidate.text, provenance);
    case TaskKind::elaborate:
      return insert_at(sentence_end_after(doc, target()));
  }
  throw Error(Errc::invalid_argument, "unknown task kind");
}

}  // namespace storyweave

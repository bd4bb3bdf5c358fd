#include "storyweave/session.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

#include "storyweave/error.hpp"
#include "storyweave/json_io.hpp"

namespace storyweave {

using nlohmann::json;

namespace {

constexpr std::string_view kSessionFormat = "storyweave-session";
constexpr int kSessionFormatVersion = 1;

bool is_safe_id(std::string_view id) {
  if (id.empty() || id.size() > 128) return false;
  for (const char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '-' || c == '_';
    if (!ok) return false;
  }
  return true;
}

void write_atomically(const std::filesystem::path& path,
                      const std::string& contents) {
  std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << contents;
    out.flush();
    if (!out) {
      throw Error(Errc::integrity, "failed writing " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t seconds = std::chrono::system_clock::to_time_t(now);
  const auto millis = std::chrono::duration_cast<std::chrono::milliseconds>(
                          now.time_since_epoch()) %
                      1000;
  std::tm utc{};
  gmtime_r(&seconds, &utc);
  char buffer[32];
  std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%S", &utc);
  char out[40];
  std::snprintf(out, sizeof(out), "%s.%03dZ", buffer,
                static_cast<int>(millis.count()));
  return out;
}

ExportFormat parse_export_format(std::string_view name) {
  if (name == "plain") return ExportFormat::plain;
  if (name == "annotated") return ExportFormat::annotated;
  throw Error(Errc::invalid_argument,
              "export format must be 'plain' or 'annotated', got '" +
                  std::string(name) + "'");
}

json session_to_json(const Session& session) {
  return {{"format", kSessionFormat},
          {"format_version", kSessionFormatVersion},
          {"session_id", session.session_id},
          {"created_at", session.created_at},
          {"updated_at", session.updated_at},
          {"backend", session.backend},
          {"params", session.params},
          {"document",
           {{"version", session.doc.version()},
            {"spans", session.doc.spans()}}},
          {"records", session.records}};
}

Session session_from_json(const json& j) {
  try {
    if (j.at("format").get<std::string>() != kSessionFormat ||
        j.at("format_version").get<int>() != kSessionFormatVersion) {
      throw Error(Errc::integrity, "unsupported session format");
    }
    Session session;
    session.session_id = j.at("session_id").get<std::string>();
    session.created_at = j.at("created_at").get<std::string>();
    session.updated_at = j.at("updated_at").get<std::string>();
    session.backend = j.at("backend").get<BackendDescriptor>();
    session.params = j.at("params").get<GenerationParams>();

    const json& document = j.at("document");
    std::vector<Span> spans;
    for (const auto& span : document.at("spans")) {
      spans.push_back(span_from_json(span));
    }
    session.doc = StoryDocument(std::move(spans),
                                document.at("version").get<std::uint64_t>());
    session.records = j.at("records").get<std::vector<InteractionRecord>>();

    std::set<std::string> accepted;
    for (const auto& record : session.records) {
      if (record.session_id != session.session_id) {
        throw Error(Errc::integrity, "record " + record.request_id +
                                         " belongs to another session");
      }
      if (record.accepted_index) accepted.insert(record.request_id);
    }
    for (const auto& span : session.doc.spans()) {
      const auto& provenance = span.provenance();
      if (provenance.kind == Author::model &&
          !accepted.contains(provenance.request_id)) {
        throw Error(Errc::integrity,
                    "model text from request " + provenance.request_id +
                        " has no accepted interaction record");
      }
    }
    return session;
  } catch (const json::exception& e) {
    throw Error(Errc::integrity, std::string("corrupt session: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == Errc::integrity) throw;
    throw Error(Errc::integrity, std::string("corrupt session: ") + e.what());
  }
}

SessionService::SessionService(TaskRegistry tasks, PostProcessor postprocessor,
                               ServiceConfig config)
    : tasks_(std::move(tasks)),
      postprocessor_(std::move(postprocessor)),
      config_(std::move(config)),
      id_rng_(config_.id_seed ? *config_.id_seed : std::random_device{}()) {
  config_.default_params.validate();
  register_backend({"mock", WireFormat::dialog, std::string(kMockEndpoint)});
  register_backend({"mock-flat", WireFormat::flat, std::string(kMockEndpoint)});
}

void SessionService::register_backend(BackendDescriptor descriptor,
                                      std::shared_ptr<Backend> backend) {
  if (!backend) backend = make_backend(descriptor);
  std::unique_lock lock(backends_mutex_);
  auto id = descriptor.id;
  backends_.insert_or_assign(
      std::move(id), std::pair{std::move(descriptor), std::move(backend)});
}

std::vector<BackendDescriptor> SessionService::backends() const {
  std::shared_lock lock(backends_mutex_);
  std::vector<BackendDescriptor> out;
  for (const auto& [id, entry] : backends_) out.push_back(entry.first);
  return out;
}

std::shared_ptr<Backend> SessionService::backend_for(
    const std::string& backend_id) const {
  std::shared_lock lock(backends_mutex_);
  const auto it = backends_.find(backend_id);
  if (it == backends_.end()) {
    throw Error(Errc::invalid_argument, "unknown backend '" + backend_id + "'");
  }
  return it->second.second;
}

std::string SessionService::next_id(std::string_view prefix) {
  std::lock_guard lock(id_mutex_);
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(id_rng_()));
  return std::string(prefix) + "-" + hex;
}

std::shared_ptr<SessionService::Entry> SessionService::find(
    const std::string& session_id) const {
  std::shared_lock lock(sessions_mutex_);
  const auto it = sessions_.find(session_id);
  if (it == sessions_.end()) {
    throw Error(Errc::not_found, "unknown session '" + session_id + "'");
  }
  return it->second;
}

std::filesystem::path SessionService::session_path(
    const std::string& session_id) const {
  if (!config_.data_dir) {
    throw Error(Errc::invalid_argument,
                "no data directory configured for persistence");
  }
  if (!is_safe_id(session_id)) {
    throw Error(Errc::not_found, "invalid session id '" + session_id + "'");
  }
  return *config_.data_dir / "sessions" / (session_id + ".json");
}

void SessionService::persist(const Session& session) const {
  if (!config_.data_dir) return;
  write_atomically(session_path(session.session_id),
                   session_to_json(session).dump(2) + "\n");
}

void SessionService::append_corpus(const json& event) const {
  if (!config_.data_dir) return;
  std::lock_guard lock(corpus_mutex_);
  std::filesystem::create_directories(*config_.data_dir);
  std::ofstream out(*config_.data_dir / "interactions.jsonl",
                    std::ios::binary | std::ios::app);
  out << event.dump() << '\n';
}

Session SessionService::create_session(std::optional<std::string> backend_id,
                                       std::optional<GenerationParams> params) {
  const std::string id_of_backend =
      backend_id.value_or(config_.default_backend);
  BackendDescriptor descriptor;
  {
    std::shared_lock lock(backends_mutex_);
    const auto it = backends_.find(id_of_backend);
    if (it == backends_.end()) {
      throw Error(Errc::invalid_argument,
                  "unknown backend '" + id_of_backend + "'");
    }
    descriptor = it->second.first;
  }
  GenerationParams chosen = params.value_or(config_.default_params);
  chosen.validate();

  auto entry = std::make_shared<Entry>();
  Session& session = entry->session;
  session.backend = std::move(descriptor);
  session.params = chosen;
  session.created_at = utc_timestamp();
  session.updated_at = session.created_at;

  std::unique_lock lock(sessions_mutex_);
  do {
    session.session_id = next_id("s");
  } while (sessions_.contains(session.session_id));
  sessions_.emplace(session.session_id, entry);
  lock.unlock();

  persist(session);
  return session;
}

Session SessionService::get_session(const std::string& session_id) const {
  const auto entry = find(session_id);
  std::shared_lock lock(entry->mutex);
  return entry->session;
}

std::uint64_t SessionService::edit(const std::string& session_id,
                                   Selection sel, std::string_view text,
                                   std::uint64_t base_version) {
  const auto entry = find(session_id);
  std::unique_lock lock(entry->mutex);
  Session& session = entry->session;
  if (base_version != session.doc.version()) {
    throw Error(Errc::conflict,
                "edit based on version " + std::to_string(base_version) +
                    " but the document is at version " +
                    std::to_string(session.doc.version()),
                session.doc.version());
  }
  session.doc = session.doc.replace_range(sel, text, Provenance::human());
  session.updated_at = utc_timestamp();
  persist(session);
  return session.doc.version();
}

Suggestion SessionService::suggest(const std::string& session_id,
                                   TaskKind kind, std::optional<Selection> sel,
                                   const TaskOptions& options,
                                   std::stop_token stop) {
  const auto entry = find(session_id);
  StoryDocument doc;
  BackendDescriptor descriptor;
  GenerationParams params;
  {
    std::shared_lock lock(entry->mutex);
    doc = entry->session.doc;
    descriptor = entry->session.backend;
    params = entry->session.params;
  }

  PromptRequest req =
      tasks_.build(kind, doc, sel, options, next_id("r"));
  const auto backend = backend_for(descriptor.id);
  std::vector<Candidate> raw = backend->generate(req, params, stop);
  std::vector<Candidate> annotated = postprocessor_.run(raw, req);

  InteractionRecord record;
  record.request_id = req.request_id;
  record.session_id = session_id;
  record.kind = kind;
  record.doc_version_before = doc.version();
  record.request = std::move(req);
  record.params = params;
  record.backend_id = descriptor.id;
  record.raw_candidates = std::move(raw);
  record.candidates = annotated;
  record.timestamp = utc_timestamp();

  {
    std::unique_lock lock(entry->mutex);
    entry->session.records.push_back(record);
    entry->session.updated_at = record.timestamp;
    persist(entry->session);
  }
  append_corpus({{"event", "suggest"}, {"record", record}});
  return {record.request_id, std::move(annotated)};
}

std::uint64_t SessionService::accept(const std::string& session_id,
                                     const std::string& request_id,
                                     std::size_t candidate_index,
                                     std::uint64_t base_version) {
  const auto entry = find(session_id);
  std::unique_lock lock(entry->mutex);
  Session& session = entry->session;

  InteractionRecord* record = nullptr;
  for (auto& candidate : session.records) {
    if (candidate.request_id == request_id) record = &candidate;
  }
  if (record == nullptr) {
    throw Error(Errc::not_found, "unknown request '" + request_id +
                                     "' in session " + session_id);
  }
  if (record->accepted_index) {
    throw Error(Errc::request_consumed,
                "request " + request_id + " was already accepted");
  }
  if (candidate_index >= record->candidates.size()) {
    throw Error(Errc::range, "candidate index " +
                                 std::to_string(candidate_index) +
                                 " out of range; request has " +
                                 std::to_string(record->candidates.size()) +
                                 " candidates");
  }
  if (base_version != session.doc.version()) {
    throw Error(Errc::conflict,
                "accept based on version " + std::to_string(base_version) +
                    " but the document is at version " +
                    std::to_string(session.doc.version()),
                session.doc.version());
  }
  session.doc = apply_candidate(session.doc, record->request,
                                record->candidates[candidate_index]);
  record->accepted_index = candidate_index;
  session.updated_at = utc_timestamp();
  persist(session);
  const std::uint64_t version = session.doc.version();
  append_corpus({{"event", "accept"},
                 {"session_id", session_id},
                 {"request_id", request_id},
                 {"accepted_index", candidate_index},
                 {"doc_version_after", version},
                 {"timestamp", session.updated_at}});
  return version;
}

std::string SessionService::export_story(const std::string& session_id,
                                         ExportFormat format) const {
  const auto entry = find(session_id);
  std::shared_lock lock(entry->mutex);
  if (format == ExportFormat::plain) return entry->session.doc.full_text();
  return annotated_export(entry->session.doc).dump();
}

std::vector<InteractionRecord> SessionService::log(
    const std::string& session_id) const {
  const auto entry = find(session_id);
  std::shared_lock lock(entry->mutex);
  return entry->session.records;
}

void SessionService::save_session(const std::string& session_id) const {
  const auto entry = find(session_id);
  if (!config_.data_dir) {
    throw Error(Errc::invalid_argument,
                "no data directory configured for persistence");
  }
  std::shared_lock lock(entry->mutex);
  persist(entry->session);
}

Session SessionService::load_session(const std::string& session_id) {
  const auto path = session_path(session_id);
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(Errc::not_found, "no saved session '" + session_id + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const json parsed = json::parse(buffer.str(), nullptr, false);
  if (parsed.is_discarded()) {
    throw Error(Errc::integrity,
                "session file " + path.string() + " is not valid JSON");
  }
  Session session = session_from_json(parsed);
  if (session.session_id != session_id) {
    throw Error(Errc::integrity, "session file " + path.string() +
                                     " holds session " + session.session_id);
  }
  // Unknown backends (e.g. a URL from another deployment) fall back to
  // being rebuilt from the stored descriptor.
  {
    std::shared_lock lock(backends_mutex_);
    if (!backends_.contains(session.backend.id)) {
      lock.unlock();
      register_backend(session.backend);
    }
  }

  auto entry = std::make_shared<Entry>();
  entry->session = session;
  std::unique_lock lock(sessions_mutex_);
  sessions_.insert_or_assign(session_id, std::move(entry));
  return session;
}

std::vector<std::string> SessionService::load_all() {
  std::vector<std::string> ids;
  if (!config_.data_dir) return ids;
  const auto dir = *config_.data_dir / "sessions";
  if (!std::filesystem::exists(dir)) return ids;
  for (const auto& file : std::filesystem::directory_iterator(dir)) {
    if (file.path().extension() != ".json") continue;
    ids.push_back(load_session(file.path().stem().string()).session_id);
  }
  return ids;
}

}  // namespace storyweave

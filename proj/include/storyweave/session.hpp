#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <stop_token>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "storyweave/backend.hpp"
#include "storyweave/interaction.hpp"
#include "storyweave/postprocess.hpp"
#include "storyweave/story.hpp"
#include "storyweave/tasks.hpp"

namespace storyweave {

struct Session {
  std::string session_id;
  StoryDocument doc;
  std::string created_at;
  std::string updated_at;
  BackendDescriptor backend;
  GenerationParams params;
  std::vector<InteractionRecord> records;

  bool operator==(const Session&) const = default;
};

struct ServiceConfig {
  // Sessions are written to <data_dir>/sessions/<id>.json and every
  // suggest/accept event is appended to <data_dir>/interactions.jsonl.
  // Without a data dir the service is memory-only.
  std::optional<std::filesystem::path> data_dir;
  GenerationParams default_params;
  std::string default_backend = "mock";
  // Fixes the id sequence; used by tests and reproducible demos.
  std::optional<std::uint64_t> id_seed;
};

struct Suggestion {
  std::string request_id;
  std::vector<Candidate> candidates;
};

enum class ExportFormat { plain, annotated };

ExportFormat parse_export_format(std::string_view name);

nlohmann::json session_to_json(const Session& session);
// Throws Error(integrity) for anything that does not describe a complete,
// consistent session.
Session session_from_json(const nlohmann::json& j);

// Owns all live sessions. Mutations of one session are serialized and
// guarded by optimistic base_version checks; reads run concurrently; model
// calls run without holding any session lock.
class SessionService {
 public:
  SessionService(TaskRegistry tasks, PostProcessor postprocessor,
                 ServiceConfig config);

  // A null backend is built from the descriptor with make_backend.
  void register_backend(BackendDescriptor descriptor,
                        std::shared_ptr<Backend> backend = nullptr);
  std::vector<BackendDescriptor> backends() const;

  Session create_session(std::optional<std::string> backend_id = std::nullopt,
                         std::optional<GenerationParams> params = std::nullopt);

  Session get_session(const std::string& session_id) const;

  // Human typing path. Returns the new document version.
  std::uint64_t edit(const std::string& session_id, Selection sel,
                     std::string_view text, std::uint64_t base_version);

  // Never touches the document; logs an InteractionRecord once the
  // backend has answered.
  Suggestion suggest(const std::string& session_id, TaskKind kind,
                     std::optional<Selection> sel, const TaskOptions& options,
                     std::stop_token stop = {});

  std::uint64_t accept(const std::string& session_id,
                       const std::string& request_id,
                       std::size_t candidate_index,
                       std::uint64_t base_version);

  std::string export_story(const std::string& session_id,
                           ExportFormat format) const;

  std::vector<InteractionRecord> log(const std::string& session_id) const;

  void save_session(const std::string& session_id) const;
  // Replaces any in-memory copy. Throws Error(integrity) for a damaged file.
  Session load_session(const std::string& session_id);
  // Loads every session file under the data dir; returns the ids.
  std::vector<std::string> load_all();

  const TaskRegistry& tasks() const { return tasks_; }
  const ServiceConfig& config() const { return config_; }

 private:
  struct Entry {
    mutable std::shared_mutex mutex;
    Session session;
  };

  std::shared_ptr<Entry> find(const std::string& session_id) const;
  std::shared_ptr<Backend> backend_for(const std::string& backend_id) const;
  std::string next_id(std::string_view prefix);
  std::filesystem::path session_path(const std::string& session_id) const;
  void persist(const Session& session) const;
  void append_corpus(const nlohmann::json& event) const;

  TaskRegistry tasks_;
  PostProcessor postprocessor_;
  ServiceConfig config_;

  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;

  mutable std::shared_mutex backends_mutex_;
  std::map<std::string, std::pair<BackendDescriptor, std::shared_ptr<Backend>>>
      backends_;

  std::mutex id_mutex_;
  std::mt19937_64 id_rng_;

  mutable std::mutex corpus_mutex_;
};

std::string utc_timestamp();

}  // namespace storyweave

#pragma once

#include <nlohmann/json.hpp>

#include "storyweave/error.hpp"
#include "storyweave/session.hpp"

namespace httplib {
class Server;
}

namespace storyweave {

int http_status(Errc code);

// {"error": {"code": ..., "message": ..., "current_version"?: ...}}
nlohmann::json error_body(const Error& error);

nlohmann::json session_summary(const Session& session);

// Routes:
//   POST /sessions                      {"backend"?, "params"?}
//   GET  /sessions/{id}
//   POST /sessions/{id}/edit            {"start", "end", "text", "base_version"}
//   POST /sessions/{id}/suggest         {"kind", "start"?, "end"?, "n_words"?,
//                                        "tone"?, "instruction"?}
//   POST /sessions/{id}/accept          {"request_id", "candidate_index",
//                                        "base_version"}
//   GET  /sessions/{id}/export?format=plain|annotated
//   GET  /sessions/{id}/log
void mount_routes(httplib::Server& server, SessionService& service);

}  // namespace storyweave

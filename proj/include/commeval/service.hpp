#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>

#include "commeval/humaneval.hpp"

namespace httplib {
class Server;
}

namespace commeval::service {

// Serializes every state transition of the rating protocol behind one lock;
// reads take it shared.
class AnnotationService {
 public:
  AnnotationService(std::filesystem::path log_path, humaneval::Assignment assignment,
                    std::size_t snapshot_every = 100);

  std::optional<humaneval::AnnotationTask> next_task(const std::string& rater);
  humaneval::RatingAck post_rating(const humaneval::Rating& rating);
  humaneval::Progress progress() const;
  humaneval::ExportResult export_results() const;

 private:
  mutable std::shared_mutex mutex_;
  humaneval::RatingStore store_;
};

nlohmann::json to_json(const humaneval::Progress& progress);
nlohmann::json to_json(const humaneval::RatingAck& ack);

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 0;  // 0 picks a free port
  std::optional<std::filesystem::path> static_dir;  // annotator UI bundle, served under /
};

// Routes:
//   GET  /api/raters/{id}/next   task JSON, 204 when the queue is empty
//   POST /api/ratings            ack JSON; 400 / 403 / 404 / 409 on rejection
//   GET  /api/progress           {open, rated, escalated, resolved, items}
//   GET  /api/export             FinalScore lines (application/x-ndjson)
//   GET  /api/export/summary     text table
class HttpServer {
 public:
  HttpServer(AnnotationService& service, ServerOptions options = {});
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Binds and serves on a background thread; returns the bound port.
  int start();
  // Binds and serves on the calling thread until stop().
  void run();
  void stop();
  int port() const { return port_; }

 private:
  void install_routes();

  AnnotationService& service_;
  ServerOptions options_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace commeval::service

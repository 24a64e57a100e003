#include <httplib.h>

#include <chrono>
#include <ctime>

#include "commeval/service.hpp"

namespace commeval::service {

using nlohmann::json;
using humaneval::RejectReason;

namespace {

int status_for(RejectReason reason) {
  switch (reason) {
    case RejectReason::unknown_rater:
    case RejectReason::unknown_task: return 404;
    case RejectReason::wrong_rater: return 403;
    case RejectReason::duplicate: return 409;
    case RejectReason::out_of_range: break;
  }
  return 400;
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

}  // namespace

HttpServer::HttpServer(AnnotationService& service, ServerOptions options)
    : service_(service), options_(std::move(options)), server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

HttpServer::~HttpServer() { stop(); }

void HttpServer::install_routes() {
  auto& s = *server_;

  s.Get(R"(/api/raters/([^/]+)/next)", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      auto task = service_.next_task(req.matches[1]);
      if (!task) {
        res.status = 204;
        return;
      }
      send_json(res, 200, humaneval::to_public_json(*task));
    } catch (const humaneval::RatingRejected& e) {
      send_json(res, status_for(e.reason()), {{"error", e.what()}});
    }
  });

  s.Post("/api/ratings", [this](const httplib::Request& req, httplib::Response& res) {
    humaneval::Rating rating;
    try {
      rating = humaneval::rating_from_json(json::parse(req.body));
    } catch (const std::exception& e) {
      send_json(res, 400, {{"accepted", false}, {"error", e.what()}});
      return;
    }
    if (rating.timestamp.empty()) rating.timestamp = utc_now();
    try {
      send_json(res, 200, to_json(service_.post_rating(rating)));
    } catch (const humaneval::RatingRejected& e) {
      send_json(res, status_for(e.reason()), {{"accepted", false}, {"error", e.what()}});
    } catch (const std::exception& e) {
      send_json(res, 500, {{"accepted", false}, {"error", e.what()}});
    }
  });

  s.Get("/api/progress", [this](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, to_json(service_.progress()));
  });

  s.Get("/api/export", [this](const httplib::Request&, httplib::Response& res) {
    res.set_content(service_.export_results().to_jsonl(), "application/x-ndjson");
  });

  s.Get("/api/export/summary", [this](const httplib::Request&, httplib::Response& res) {
    res.set_content(service_.export_results().summary_text(), "text/plain");
  });

  if (options_.static_dir) s.set_mount_point("/", options_.static_dir->string());
}

int HttpServer::start() {
  if (options_.port == 0) {
    port_ = server_->bind_to_any_port(options_.host);
  } else {
    port_ = server_->bind_to_port(options_.host, options_.port) ? options_.port : -1;
  }
  if (port_ <= 0) throw IoError("cannot bind " + options_.host + ":" + std::to_string(options_.port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port_;
}

void HttpServer::run() {
  if (options_.port == 0) {
    port_ = server_->bind_to_any_port(options_.host);
  } else {
    port_ = server_->bind_to_port(options_.host, options_.port) ? options_.port : -1;
  }
  if (port_ <= 0) throw IoError("cannot bind " + options_.host + ":" + std::to_string(options_.port));
  server_->listen_after_bind();
}

void HttpServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace commeval::service

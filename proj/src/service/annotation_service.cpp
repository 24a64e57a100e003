#include <mutex>

#include "commeval/service.hpp"

namespace commeval::service {

using nlohmann::json;

AnnotationService::AnnotationService(std::filesystem::path log_path,
                                     humaneval::Assignment assignment, std::size_t snapshot_every)
    : store_(std::move(log_path), std::move(assignment), snapshot_every) {}

std::optional<humaneval::AnnotationTask> AnnotationService::next_task(const std::string& rater) {
  std::shared_lock lock(mutex_);
  return store_.state().next_task(rater);
}

humaneval::RatingAck AnnotationService::post_rating(const humaneval::Rating& rating) {
  std::unique_lock lock(mutex_);
  return store_.submit(rating);
}

humaneval::Progress AnnotationService::progress() const {
  std::shared_lock lock(mutex_);
  return store_.state().progress();
}

humaneval::ExportResult AnnotationService::export_results() const {
  std::shared_lock lock(mutex_);
  return store_.state().export_results();
}

json to_json(const humaneval::Progress& p) {
  return {{"open", p.open},
          {"rated", p.rated},
          {"escalated", p.escalated},
          {"resolved", p.resolved},
          {"items", p.items}};
}

json to_json(const humaneval::RatingAck& ack) {
  return {{"accepted", ack.accepted}, {"conflict_escalated", ack.conflict_escalated}};
}

}  // namespace commeval::service

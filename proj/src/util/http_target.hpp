#pragma once

#include <httplib.h>

#include <chrono>
#include <string>
#include <string_view>

namespace commeval::detail {

// Splits "https://host:port/prefix" into the origin httplib connects to and
// the path prefix prepended to every request path.
struct HttpTarget {
  std::string origin;
  std::string path_prefix;

  std::string path(std::string_view route) const { return path_prefix + std::string(route); }
};

inline HttpTarget parse_base_url(std::string_view url) {
  while (!url.empty() && url.back() == '/') url.remove_suffix(1);
  const auto scheme = url.find("://");
  const auto host_start = scheme == std::string_view::npos ? 0 : scheme + 3;
  const auto slash = url.find('/', host_start);
  if (slash == std::string_view::npos) return {std::string(url), ""};
  return {std::string(url.substr(0, slash)), std::string(url.substr(slash))};
}

inline void apply_timeout(httplib::Client& client, std::chrono::milliseconds timeout) {
  const auto seconds = static_cast<time_t>(timeout.count() / 1000);
  const auto micros = static_cast<time_t>((timeout.count() % 1000) * 1000);
  client.set_connection_timeout(seconds, micros);
  client.set_read_timeout(seconds, micros);
  client.set_write_timeout(seconds, micros);
}

}  // namespace commeval::detail

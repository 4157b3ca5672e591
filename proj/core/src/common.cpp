// SPDX-License-Identifier: Apache-2.0
#include "rvrank/common.hpp"

#include <charconv>
#include <iostream>

namespace rvrank {

std::string_view role_name(Role role) {
  switch (role) {
    case Role::T:
      return "T";
    case Role::VQ:
      return "VQ";
    case Role::VG:
      return "VG";
    case Role::Q:
      return "Q";
    case Role::G:
      return "G";
  }
  return "?";
}

std::optional<Role> parse_role(std::string_view token) {
  for (Role r : kAllRoles) {
    if (role_name(r) == token) return r;
  }
  return std::nullopt;
}

std::string_view metric_name(Metric metric) {
  return metric == Metric::kCosine ? "cosine" : "euclidean";
}

std::optional<Metric> parse_metric(std::string_view token) {
  if (token == "euclidean") return Metric::kEuclidean;
  if (token == "cosine") return Metric::kCosine;
  return std::nullopt;
}

void warn(std::string_view message) {
  std::cerr << "rvrank: warning: " << message << '\n';
}

std::string format_real(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) return "nan";
  return std::string(buf, end);
}

}  // namespace rvrank

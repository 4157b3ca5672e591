// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rvrank {

/// Split roles: training set, validation query/gallery, test query/gallery.
enum class Role : std::uint8_t { T = 0, VQ = 1, VG = 2, Q = 3, G = 4 };

inline constexpr std::array<Role, 5> kAllRoles = {Role::T, Role::VQ, Role::VG,
                                                  Role::Q, Role::G};

std::string_view role_name(Role role);
std::optional<Role> parse_role(std::string_view token);

/// (role, index) reference into a DatasetBundle.
struct RecordRef {
  Role role = Role::T;
  std::size_t index = 0;

  friend bool operator==(const RecordRef&, const RecordRef&) = default;
};

enum class Metric : std::uint8_t { kEuclidean, kCosine };

std::string_view metric_name(Metric metric);
std::optional<Metric> parse_metric(std::string_view token);

enum class ErrorCode {
  kIo,
  kMalformedHeader,
  kDimensionMismatch,
  kNonFinite,
  kUnknownRole,
  kTruncated,
  kMalformedRow,
  kInvalidArgument,
  kEmptyInput,
  kNoPresentParts,
  kUnresolvableRef,
  kNoValidAnchors,
  kDivergence,
  kMissingScore,
  kNotPermutation,
  kInfeasible,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Emits a diagnostic on stderr. Used for clamped parameters.
void warn(std::string_view message);

/// Shortest decimal form that round-trips to the same double.
std::string format_real(double value);

}  // namespace rvrank

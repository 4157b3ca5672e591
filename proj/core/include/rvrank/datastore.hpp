// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rvrank/common.hpp"

namespace rvrank {

inline constexpr std::size_t kDefaultPartCount = 15;

struct PartFeature {
  bool present = false;
  std::vector<float> values;  // Dp entries; all zero when absent
};

struct ImageRecord {
  std::size_t index = 0;
  std::uint32_t identity = 0;
  std::uint32_t cloth = 0;
  std::uint32_t camera = 0;
  std::vector<float> global_feature;
  std::vector<PartFeature> parts;

  /// Same person in the same clothes; such pairs never enter retrieval.
  bool same_identity_and_cloth(const ImageRecord& other) const {
    return identity == other.identity && cloth == other.cloth;
  }
};

struct Dims {
  std::size_t D = 0;
  std::size_t Dp = 0;
  std::size_t K = kDefaultPartCount;

  friend bool operator==(const Dims&, const Dims&) = default;
};

/// The five role splits plus shared dimensions. Immutable once loaded.
class DatasetBundle {
 public:
  DatasetBundle() = default;
  DatasetBundle(Dims dims, bool has_parts) : dims_(dims), has_parts_(has_parts) {}

  const Dims& dims() const { return dims_; }
  bool has_parts() const { return has_parts_; }

  std::span<const ImageRecord> split(Role role) const {
    return splits_[static_cast<std::size_t>(role)];
  }
  std::vector<ImageRecord>& mutable_split(Role role) {
    return splits_[static_cast<std::size_t>(role)];
  }

  /// Throws Error(kUnresolvableRef) on an out-of-range index.
  const ImageRecord& resolve(const RecordRef& ref) const;

  std::size_t total_records() const;

 private:
  Dims dims_;
  bool has_parts_ = false;
  std::array<std::vector<ImageRecord>, 5> splits_;
};

struct MetadataRow {
  std::size_t index = 0;
  Role role = Role::T;
  std::uint32_t identity = 0;
  std::uint32_t cloth = 0;
  std::uint32_t camera = 0;
};

struct Metadata {
  std::vector<MetadataRow> rows;
  std::optional<Dims> declared_dims;     // from a "# dims ..." comment line
  std::vector<std::string> comments;     // other leading '#' lines, verbatim
};

Metadata load_metadata(const std::filesystem::path& meta_path);

/// Labels-only bundle (empty feature vectors), enough for evaluation.
DatasetBundle bundle_from_metadata(const Metadata& meta);

DatasetBundle load_bundle(const std::filesystem::path& meta_path,
                          const std::filesystem::path& feature_path,
                          const std::optional<std::filesystem::path>& parts_path);

/// Writes the three files. `comments` are emitted as '#' lines ahead of the
/// metadata header (the dims line is always written).
void write_bundle(const DatasetBundle& bundle,
                  const std::filesystem::path& meta_path,
                  const std::filesystem::path& feature_path,
                  const std::optional<std::filesystem::path>& parts_path,
                  std::span<const std::string> comments = {});

struct Violation {
  std::optional<Role> role;
  std::optional<std::size_t> index;
  std::string field;
  std::string detail;

  std::string to_string() const;
};

/// Empty iff every record invariant holds.
std::vector<Violation> validate_bundle(const DatasetBundle& bundle);

}  // namespace rvrank

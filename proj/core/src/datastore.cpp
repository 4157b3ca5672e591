// SPDX-License-Identifier: Apache-2.0
#include "rvrank/datastore.hpp"

#include <cmath>
#include <sstream>

#include "binary_io.hpp"
#include "text_util.hpp"

namespace rvrank {

namespace {

constexpr std::string_view kMetaHeader = "index,role,identity,cloth,camera";
constexpr std::string_view kFeatureMagic = "RVR1";
constexpr std::string_view kPartsMagic = "RVP1";

std::optional<Dims> parse_dims_comment(std::string_view line) {
  // "# dims D=<n> Dp=<n> K=<n>"
  constexpr std::string_view prefix = "# dims ";
  if (line.substr(0, prefix.size()) != prefix) return std::nullopt;
  std::istringstream in{std::string(line.substr(prefix.size()))};
  Dims dims;
  std::string tok;
  int seen = 0;
  while (in >> tok) {
    auto eq = tok.find('=');
    if (eq == std::string::npos) return std::nullopt;
    auto key = std::string_view(tok).substr(0, eq);
    auto val = detail::parse_int<std::size_t>(std::string_view(tok).substr(eq + 1));
    if (!val) return std::nullopt;
    if (key == "D") {
      dims.D = *val;
      seen |= 1;
    } else if (key == "Dp") {
      dims.Dp = *val;
      seen |= 2;
    } else if (key == "K") {
      dims.K = *val;
      seen |= 4;
    }
  }
  if (seen != 7) return std::nullopt;
  return dims;
}

}  // namespace

const ImageRecord& DatasetBundle::resolve(const RecordRef& ref) const {
  auto records = split(ref.role);
  if (ref.index >= records.size()) {
    throw Error(ErrorCode::kUnresolvableRef,
                "unresolvable record ref (" + std::string(role_name(ref.role)) + ", " +
                    std::to_string(ref.index) + "): split holds " + std::to_string(records.size()));
  }
  return records[ref.index];
}

std::size_t DatasetBundle::total_records() const {
  std::size_t n = 0;
  for (const auto& s : splits_) n += s.size();
  return n;
}

Metadata load_metadata(const std::filesystem::path& meta_path) {
  detail::CsvReader csv(meta_path);
  csv.expect_header(kMetaHeader);

  Metadata meta;
  for (const auto& c : csv.comments()) {
    if (auto dims = parse_dims_comment(c)) {
      meta.declared_dims = dims;
    } else {
      meta.comments.push_back(c);
    }
  }

  std::array<std::size_t, 5> next_index{};
  int last_role = -1;
  while (auto row = csv.next_row(5)) {
    const auto& f = *row;
    auto index = detail::parse_int<std::size_t>(f[0]);
    if (!index) csv.fail("bad index '" + std::string(f[0]) + "'");
    auto role = parse_role(f[1]);
    if (!role) csv.fail("unknown role token '" + std::string(f[1]) + "'", ErrorCode::kUnknownRole);
    auto identity = detail::parse_int<std::uint32_t>(f[2]);
    auto cloth = detail::parse_int<std::uint32_t>(f[3]);
    auto camera = detail::parse_int<std::uint32_t>(f[4]);
    if (!identity) csv.fail("identity must be a non-negative integer, got '" + std::string(f[2]) + "'");
    if (!cloth) csv.fail("cloth must be a non-negative integer, got '" + std::string(f[3]) + "'");
    if (!camera) csv.fail("camera must be a non-negative integer, got '" + std::string(f[4]) + "'");

    int r = static_cast<int>(*role);
    if (r < last_role) csv.fail("rows not sorted by (role, index)");
    last_role = r;
    if (*index != next_index[r]) {
      csv.fail("index " + std::to_string(*index) + " out of sequence for role " +
               std::string(role_name(*role)) + " (expected " + std::to_string(next_index[r]) + ")");
    }
    ++next_index[r];
    meta.rows.push_back({*index, *role, *identity, *cloth, *camera});
  }
  return meta;
}

DatasetBundle bundle_from_metadata(const Metadata& meta) {
  DatasetBundle bundle(meta.declared_dims.value_or(Dims{}), false);
  for (const auto& row : meta.rows) {
    ImageRecord rec;
    rec.index = row.index;
    rec.identity = row.identity;
    rec.cloth = row.cloth;
    rec.camera = row.camera;
    bundle.mutable_split(row.role).push_back(std::move(rec));
  }
  return bundle;
}

DatasetBundle load_bundle(const std::filesystem::path& meta_path,
                          const std::filesystem::path& feature_path,
                          const std::optional<std::filesystem::path>& parts_path) {
  Metadata meta = load_metadata(meta_path);
  const std::size_t n_rows = meta.rows.size();

  auto feat = detail::ByteReader::from_file(feature_path);
  feat.expect_magic(kFeatureMagic);
  const std::size_t n = feat.get_u32();
  const std::size_t d = feat.get_u32();
  if (n != n_rows) {
    throw Error(ErrorCode::kDimensionMismatch,
                feature_path.string() + ": header declares N=" + std::to_string(n) +
                    " records at byte offset 4, metadata has " + std::to_string(n_rows) + " rows");
  }
  if (meta.declared_dims && meta.declared_dims->D != d) {
    throw Error(ErrorCode::kDimensionMismatch,
                feature_path.string() + ": header declares D=" + std::to_string(d) +
                    " at byte offset 8, metadata declares D=" + std::to_string(meta.declared_dims->D));
  }
  feat.require(n * d * 4);

  Dims dims{d, 0, kDefaultPartCount};
  std::optional<detail::ByteReader> parts;
  if (parts_path) {
    parts.emplace(detail::ByteReader::from_file(*parts_path));
    parts->expect_magic(kPartsMagic);
    const std::size_t pn = parts->get_u32();
    dims.K = parts->get_u32();
    dims.Dp = parts->get_u32();
    if (pn != n_rows) {
      throw Error(ErrorCode::kDimensionMismatch,
                  parts_path->string() + ": header declares N=" + std::to_string(pn) +
                      " records at byte offset 4, metadata has " + std::to_string(n_rows) + " rows");
    }
    if (meta.declared_dims &&
        (meta.declared_dims->K != dims.K || meta.declared_dims->Dp != dims.Dp)) {
      throw Error(ErrorCode::kDimensionMismatch,
                  parts_path->string() + ": header declares K=" + std::to_string(dims.K) +
                      " Dp=" + std::to_string(dims.Dp) + ", metadata declares K=" +
                      std::to_string(meta.declared_dims->K) +
                      " Dp=" + std::to_string(meta.declared_dims->Dp));
    }
    parts->require(n * dims.K * (1 + dims.Dp * 4));
  } else if (meta.declared_dims) {
    dims.K = meta.declared_dims->K;
  }

  DatasetBundle bundle(dims, parts.has_value());
  for (std::size_t row = 0; row < n_rows; ++row) {
    const auto& m = meta.rows[row];
    ImageRecord rec;
    rec.index = m.index;
    rec.identity = m.identity;
    rec.cloth = m.cloth;
    rec.camera = m.camera;
    rec.global_feature.resize(d);
    for (std::size_t j = 0; j < d; ++j) {
      const std::size_t off = feat.offset();
      float v = feat.get_f32();
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::kNonFinite, feature_path.string() + ": non-finite value at byte offset " +
                                               std::to_string(off) + " (row " + std::to_string(row) +
                                               ", column " + std::to_string(j) + ")");
      }
      rec.global_feature[j] = v;
    }
    rec.parts.resize(dims.K);
    for (std::size_t k = 0; k < dims.K; ++k) {
      auto& part = rec.parts[k];
      part.values.assign(dims.Dp, 0.0f);
      if (!parts) continue;
      const std::size_t flag_off = parts->offset();
      std::uint8_t flag = parts->get_u8();
      if (flag > 1) {
        throw Error(ErrorCode::kMalformedRow, parts_path->string() + ": presence flag " +
                                                  std::to_string(flag) + " at byte offset " +
                                                  std::to_string(flag_off));
      }
      part.present = flag == 1;
      for (std::size_t j = 0; j < dims.Dp; ++j) {
        const std::size_t off = parts->offset();
        float v = parts->get_f32();
        if (!std::isfinite(v)) {
          throw Error(ErrorCode::kNonFinite, parts_path->string() + ": non-finite value at byte offset " +
                                                 std::to_string(off) + " (row " + std::to_string(row) +
                                                 ", part " + std::to_string(k) + ")");
        }
        if (!part.present && v != 0.0f) {
          throw Error(ErrorCode::kMalformedRow, parts_path->string() +
                                                    ": absent part carries nonzero payload at byte offset " +
                                                    std::to_string(off));
        }
        part.values[j] = v;
      }
    }
    bundle.mutable_split(m.role).push_back(std::move(rec));
  }
  feat.expect_end();
  if (parts) parts->expect_end();
  return bundle;
}

void write_bundle(const DatasetBundle& bundle, const std::filesystem::path& meta_path,
                  const std::filesystem::path& feature_path,
                  const std::optional<std::filesystem::path>& parts_path,
                  std::span<const std::string> comments) {
  const Dims& dims = bundle.dims();
  const std::size_t n = bundle.total_records();

  auto meta = detail::open_for_write(meta_path);
  for (const auto& c : comments) meta << (c.starts_with("#") ? "" : "# ") << c << '\n';
  meta << "# dims D=" << dims.D << " Dp=" << dims.Dp << " K=" << dims.K << '\n';
  meta << kMetaHeader << '\n';

  detail::ByteWriter feat;
  feat.put_bytes(kFeatureMagic);
  feat.put_u32(static_cast<std::uint32_t>(n));
  feat.put_u32(static_cast<std::uint32_t>(dims.D));

  detail::ByteWriter parts;
  parts.put_bytes(kPartsMagic);
  parts.put_u32(static_cast<std::uint32_t>(n));
  parts.put_u32(static_cast<std::uint32_t>(dims.K));
  parts.put_u32(static_cast<std::uint32_t>(dims.Dp));

  for (Role role : kAllRoles) {
    for (const auto& rec : bundle.split(role)) {
      meta << rec.index << ',' << role_name(role) << ',' << rec.identity << ',' << rec.cloth << ','
           << rec.camera << '\n';
      for (float v : rec.global_feature) feat.put_f32(v);
      for (std::size_t k = 0; k < dims.K; ++k) {
        const PartFeature* part = k < rec.parts.size() ? &rec.parts[k] : nullptr;
        const bool present = part && part->present;
        parts.put_u8(present ? 1 : 0);
        for (std::size_t j = 0; j < dims.Dp; ++j) {
          parts.put_f32(present ? part->values[j] : 0.0f);
        }
      }
    }
  }
  if (!meta) throw Error(ErrorCode::kIo, "write failed: " + meta_path.string());
  feat.write_to(feature_path);
  if (parts_path) parts.write_to(*parts_path);
}

std::string Violation::to_string() const {
  std::string out = role ? std::string(role_name(*role)) : std::string("*");
  out += '[';
  out += index ? std::to_string(*index) : std::string("*");
  out += "].";
  out += field;
  if (!detail.empty()) out += ": " + detail;
  return out;
}

std::vector<Violation> validate_bundle(const DatasetBundle& bundle) {
  std::vector<Violation> out;
  const Dims& dims = bundle.dims();
  for (Role role : kAllRoles) {
    auto records = bundle.split(role);
    if (records.empty() && role != Role::T) {
      out.push_back({role, std::nullopt, "split", "role holds no records"});
    }
    for (std::size_t i = 0; i < records.size(); ++i) {
      const auto& rec = records[i];
      if (rec.index != i) {
        out.push_back({role, i, "index", "stored index " + std::to_string(rec.index)});
      }
      if (rec.global_feature.size() != dims.D) {
        out.push_back({role, i, "dims", "global_feature has " + std::to_string(rec.global_feature.size()) +
                                             " entries, bundle D=" + std::to_string(dims.D)});
      } else {
        for (float v : rec.global_feature) {
          if (!std::isfinite(v)) {
            out.push_back({role, i, "global_feature", "non-finite entry"});
            break;
          }
        }
      }
      if (rec.parts.size() != dims.K) {
        out.push_back({role, i, "dims", "record has K=" + std::to_string(rec.parts.size()) +
                                             " parts, bundle K=" + std::to_string(dims.K)});
        continue;
      }
      for (std::size_t k = 0; k < rec.parts.size(); ++k) {
        const auto& part = rec.parts[k];
        if (!part.present) continue;
        if (part.values.size() != dims.Dp) {
          out.push_back({role, i, "dims", "part " + std::to_string(k) + " has " +
                                               std::to_string(part.values.size()) +
                                               " entries, bundle Dp=" + std::to_string(dims.Dp)});
          continue;
        }
        for (float v : part.values) {
          if (!std::isfinite(v)) {
            out.push_back({role, i, "part_features", "non-finite entry in part " + std::to_string(k)});
            break;
          }
        }
      }
    }
  }
  return out;
}

}  // namespace rvrank

// SPDX-License-Identifier: Apache-2.0
#include "rvrank/retrieval.hpp"

#include <algorithm>
#include <cmath>

#include "rvrank/parallel.hpp"
#include "text_util.hpp"

namespace rvrank {

namespace {

constexpr std::string_view kPairsHeader = "query_role,query_index,rank,cand_role,cand_index,score,label";

struct Ranked {
  double dist;
  std::size_t index;
};

bool ranked_less(const Ranked& a, const Ranked& b) {
  if (a.dist != b.dist) return a.dist < b.dist;
  return a.index < b.index;
}

// Sorts `pool` and keeps the first `limit` entries.
void take_nearest(std::vector<Ranked>& pool, std::size_t limit) {
  if (limit < pool.size()) {
    std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(limit), pool.end(),
                      ranked_less);
    pool.resize(limit);
  } else {
    std::sort(pool.begin(), pool.end(), ranked_less);
  }
}

}  // namespace

double feature_distance(std::span<const float> a, std::span<const float> b, Metric metric) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "feature dimension mismatch: " + std::to_string(a.size()) +
                                                   " vs " + std::to_string(b.size()));
  }
  if (metric == Metric::kEuclidean) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
      acc += d * d;
    }
    return std::sqrt(acc);
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a[i], y = b[i];
    dot += x * y;
    na += x * x;
    nb += y * y;
  }
  if (na == 0.0 || nb == 0.0) return 1.0;
  const double cos = std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
  return 1.0 - cos;
}

DistanceMatrix distance_matrix(std::span<const ImageRecord> queries,
                               std::span<const ImageRecord> gallery, Metric metric) {
  DistanceMatrix dist(queries.size(), gallery.size());
  if (!queries.empty() && !gallery.empty()) {
    // Fail early on the calling thread rather than inside a worker.
    (void)feature_distance(queries[0].global_feature, gallery[0].global_feature, metric);
  }
  parallel_for(queries.size(), [&](std::size_t i) {
    for (std::size_t j = 0; j < gallery.size(); ++j) {
      dist(i, j) = feature_distance(queries[i].global_feature, gallery[j].global_feature, metric);
    }
  });
  return dist;
}

std::vector<CandidateList> rank_eligible(std::span<const ImageRecord> queries,
                                         std::span<const ImageRecord> gallery,
                                         const DistanceMatrix& dist,
                                         std::optional<std::size_t> limit) {
  if (dist.rows() != queries.size() || dist.cols() != gallery.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "distance matrix shape does not match query/gallery sizes");
  }
  std::vector<CandidateList> out(queries.size());
  parallel_for(queries.size(), [&](std::size_t i) {
    std::vector<Ranked> pool;
    pool.reserve(gallery.size());
    for (std::size_t j = 0; j < gallery.size(); ++j) {
      if (queries[i].same_identity_and_cloth(gallery[j])) continue;
      pool.push_back({dist(i, j), j});
    }
    take_nearest(pool, limit.value_or(pool.size()));
    auto& list = out[i];
    list.query_index = i;
    list.entries.reserve(pool.size());
    for (const auto& r : pool) list.entries.push_back({r.index, -r.dist});
  });
  return out;
}

std::vector<CandidateList> top_candidates(std::span<const ImageRecord> queries,
                                          std::span<const ImageRecord> gallery, std::size_t P,
                                          Metric metric) {
  if (P == 0) throw Error(ErrorCode::kInvalidArgument, "P must be >= 1");
  if (gallery.empty()) throw Error(ErrorCode::kEmptyInput, "empty gallery");
  return rank_eligible(queries, gallery, distance_matrix(queries, gallery, metric), P);
}

std::string_view provenance_name(PairProvenance p) {
  switch (p) {
    case PairProvenance::kTrain:
      return "train";
    case PairProvenance::kValid:
      return "valid";
    case PairProvenance::kTest:
      return "test";
    case PairProvenance::kCandidates:
      return "candidates";
  }
  return "?";
}

PairSet build_eval_pairs(Role query_role, Role gallery_role, const DatasetBundle& bundle,
                         std::size_t P, Metric metric) {
  auto queries = bundle.split(query_role);
  auto gallery = bundle.split(gallery_role);
  if (queries.empty()) {
    throw Error(ErrorCode::kEmptyInput, "query role " + std::string(role_name(query_role)) + " is empty");
  }
  PairSet out;
  out.provenance = query_role == Role::VQ ? PairProvenance::kValid : PairProvenance::kTest;
  const auto lists = top_candidates(queries, gallery, P, metric);
  for (const auto& list : lists) {
    const auto& q = queries[list.query_index];
    for (std::size_t r = 0; r < list.entries.size(); ++r) {
      const auto& c = list.entries[r];
      out.pairs.push_back({{query_role, list.query_index},
                           {gallery_role, c.gallery_index},
                           r + 1,
                           c.score,
                           gallery[c.gallery_index].identity == q.identity});
    }
  }
  return out;
}

PairSet build_train_pairs(const DatasetBundle& bundle, std::size_t P, Metric metric,
                          TrainPairReport* report) {
  if (P == 0) throw Error(ErrorCode::kInvalidArgument, "P must be >= 1");
  auto train = bundle.split(Role::T);
  const DistanceMatrix dist = distance_matrix(train, train, metric);

  struct AnchorPairs {
    std::vector<Ranked> positives;
    std::vector<Ranked> negatives;
  };
  std::vector<AnchorPairs> per_anchor(train.size());
  parallel_for(train.size(), [&](std::size_t i) {
    auto& a = per_anchor[i];
    for (std::size_t j = 0; j < train.size(); ++j) {
      if (j == i || train[i].same_identity_and_cloth(train[j])) continue;
      (train[j].identity == train[i].identity ? a.positives : a.negatives).push_back({dist(i, j), j});
    }
    take_nearest(a.positives, P);
    take_nearest(a.negatives, P);
  });

  TrainPairReport local;
  local.anchors_total = train.size();
  PairSet out;
  out.provenance = PairProvenance::kTrain;
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto& a = per_anchor[i];
    if (a.positives.empty()) {
      local.dropped_no_positive.push_back(i);
      continue;
    }
    if (a.negatives.empty()) {
      local.dropped_no_negative.push_back(i);
      continue;
    }
    ++local.anchors_kept;
    for (std::size_t r = 0; r < a.positives.size(); ++r) {
      out.pairs.push_back({{Role::T, i}, {Role::T, a.positives[r].index}, r + 1, -a.positives[r].dist, true});
    }
    for (std::size_t r = 0; r < a.negatives.size(); ++r) {
      out.pairs.push_back({{Role::T, i}, {Role::T, a.negatives[r].index}, r + 1, -a.negatives[r].dist, false});
    }
  }
  if (report) *report = std::move(local);
  return out;
}

void write_pairs_csv(const PairSet& pairs, const std::filesystem::path& path,
                     std::span<const std::string> comments) {
  auto out = detail::open_for_write(path);
  for (const auto& c : comments) out << (c.starts_with("#") ? "" : "# ") << c << '\n';
  out << "# provenance=" << provenance_name(pairs.provenance) << '\n';
  out << kPairsHeader << '\n';
  for (const auto& p : pairs.pairs) {
    out << role_name(p.query.role) << ',' << p.query.index << ',' << p.rank << ','
        << role_name(p.candidate.role) << ',' << p.candidate.index << ',' << format_real(p.score) << ','
        << (p.label ? 1 : 0) << '\n';
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

PairSet read_pairs_csv(const std::filesystem::path& path) {
  detail::CsvReader csv(path);
  csv.expect_header(kPairsHeader);
  PairSet set;
  for (const auto& c : csv.comments()) {
    for (auto p : {PairProvenance::kTrain, PairProvenance::kValid, PairProvenance::kTest,
                   PairProvenance::kCandidates}) {
      if (c == "# provenance=" + std::string(provenance_name(p))) set.provenance = p;
    }
  }
  while (auto row = csv.next_row(7)) {
    const auto& f = *row;
    auto qrole = parse_role(f[0]);
    auto crole = parse_role(f[3]);
    if (!qrole || !crole) csv.fail("unknown role token", ErrorCode::kUnknownRole);
    auto qidx = detail::parse_int<std::size_t>(f[1]);
    auto rank = detail::parse_int<std::size_t>(f[2]);
    auto cidx = detail::parse_int<std::size_t>(f[4]);
    auto score = detail::parse_double(f[5]);
    if (!qidx || !rank || !cidx || !score || (f[6] != "0" && f[6] != "1")) csv.fail("malformed pair row");
    set.pairs.push_back({{*qrole, *qidx}, {*crole, *cidx}, *rank, *score, f[6] == "1"});
  }
  return set;
}

}  // namespace rvrank

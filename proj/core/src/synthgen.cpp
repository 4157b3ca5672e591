// SPDX-License-Identifier: Apache-2.0
#include "rvrank/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "rvrank/rng.hpp"

namespace rvrank {

namespace {

using json = nlohmann::ordered_json;

std::vector<double> gaussian_vector(Rng& rng, std::size_t n, double scale) {
  std::vector<double> v(n);
  for (double& x : v) x = scale * rng.normal();
  return v;
}

json config_to_json(const SynthConfig& c) {
  json j;
  j["n_identities"] = c.n_identities;
  j["clothes_per_identity"] = c.clothes_per_identity;
  j["images_per_cloth"] = c.images_per_cloth;
  j["confuser_group_size"] = c.confuser_group_size;
  j["D"] = c.D;
  j["Dp"] = c.Dp;
  j["K"] = c.K;
  j["group_spread"] = c.group_spread;
  j["identity_spread"] = c.identity_spread;
  j["general_noise"] = c.general_noise;
  j["detail_noise"] = c.detail_noise;
  j["cloth_shift"] = c.cloth_shift;
  j["part_dropout"] = c.part_dropout;
  j["train_fraction"] = c.train_fraction;
  j["valid_fraction"] = c.valid_fraction;
  j["seed"] = c.seed;
  return j;
}

SynthConfig config_from_json(const json& j) {
  SynthConfig c;
  c.n_identities = j.at("n_identities").get<std::size_t>();
  c.clothes_per_identity = j.at("clothes_per_identity").get<std::size_t>();
  c.images_per_cloth = j.at("images_per_cloth").get<std::size_t>();
  c.confuser_group_size = j.at("confuser_group_size").get<std::size_t>();
  c.D = j.at("D").get<std::size_t>();
  c.Dp = j.at("Dp").get<std::size_t>();
  c.K = j.at("K").get<std::size_t>();
  c.group_spread = j.at("group_spread").get<double>();
  c.identity_spread = j.at("identity_spread").get<double>();
  c.general_noise = j.at("general_noise").get<double>();
  c.detail_noise = j.at("detail_noise").get<double>();
  c.cloth_shift = j.at("cloth_shift").get<double>();
  c.part_dropout = j.at("part_dropout").get<double>();
  c.train_fraction = j.at("train_fraction").get<double>();
  c.valid_fraction = j.at("valid_fraction").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

}  // namespace

void SynthConfig::check() const {
  if (n_identities == 0 || clothes_per_identity == 0 || images_per_cloth == 0 || confuser_group_size == 0 ||
      D == 0 || K == 0) {
    throw Error(ErrorCode::kInvalidArgument, "synthetic counts and dimensions must be >= 1");
  }
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!prob(part_dropout) || !prob(train_fraction) || !prob(valid_fraction) ||
      train_fraction + valid_fraction > 1.0) {
    throw Error(ErrorCode::kInvalidArgument, "synthetic probabilities and split fractions must lie in [0, 1]");
  }
  for (double v : {group_spread, identity_spread, general_noise, detail_noise, cloth_shift}) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw Error(ErrorCode::kInvalidArgument, "synthetic spreads and noise levels must be finite and >= 0");
    }
  }
}

SynthOutput generate(const SynthConfig& config) {
  config.check();
  Rng rng(config.seed);
  const std::size_t n_ids = config.n_identities;
  const std::size_t group_size = config.confuser_group_size;
  const std::size_t n_groups = (n_ids + group_size - 1) / group_size;

  const auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(n_groups) * config.train_fraction));
  const auto n_valid = static_cast<std::size_t>(std::llround(static_cast<double>(n_groups) * config.valid_fraction));
  if (n_train == 0 || n_valid == 0 || n_train + n_valid >= n_groups) {
    throw Error(ErrorCode::kInfeasible, "cannot split " + std::to_string(n_groups) +
                                            " confuser groups into non-empty train/valid/test splits");
  }

  std::vector<std::size_t> group_order(n_groups);
  std::iota(group_order.begin(), group_order.end(), 0);
  rng.shuffle(std::span<std::size_t>(group_order));
  std::vector<Role> split_of_group(n_groups, Role::Q);
  for (std::size_t r = 0; r < n_groups; ++r) {
    split_of_group[group_order[r]] = r < n_train ? Role::T : (r < n_train + n_valid ? Role::VQ : Role::Q);
  }

  std::vector<std::vector<double>> centroids(n_groups);
  for (auto& c : centroids) c = gaussian_vector(rng, config.D, config.group_spread);

  SynthOutput out;
  GroundTruth& truth = out.truth;
  truth.config = config;
  truth.group_of_identity.resize(n_ids);
  truth.split_of_identity.resize(n_ids);
  truth.planted.resize(n_ids);
  out.bundle = DatasetBundle(Dims{config.D, config.Dp, config.K}, true);

  for (std::size_t id = 0; id < n_ids; ++id) {
    const std::size_t group = id / group_size;
    truth.group_of_identity[id] = static_cast<std::uint32_t>(group);
    const Role split = split_of_group[group];
    truth.split_of_identity[id] = split;

    const auto offset = gaussian_vector(rng, config.D, config.identity_spread);
    auto& planted = truth.planted[id];
    planted.resize(config.K);
    for (auto& part : planted) {
      part.resize(config.Dp);
      for (float& v : part) v = static_cast<float>(rng.normal());
    }

    for (std::size_t cloth = 0; cloth < config.clothes_per_identity; ++cloth) {
      auto shift = gaussian_vector(rng, config.D, 1.0);
      double norm = std::sqrt(std::inner_product(shift.begin(), shift.end(), shift.begin(), 0.0));
      for (double& s : shift) s = norm > 0.0 ? s / norm * config.cloth_shift : 0.0;

      for (std::size_t image = 0; image < config.images_per_cloth; ++image) {
        ImageRecord rec;
        rec.identity = static_cast<std::uint32_t>(id);
        rec.cloth = static_cast<std::uint32_t>(cloth);
        rec.camera = static_cast<std::uint32_t>(cloth);
        rec.global_feature.resize(config.D);
        for (std::size_t j = 0; j < config.D; ++j) {
          const double noise = config.general_noise * rng.normal();
          rec.global_feature[j] = static_cast<float>(centroids[group][j] + offset[j] + shift[j] + noise);
        }
        rec.parts.resize(config.K);
        for (std::size_t k = 0; k < config.K; ++k) {
          auto& part = rec.parts[k];
          part.present = !rng.bernoulli(config.part_dropout);
          part.values.assign(config.Dp, 0.0f);
          for (std::size_t j = 0; j < config.Dp; ++j) {
            const double noise = config.detail_noise * rng.normal();
            if (part.present) part.values[j] = static_cast<float>(planted[k][j] + noise);
          }
        }

        Role role = Role::T;
        if (split != Role::T) {
          // One query per (identity, cloth); with a single image per cloth,
          // clothes alternate between query and gallery.
          const bool is_query = config.images_per_cloth >= 2 ? image == 0 : cloth % 2 == 0;
          if (split == Role::VQ) {
            role = is_query ? Role::VQ : Role::VG;
          } else {
            role = is_query ? Role::Q : Role::G;
          }
        }
        auto& records = out.bundle.mutable_split(role);
        rec.index = records.size();
        records.push_back(std::move(rec));
      }
    }
  }
  return out;
}

std::string synth_config_json(const SynthConfig& config) { return config_to_json(config).dump(); }

SynthConfig synth_config_from_json(const std::string& text) { return config_from_json(json::parse(text)); }

void write_groundtruth_json(const GroundTruth& truth, const std::filesystem::path& path,
                            const std::string& run_config_json) {
  json j;
  if (!run_config_json.empty()) j["run_config"] = json::parse(run_config_json);
  j["config"] = config_to_json(truth.config);
  j["group_of_identity"] = truth.group_of_identity;
  json splits = json::array();
  for (Role r : truth.split_of_identity) splits.push_back(r == Role::T ? "train" : (r == Role::VQ ? "valid" : "test"));
  j["split_of_identity"] = splits;
  j["planted"] = truth.planted;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open for writing: " + path.string());
  out << j.dump() << '\n';
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

GroundTruth read_groundtruth_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedHeader, path.string() + ": " + e.what());
  }
  GroundTruth truth;
  truth.config = config_from_json(j.at("config"));
  truth.group_of_identity = j.at("group_of_identity").get<std::vector<std::uint32_t>>();
  for (const auto& s : j.at("split_of_identity")) {
    const auto name = s.get<std::string>();
    truth.split_of_identity.push_back(name == "train" ? Role::T : (name == "valid" ? Role::VQ : Role::Q));
  }
  truth.planted = j.at("planted").get<std::vector<std::vector<std::vector<float>>>>();
  return truth;
}

PairScores DetailOracleScorer::score(const ImageRecord& query, const ImageRecord& candidate) const {
  const auto& a = truth_->planted.at(query.identity);
  const auto& b = truth_->planted.at(candidate.identity);
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    for (std::size_t j = 0; j < a[k].size(); ++j) {
      dot += static_cast<double>(a[k][j]) * b[k][j];
      na += static_cast<double>(a[k][j]) * a[k][j];
      nb += static_cast<double>(b[k][j]) * b[k][j];
    }
  }
  double s = 0.0;
  if (query.identity == candidate.identity) {
    s = 1.0;
  } else if (na > 0.0 && nb > 0.0) {
    s = std::min(dot / std::sqrt(na * nb), 1.0);
  }
  return {s, s};
}

}  // namespace rvrank

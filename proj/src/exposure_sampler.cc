// SPDX-FileCopyrightText: © 2026 The zsvad Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "zsvad/exposure_sampler.h"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "zsvad/errors.h"
#include "zsvad/tensor_io.h"

namespace zsvad {

std::vector<std::uint64_t> rle_encode(std::span<const std::uint8_t> mask, std::size_t frames,
                                      std::size_t height, std::size_t width) {
  require(mask.size() == frames * height * width, "rle_encode: mask size mismatch");
  std::vector<std::uint64_t> counts;
  std::uint8_t current = 0;
  std::uint64_t run = 0;
  for (std::size_t t = 0; t < frames; ++t) {
    const std::size_t base = t * height * width;
    for (std::size_t x = 0; x < width; ++x) {
      for (std::size_t y = 0; y < height; ++y) {
        const std::uint8_t v = mask[base + y * width + x] ? 1 : 0;
        if (v != current) {
          counts.push_back(run);
          run = 0;
          current = v;
        }
        ++run;
      }
    }
  }
  counts.push_back(run);
  return counts;
}

std::vector<std::uint8_t> rle_decode(std::span<const std::uint64_t> counts, std::size_t frames,
                                     std::size_t height, std::size_t width) {
  const std::size_t total = frames * height * width;
  const std::uint64_t covered = std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
  if (covered != total) {
    throw DataError("mask RLE covers " + std::to_string(covered) + " pixels, expected " +
                    std::to_string(total));
  }
  std::vector<std::uint8_t> mask(total, 0);
  const std::size_t plane = height * width;
  std::size_t pos = 0;
  std::uint8_t value = 0;
  for (std::uint64_t run : counts) {
    for (std::uint64_t r = 0; r < run; ++r, ++pos) {
      if (value) {
        const std::size_t t = pos / plane;
        const std::size_t within = pos % plane;
        const std::size_t x = within / height;
        const std::size_t y = within % height;
        mask[t * plane + y * width + x] = 1;
      }
    }
    value ^= 1;
  }
  return mask;
}

void SourceSample::validate() const {
  if (id.empty()) throw DataError("source sample without id");
  if (description.empty()) throw DataError("source sample '" + id + "' has empty description");
  if (frames == 0 || height == 0 || width == 0) {
    throw DataError("source sample '" + id + "' has a zero dimension");
  }
  const std::uint64_t covered =
      std::accumulate(mask_counts.begin(), mask_counts.end(), std::uint64_t{0});
  if (covered != frames * height * width) {
    throw DataError("source sample '" + id + "': mask covers " + std::to_string(covered) +
                    " pixels, expected T*H*W = " + std::to_string(frames * height * width));
  }
}

void SamplerConfig::validate() const {
  if (!(anomaly_probability >= 0.0 && anomaly_probability <= 1.0)) {
    throw ConfigError("anomaly_probability must lie in [0, 1]");
  }
  if (max_categories < 1) throw ConfigError("max_categories must be at least 1");
}

CategoryPool::CategoryPool(std::span<const SourceSample> sources) {
  std::unordered_map<std::string, std::size_t> index;
  name_of_source_.reserve(sources.size());
  for (const auto& s : sources) {
    auto [it, inserted] = index.emplace(s.description, names_.size());
    if (inserted) names_.push_back(s.description);
    name_of_source_.push_back(it->second);
  }
}

std::size_t CategoryPool::available_for(std::size_t i) const {
  require(i < name_of_source_.size(), "sample index out of range");
  return names_.size() - 1;
}

std::vector<std::string> CategoryPool::draw(std::size_t i, std::size_t count, Rng& rng) const {
  const std::size_t available = available_for(i);
  if (count > available) {
    throw CategoryPoolExhausted("sample " + std::to_string(i) + " needs " +
                                std::to_string(count) + " irrelevant categories, only " +
                                std::to_string(available) + " distinct ones exist");
  }
  const std::size_t own = name_of_source_[i];
  // Floyd's subset selection over the pool with the own description removed.
  std::vector<std::size_t> picked;
  picked.reserve(count);
  std::unordered_set<std::size_t> seen;
  for (std::size_t j = available - count; j < available; ++j) {
    const auto t = static_cast<std::size_t>(rng.uniform_index(j + 1));
    const std::size_t choice = seen.contains(t) ? j : t;
    seen.insert(choice);
    picked.push_back(choice);
  }
  rng.shuffle(picked);
  std::vector<std::string> out;
  out.reserve(count);
  for (std::size_t slot : picked) out.push_back(names_[slot < own ? slot : slot + 1]);
  return out;
}

std::vector<std::string> sample_irrelevant(std::span<const SourceSample> sources, std::size_t i,
                                           std::size_t k_e, Rng& rng) {
  require(k_e >= 1, "K_E must be at least 1");
  return CategoryPool(sources).draw(i, k_e - 1, rng);
}

ExposureSample assemble_exposure(const SourceSample& sample,
                                 std::span<const std::string> irrelevant, bool anomalous,
                                 Rng& rng, NormalBranch branch) {
  for (const auto& c : irrelevant) {
    require(c != sample.description, "irrelevant categories must exclude the own description");
  }
  ExposureSample out;
  out.base = sample;
  out.is_anomalous = anomalous;
  if (anomalous) {
    out.categories.assign(irrelevant.begin(), irrelevant.end());
    out.categories.push_back(sample.description);
    rng.shuffle(out.categories);
  } else if (branch == NormalBranch::kProse) {
    out.categories.assign(irrelevant.begin(), irrelevant.end());
    rng.shuffle(out.categories);
  } else {
    out.categories = {sample.description};
  }
  out.frame_labels.assign(sample.frames, anomalous ? 1 : 0);
  out.k_e = out.categories.size();
  return out;
}

ExposureSample designate(const SourceSample& sample, std::span<const std::string> irrelevant,
                         double p, Rng& rng, NormalBranch branch) {
  const bool anomalous = rng.bernoulli(p);
  return assemble_exposure(sample, irrelevant, anomalous, rng, branch);
}

std::vector<ExposureSample> build_exposure_dataset(std::span<const SourceSample> sources,
                                                   const SamplerConfig& config) {
  config.validate();
  std::unordered_set<std::string> ids;
  for (const auto& s : sources) {
    s.validate();
    if (!ids.insert(s.id).second) throw DataError("duplicate sample id '" + s.id + "'");
  }
  const CategoryPool pool(sources);
  if (sources.size() < 2 || pool.distinct() < 2) {
    throw DataError("the sampler needs at least 2 sources with 2 distinct descriptions");
  }

  std::vector<ExposureSample> out;
  out.reserve(sources.size());
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const std::uint64_t sub_seed = splitmix64(config.seed ^ static_cast<std::uint64_t>(i));
    Rng rng(sub_seed);
    const std::size_t k_e = 1 + static_cast<std::size_t>(rng.uniform_index(config.max_categories));
    const bool anomalous = rng.bernoulli(config.anomaly_probability);
    std::size_t needed = k_e - 1;
    if (!anomalous) needed = config.normal_branch == NormalBranch::kProse ? k_e : 0;
    const auto irrelevant = pool.draw(i, needed, rng);
    out.push_back(assemble_exposure(sources[i], irrelevant, anomalous, rng, config.normal_branch));
    out.back().sub_seed = sub_seed;
  }
  return out;
}

std::vector<std::uint8_t> pixel_target(const ExposureSample& sample) {
  const auto& b = sample.base;
  if (!sample.is_anomalous) return std::vector<std::uint8_t>(b.frames * b.height * b.width, 0);
  return b.mask();
}

nlohmann::json to_json(const SourceSample& s) {
  return {
      {"id", s.id},
      {"visual_ref", s.visual_ref},
      {"frames", s.frames},
      {"height", s.height},
      {"width", s.width},
      {"mask", {{"counts", s.mask_counts}}},
      {"description", s.description},
  };
}

SourceSample source_from_json(const nlohmann::json& j) {
  SourceSample s;
  try {
    s.id = j.at("id").get<std::string>();
    s.visual_ref = j.value("visual_ref", "");
    s.frames = j.value("frames", std::size_t{1});
    s.height = j.at("height").get<std::size_t>();
    s.width = j.at("width").get<std::size_t>();
    s.mask_counts = j.at("mask").at("counts").get<std::vector<std::uint64_t>>();
    s.description = j.at("description").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed source sample: ") + e.what());
  }
  s.validate();
  return s;
}

nlohmann::json to_json(const ExposureSample& s, const SamplerConfig& config) {
  nlohmann::json j = to_json(s.base);
  j["categories"] = s.categories;
  j["frame_labels"] = s.frame_labels;
  j["is_anomalous"] = s.is_anomalous;
  j["k_e"] = s.k_e;
  j["seed"] = {{"base", config.seed}, {"sub_seed", hex64(s.sub_seed)}};
  return j;
}

ExposureSample exposure_from_json(const nlohmann::json& j) {
  ExposureSample s;
  s.base = source_from_json(j);
  try {
    s.categories = j.at("categories").get<std::vector<std::string>>();
    s.frame_labels = j.at("frame_labels").get<std::vector<std::uint8_t>>();
    s.is_anomalous = j.at("is_anomalous").get<bool>();
    s.k_e = j.at("k_e").get<std::size_t>();
    s.sub_seed = std::stoull(j.at("seed").at("sub_seed").get<std::string>(), nullptr, 16);
  } catch (const std::exception& e) {
    throw DataError(std::string("malformed exposure sample: ") + e.what());
  }
  return s;
}

std::vector<SourceSample> read_source_manifest(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  std::vector<SourceSample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    out.push_back(source_from_json(j));
  }
  return out;
}

std::string render_exposure_manifest(std::span<const ExposureSample> samples,
                                     const SamplerConfig& config) {
  std::string out;
  for (const auto& s : samples) {
    out += to_json(s, config).dump();
    out += '\n';
  }
  return out;
}

}  // namespace zsvad

// SPDX-FileCopyrightText: © 2026 The zsvad Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "zsvad/encoders.h"

#include <cmath>
#include <sstream>

#include "json.hpp"
#include "zsvad/errors.h"
#include "zsvad/tensor_io.h"

namespace zsvad {

FrameTensor FrameTensor::zeros(std::size_t t, std::size_t c, std::size_t h, std::size_t w) {
  return FrameTensor{t, c, h, w, std::vector<double>(t * c * h * w, 0.0)};
}

FrameTensor FrameTensor::slice(std::size_t begin, std::size_t count) const {
  require(begin + count <= frames, "frame slice out of range");
  const std::size_t per_frame = channels * height * width;
  FrameTensor out{count, channels, height, width, {}};
  out.data.assign(data.begin() + static_cast<std::ptrdiff_t>(begin * per_frame),
                  data.begin() + static_cast<std::ptrdiff_t>((begin + count) * per_frame));
  return out;
}

TokenSet VisionFeatures::tokens() const {
  require(!frames.empty(), "no vision features");
  const std::size_t np = patches();
  const std::size_t d = dim();
  Matrix stacked = Matrix::zeros(frames.size() * np, d);
  for (std::size_t t = 0; t < frames.size(); ++t) {
    require(frames[t].rows() == np && frames[t].cols() == d, "ragged vision features");
    for (std::size_t p = 0; p < np; ++p) {
      auto src = frames[t].row(p);
      std::copy(src.begin(), src.end(), stacked.row(t * np + p).begin());
    }
  }
  return TokenSet{std::move(stacked), std::array<std::size_t, 3>{frames.size(), grid_rows, grid_cols}};
}

VisionEncoder::VisionEncoder(const VisionEncoderConfig& config, std::size_t channels)
    : config_(config), channels_(channels) {
  require(config.patch_size >= 1 && config.dim >= 1 && channels >= 1,
          "vision encoder needs positive patch size, dim and channel count");
  Rng rng(config.seed);
  projection_ = gaussian_matrix(channels * config.patch_size * config.patch_size, config.dim, rng);
}

VisionFeatures VisionEncoder::encode(const FrameTensor& frames) const {
  const std::size_t p = config_.patch_size;
  require(frames.channels == channels_, "vision encoder built for " + std::to_string(channels_) +
                                            " channels, got " + std::to_string(frames.channels));
  require(frames.frames >= 1, "no frames to encode");
  require(frames.height >= p && frames.width >= p,
          "frame " + std::to_string(frames.height) + "x" + std::to_string(frames.width) +
              " smaller than patch size " + std::to_string(p));
  require(frames.data.size() == frames.frames * frames.channels * frames.height * frames.width,
          "frame tensor size mismatch");

  VisionFeatures out;
  out.grid_rows = (frames.height + p - 1) / p;
  out.grid_cols = (frames.width + p - 1) / p;
  const std::size_t fan_in = projection_.rows();
  std::vector<double> patch(fan_in);
  for (std::size_t t = 0; t < frames.frames; ++t) {
    Matrix feats = Matrix::zeros(out.patches(), config_.dim);
    for (std::size_t gy = 0; gy < out.grid_rows; ++gy) {
      for (std::size_t gx = 0; gx < out.grid_cols; ++gx) {
        std::size_t idx = 0;
        for (std::size_t c = 0; c < channels_; ++c) {
          for (std::size_t py = 0; py < p; ++py) {
            for (std::size_t px = 0; px < p; ++px, ++idx) {
              const std::size_t y = gy * p + py;
              const std::size_t x = gx * p + px;
              patch[idx] = (y < frames.height && x < frames.width) ? frames.at(t, c, y, x) : 0.0;
            }
          }
        }
        auto row = feats.row(gy * out.grid_cols + gx);
        for (std::size_t i = 0; i < fan_in; ++i) {
          if (patch[i] == 0.0) continue;
          auto w = projection_.row(i);
          for (std::size_t d = 0; d < config_.dim; ++d) row[d] += patch[i] * w[d];
        }
      }
    }
    out.frames.push_back(std::move(feats));
  }
  return out;
}

VisionFeatures encode_vision(const FrameTensor& frames, const VisionEncoderConfig& config) {
  return VisionEncoder(config, frames.channels).encode(frames);
}

CategoryFeatures encode_text(std::span<const std::string> categories, std::size_t dim,
                             std::uint64_t seed) {
  require(!categories.empty(), "encode_text: no categories");
  require(dim >= 1, "encode_text: dim must be positive");
  CategoryFeatures out{Matrix::zeros(categories.size(), dim), {}};
  for (std::size_t k = 0; k < categories.size(); ++k) {
    require(!categories[k].empty(), "encode_text: empty category string");
    Rng rng(splitmix64(fnv1a64(categories[k]) ^ seed));
    auto row = out.features.row(k);
    double norm2 = 0.0;
    for (double& v : row) {
      v = rng.normal();
      norm2 += v * v;
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& v : row) v *= inv;
    out.categories.push_back(categories[k]);
  }
  return out;
}

FrameTensor read_raw_video(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  if (bytes.size() < 32) throw DataError(path.string() + ": raw video header truncated");
  FrameTensor out;
  out.frames = get_u64_le(bytes.data());
  out.channels = get_u64_le(bytes.data() + 8);
  out.height = get_u64_le(bytes.data() + 16);
  out.width = get_u64_le(bytes.data() + 24);
  const std::uint64_t expected = out.frames * out.channels * out.height * out.width;
  if (bytes.size() - 32 != expected) {
    throw DataError(path.string() + ": raw video holds " + std::to_string(bytes.size() - 32) +
                    " bytes, header implies " + std::to_string(expected));
  }
  out.data.resize(expected);
  for (std::size_t i = 0; i < expected; ++i) out.data[i] = bytes[32 + i] / 255.0;
  return out;
}

void write_raw_video(const std::filesystem::path& path, const FrameTensor& frames) {
  std::vector<unsigned char> bytes;
  bytes.reserve(32 + frames.data.size());
  put_u64_le(bytes, frames.frames);
  put_u64_le(bytes, frames.channels);
  put_u64_le(bytes, frames.height);
  put_u64_le(bytes, frames.width);
  for (double v : frames.data) {
    const double clamped = std::min(1.0, std::max(0.0, v));
    bytes.push_back(static_cast<unsigned char>(std::lround(clamped * 255.0)));
  }
  write_file_bytes(path, bytes);
}

namespace {

// Next whitespace-delimited header token, skipping '#' comments.
std::string pnm_token(const std::vector<unsigned char>& bytes, std::size_t& pos) {
  for (;;) {
    while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
    if (pos < bytes.size() && bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  std::string token;
  while (pos < bytes.size() && !std::isspace(bytes[pos])) token.push_back(static_cast<char>(bytes[pos++]));
  return token;
}

}  // namespace

FrameTensor read_pnm(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  std::size_t pos = 0;
  const std::string magic = pnm_token(bytes, pos);
  std::size_t channels = 0;
  if (magic == "P5") {
    channels = 1;
  } else if (magic == "P6") {
    channels = 3;
  } else {
    throw DataError(path.string() + ": only binary PGM (P5) and PPM (P6) are supported");
  }
  std::size_t width = 0, height = 0, maxval = 0;
  try {
    width = std::stoul(pnm_token(bytes, pos));
    height = std::stoul(pnm_token(bytes, pos));
    maxval = std::stoul(pnm_token(bytes, pos));
  } catch (const std::exception&) {
    throw DataError(path.string() + ": malformed PNM header");
  }
  if (maxval == 0 || maxval > 255) throw DataError(path.string() + ": maxval must be 1..255");
  ++pos;  // single whitespace byte before the raster
  const std::size_t n = width * height * channels;
  if (bytes.size() < pos + n) throw DataError(path.string() + ": PNM raster truncated");
  FrameTensor out = FrameTensor::zeros(1, channels, height, width);
  for (std::size_t y = 0; y < height; ++y)
    for (std::size_t x = 0; x < width; ++x)
      for (std::size_t c = 0; c < channels; ++c)
        out.at(0, c, y, x) = bytes[pos + (y * width + x) * channels + c] / static_cast<double>(maxval);
  return out;
}

FrameTensor read_pnm_sequence(std::span<const std::filesystem::path> paths) {
  require(!paths.empty(), "empty PNM sequence");
  FrameTensor out = read_pnm(paths.front());
  for (std::size_t i = 1; i < paths.size(); ++i) {
    FrameTensor next = read_pnm(paths[i]);
    if (next.channels != out.channels || next.height != out.height || next.width != out.width) {
      throw DataError(paths[i].string() + ": frame shape differs from the first frame");
    }
    out.data.insert(out.data.end(), next.data.begin(), next.data.end());
    ++out.frames;
  }
  return out;
}

void write_vision_features(const std::filesystem::path& path, const VisionFeatures& features) {
  write_matrix(path, features.tokens().tokens);
  nlohmann::json meta = {{"frames", features.frame_count()},
                         {"grid_rows", features.grid_rows},
                         {"grid_cols", features.grid_cols},
                         {"dim", features.dim()}};
  write_text_file(path.string() + ".json", meta.dump(2) + "\n");
}

VisionFeatures read_vision_features(const std::filesystem::path& path) {
  const Matrix stacked = read_matrix(path);
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_text_file(path.string() + ".json"));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ".json: " + e.what());
  }
  VisionFeatures out;
  const std::size_t frames = meta.at("frames").get<std::size_t>();
  out.grid_rows = meta.at("grid_rows").get<std::size_t>();
  out.grid_cols = meta.at("grid_cols").get<std::size_t>();
  const std::size_t np = out.patches();
  if (frames * np != stacked.rows()) {
    throw DataError(path.string() + ": feature rows do not match frames x grid");
  }
  for (std::size_t t = 0; t < frames; ++t) {
    std::vector<std::size_t> rows(np);
    for (std::size_t p = 0; p < np; ++p) rows[p] = t * np + p;
    out.frames.push_back(stacked.gather_rows(rows));
  }
  return out;
}

}  // namespace zsvad

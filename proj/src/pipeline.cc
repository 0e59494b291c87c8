// SPDX-FileCopyrightText: © 2026 The zsvad Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "zsvad/pipeline.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <exception>
#include <set>
#include <sstream>
#include <thread>

#include "zsvad/errors.h"
#include "zsvad/exposure_sampler.h"
#include "zsvad/projector.h"
#include "zsvad/tensor_io.h"
#include "zsvad/token_compression.h"
#include "zsvad/transformer.h"

namespace zsvad {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Oracle preset constants.
constexpr double kOracleGain = 10.0;
constexpr double kOracleAnchor = 50.0;
constexpr double kOracleSharpness = 400.0;

template <typename F>
auto stage(const char* name, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (Error& e) {
    if (e.module().empty()) e.set_module(name);
    throw;
  }
}

std::uint64_t digest_doubles(std::span<const double> values, std::uint64_t basis = 0xcbf29ce484222325ULL) {
  std::vector<unsigned char> bytes;
  bytes.reserve(values.size() * 8);
  for (double v : values) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, sizeof bits);
    put_u64_le(bytes, bits);
  }
  return fnv1a64(bytes, basis);
}

std::uint64_t digest_indices(std::span<const std::size_t> values, std::uint64_t basis) {
  std::vector<unsigned char> bytes;
  bytes.reserve(values.size() * 8);
  for (std::size_t v : values) put_u64_le(bytes, v);
  return fnv1a64(bytes, basis);
}

bool has_extension(const fs::path& p, std::initializer_list<const char*> exts) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return std::any_of(exts.begin(), exts.end(), [&](const char* e) { return ext == e; });
}

FrameTensor load_frames(const DetectItem& item) {
  const fs::path ref = item.visual_ref;
  FrameTensor frames;
  if (fs::is_directory(ref)) {
    std::vector<fs::path> paths;
    for (const auto& entry : fs::directory_iterator(ref)) {
      if (entry.is_regular_file() && has_extension(entry.path(), {".pgm", ".ppm"})) {
        paths.push_back(entry.path());
      }
    }
    std::sort(paths.begin(), paths.end());
    if (paths.empty()) throw DataError("no PGM/PPM frames in " + ref.string());
    frames = read_pnm_sequence(paths);
  } else if (has_extension(ref, {".pgm", ".ppm"})) {
    frames = read_pnm(ref);
  } else {
    frames = read_raw_video(ref);
  }
  if ((item.frames && item.frames != frames.frames) || (item.height && item.height != frames.height) ||
      (item.width && item.width != frames.width)) {
    throw DataError(item.video_id + ": manifest shape does not match " + ref.string());
  }
  return frames;
}

std::vector<std::string> split_command(const std::string& command) {
  std::istringstream in(command);
  std::vector<std::string> argv;
  for (std::string word; in >> word;) argv.push_back(word);
  return argv;
}

std::unique_ptr<SemanticProvider> make_provider(const PipelineConfig& config) {
  switch (config.provider) {
    case ProviderKind::kSynthetic:
      return std::make_unique<SyntheticProvider>(config.semantic_dim, config.vision_dim,
                                                 config.provider_seed());
    case ProviderKind::kFixture:
      return std::make_unique<FixtureProvider>(
          FixtureProvider::from_file(config.fixture_path, config.semantic_dim));
    case ProviderKind::kSubprocess:
      return std::make_unique<SubprocessProvider>(
          split_command(config.provider_command), config.semantic_dim,
          std::chrono::milliseconds(config.provider_timeout_ms));
  }
  throw ConfigError("unknown provider");
}

std::vector<BinaryMask> masks_of(const DetectItem& item) {
  std::vector<BinaryMask> out;
  if (item.mask_counts.empty()) return out;
  const auto flat = rle_decode(item.mask_counts, item.frames, item.height, item.width);
  const std::size_t per = item.height * item.width;
  for (std::size_t t = 0; t < item.frames; ++t) {
    out.push_back(BinaryMask{item.height, item.width,
                             std::vector<std::uint8_t>(flat.begin() + static_cast<std::ptrdiff_t>(t * per),
                                                       flat.begin() + static_cast<std::ptrdiff_t>((t + 1) * per))});
  }
  return out;
}

Matrix stack_rows(const std::vector<Matrix>& parts) {
  if (parts.empty()) return {};
  std::vector<double> data;
  std::size_t rows = 0;
  for (const auto& m : parts) {
    rows += m.rows();
    data.insert(data.end(), m.values().begin(), m.values().end());
  }
  return Matrix(rows, parts.front().cols(), std::move(data));
}

struct DetectContext {
  const PipelineConfig* config = nullptr;
  const SemanticProvider* provider = nullptr;
  const ProjectorWeights* projector = nullptr;
  const DecoderWeights* decoder = nullptr;
  const OracleWiring* oracle = nullptr;
};

VideoResult process_video(const DetectItem& item, const DetectContext& ctx) {
  const PipelineConfig& config = *ctx.config;
  VideoResult result;
  result.video_id = item.video_id;

  const VisionFeatures f_v = stage("encoders", [&] {
    VisionFeatures features;
    if (!item.features_ref.empty()) {
      features = read_vision_features(item.features_ref);
    } else {
      const FrameTensor frames = load_frames(item);
      if (ctx.oracle && frames.channels != 1) {
        throw DataError(item.video_id + ": oracle wiring expects single-channel frames");
      }
      features = VisionEncoder(config.vision_encoder(), frames.channels).encode(frames);
    }
    if (features.dim() != config.vision_dim) {
      throw DataError(item.video_id + ": vision features have width " + std::to_string(features.dim()) +
                      ", configured " + std::to_string(config.vision_dim));
    }
    return features;
  });
  const TokenSet tokens = f_v.tokens();
  const std::uint64_t vision_digest = digest_doubles(tokens.tokens.data());

  const CompressionResult compressed = stage("token_compression", [&] {
    if (tokens.size() < 2) throw DataError(item.video_id + ": at least two visual tokens are required");
    CompressionConfig cc = config.compression;
    cc.k = std::min(cc.k, tokens.size() - 1);
    return compress(tokens, cc);
  });
  std::uint64_t compression_digest = digest_doubles(compressed.compressed.data());
  compression_digest = digest_indices(compressed.background_indices, compression_digest);
  compression_digest = digest_indices(compressed.assignment, compression_digest);

  const SemanticFeature f_sem = stage("semantic_provider", [&] {
    if (item.categories.empty()) throw DataError(item.video_id + ": no categories to prompt with");
    Rng rng(splitmix64(config.seed ^ fnv1a64(item.video_id)));
    const PromptSpec prompt = render_prompt(item.categories, config.prompt_template, rng);
    return extract_semantic(item.video_id, compressed, prompt, *ctx.provider);
  });
  const std::uint64_t semantic_digest = digest_doubles(f_sem.values);

  const ProjectedPrompt projected = stage("projector", [&] {
    const CategoryFeatures f_c = encode_text(item.categories, config.text_dim, config.text_seed());
    return project(f_sem, frame_cross_attention(f_c, f_v, *ctx.projector), *ctx.projector);
  });
  const std::uint64_t projection_digest = digest_doubles(projected.f_proj.data());

  result.bundle = stage("decoder", [&] {
    const DecoderWeights* weights = ctx.decoder;
    if (ctx.oracle) weights = &ctx.oracle->decoders.at(item.video_id);
    return decode(projected, f_v, *weights);
  });
  const ScoreBundle& bundle = result.bundle;
  std::uint64_t decode_digest = digest_doubles(bundle.frame_logits);
  for (const auto& m : bundle.pixel_logits) decode_digest = digest_doubles(m.data(), decode_digest);

  result.record.video_id = item.video_id;
  result.record.frame_scores = bundle.frame_scores;
  result.record.frame_labels = item.frame_labels;
  if (!item.mask_counts.empty()) {
    result.record.pixel_scores = bundle.pixel_scores;
    result.record.pixel_labels = masks_of(item);
  }

  const Matrix& first = bundle.pixel_scores.front();
  json& s = result.summary;
  s["video_id"] = item.video_id;
  s["frames"] = bundle.frame_count();
  s["grid"] = {{"rows", f_v.grid_rows}, {"cols", f_v.grid_cols}};
  s["tokens"] = {{"L_z", tokens.size()},
                 {"D_z", tokens.tokens.cols()},
                 {"L_r", compressed.compressed.rows()},
                 {"k", std::min(config.compression.k, tokens.size() - 1)}};
  s["provider"] = f_sem.provider_id;
  s["prompt"] = f_sem.prompt.rendered;
  s["frame_logits"] = bundle.frame_logits;
  s["frame_scores"] = bundle.frame_scores;
  s["pixel"] = {{"rows", first.rows()}, {"cols", first.cols()}, {"upscale", config.upscale}};
  s["stage_digests"] = {{"vision", hex64(vision_digest)},
                        {"compression", hex64(compression_digest)},
                        {"semantic", hex64(semantic_digest)},
                        {"projection", hex64(projection_digest)},
                        {"decode", hex64(decode_digest)}};
  return result;
}

/// Runs `work(i)` for i in [0, n) on `jobs` threads; rethrows the failure
/// with the lowest index.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& work) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        work(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min(std::max<std::size_t>(1, jobs), std::max<std::size_t>(1, n));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::vector<EvalRecord> labeled_records(const std::vector<VideoResult>& videos, std::size_t& skipped) {
  std::vector<EvalRecord> records;
  skipped = 0;
  for (const auto& v : videos) {
    if (v.record.frame_labels.empty()) {
      ++skipped;
      continue;
    }
    records.push_back(v.record);
  }
  return records;
}

json report_json(const MetricsReport& report, const std::string& csv, std::size_t skipped,
                 const PipelineConfig& config) {
  json doc = to_json(report);
  if (skipped) doc["unlabeled_videos"] = skipped;
  doc["scores_csv_digest"] = hex64(fnv1a64(csv));
  seal(doc, config);
  return doc;
}

}  // namespace

const std::map<std::string, std::string>& stage_versions() {
  static const std::map<std::string, std::string> versions = {
      {"exposure_sampler", "1"}, {"encoders", "1"}, {"token_compression", "1"},
      {"semantic_provider", "1"}, {"projector", "1"}, {"decoder", "1"},
      {"metrics", "1"},
  };
  return versions;
}

void seal(json& doc, const PipelineConfig& config) {
  doc.erase("provenance");
  json prov = {{"config_hash", hex64(config_hash(config))}, {"stage_versions", stage_versions()}};
  doc["provenance"] = prov;
  doc["provenance"]["content_digest"] = hex64(fnv1a64(doc.dump()));
}

void verify_seal(const json& doc) {
  if (!doc.is_object() || !doc.contains("provenance") || !doc["provenance"].is_object() ||
      !doc["provenance"].contains("content_digest")) {
    throw DataError("document carries no provenance");
  }
  json copy = doc;
  const std::string claimed = copy["provenance"]["content_digest"].get<std::string>();
  copy["provenance"].erase("content_digest");
  if (hex64(fnv1a64(copy.dump())) != claimed) {
    throw DataError("provenance digest mismatch: content was modified");
  }
}

json to_json(const DetectItem& item) {
  json j;
  j["video_id"] = item.video_id;
  j["visual_ref"] = item.visual_ref;
  if (!item.features_ref.empty()) j["features_ref"] = item.features_ref;
  j["frames"] = item.frames;
  j["height"] = item.height;
  j["width"] = item.width;
  j["categories"] = item.categories;
  if (!item.frame_labels.empty()) j["frame_labels"] = item.frame_labels;
  if (!item.mask_counts.empty()) j["mask"] = {{"counts", item.mask_counts}};
  if (item.synthetic) {
    j["synthetic"] = {{"pattern", to_string(item.synthetic->pattern)},
                      {"background_level", item.synthetic->background_level},
                      {"amplitude", item.synthetic->amplitude},
                      {"noise", item.synthetic->noise}};
  }
  return j;
}

DetectItem detect_item_from_json(const json& j) {
  try {
    DetectItem item;
    item.video_id = j.at("video_id").get<std::string>();
    if (item.video_id.empty()) throw DataError("empty video_id");
    item.visual_ref = j.value("visual_ref", std::string());
    item.features_ref = j.value("features_ref", std::string());
    if (item.visual_ref.empty() && item.features_ref.empty()) {
      throw DataError(item.video_id + ": needs visual_ref or features_ref");
    }
    item.frames = j.value("frames", std::size_t{0});
    item.height = j.value("height", std::size_t{0});
    item.width = j.value("width", std::size_t{0});
    item.categories = j.value("categories", std::vector<std::string>{});
    for (const auto& c : item.categories)
      if (c.empty()) throw DataError(item.video_id + ": empty category");
    if (j.contains("frame_labels")) {
      for (const auto& v : j["frame_labels"]) {
        const int label = v.get<int>();
        if (label != 0 && label != 1) throw DataError(item.video_id + ": frame labels must be 0 or 1");
        item.frame_labels.push_back(static_cast<std::uint8_t>(label));
      }
      if (item.frames && item.frame_labels.size() != item.frames) {
        throw DataError(item.video_id + ": frame_labels length differs from frames");
      }
    }
    if (j.contains("mask")) {
      item.mask_counts = j.at("mask").at("counts").get<std::vector<std::uint64_t>>();
      if (!item.frames || !item.height || !item.width) {
        throw DataError(item.video_id + ": mask requires frames, height and width");
      }
      (void)rle_decode(item.mask_counts, item.frames, item.height, item.width);
    }
    if (j.contains("synthetic")) {
      const json& s = j["synthetic"];
      item.synthetic = SyntheticInfo{parse_pattern(s.value("pattern", std::string("uniform"))),
                                     s.at("background_level").get<double>(), s.value("amplitude", 0.0),
                                     s.value("noise", 0.0)};
    }
    return item;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed detect manifest entry: ") + e.what());
  }
}

std::vector<DetectItem> read_detect_manifest(const fs::path& path) {
  const std::string text = read_text_file(path);
  std::vector<DetectItem> items;
  std::istringstream in(text);
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    DetectItem item = detect_item_from_json(j);
    const fs::path base = path.parent_path();
    if (!item.visual_ref.empty() && fs::path(item.visual_ref).is_relative())
      item.visual_ref = (base / item.visual_ref).string();
    if (!item.features_ref.empty() && fs::path(item.features_ref).is_relative())
      item.features_ref = (base / item.features_ref).string();
    items.push_back(std::move(item));
  }
  std::sort(items.begin(), items.end(),
            [](const DetectItem& a, const DetectItem& b) { return a.video_id < b.video_id; });
  for (std::size_t i = 1; i < items.size(); ++i) {
    if (items[i].video_id == items[i - 1].video_id) {
      throw DataError("duplicate video_id '" + items[i].video_id + "'");
    }
  }
  std::set<std::string> names;
  for (const auto& item : items) {
    if (!names.insert(sanitize_id(item.video_id)).second) {
      throw DataError("video ids collide after sanitizing: '" + item.video_id + "'");
    }
  }
  return items;
}

std::string render_detect_manifest(const std::vector<DetectItem>& items) {
  std::string out;
  for (const auto& item : items) out += to_json(item).dump() + "\n";
  return out;
}

std::string sanitize_id(const std::string& id) {
  std::string out;
  for (unsigned char c : id) {
    out += (std::isalnum(c) || c == '-' || c == '_' || c == '.') ? static_cast<char>(c) : '_';
  }
  if (out.empty() || out == "." || out == "..") out = "_" + out;
  return out;
}

OracleProvider::OracleProvider(std::vector<double> brightness, std::map<std::string, double> background,
                               std::size_t dim)
    : brightness_(std::move(brightness)), background_(std::move(background)), dim_(dim) {
  require(dim_ >= 1, "oracle provider needs a positive dimension");
}

std::vector<double> OracleProvider::query(const SemanticRequest& request) const {
  const auto it = background_.find(std::string(request.sample_id));
  if (it == background_.end()) throw FixtureNotFound(std::string(request.sample_id));
  const Matrix& z = request.visual.compressed;
  if (z.cols() != brightness_.size()) throw ProviderError("oracle provider: token width mismatch");
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < z.rows(); ++r) {
    double v = 0.0;
    for (std::size_t c = 0; c < z.cols(); ++c) v += z(r, c) * brightness_[c];
    best = std::max(best, v - it->second);
  }
  std::vector<double> out(dim_, 0.0);
  out[0] = best;
  return out;
}

OracleWiring oracle_provider_wiring(const PipelineConfig& config, const VisionEncoder& encoder,
                                    const std::vector<DetectItem>& items) {
  for (const auto& item : items) {
    if (!item.synthetic) {
      throw ConfigError("oracle wiring refuses non-synthetic video '" + item.video_id + "'");
    }
    if (!item.features_ref.empty()) {
      throw ConfigError("oracle wiring needs raw frames, but '" + item.video_id + "' supplies features");
    }
  }
  const DecoderConfig dc = config.decoder();
  if (dc.model_dim < 3) throw ConfigError("oracle wiring needs projector.model_dim >= 3");
  if (dc.depth < 1) throw ConfigError("oracle wiring needs decoder.depth >= 1");
  if (config.patch_size % 4 != 0) {
    throw ConfigError("oracle wiring needs encoder.patch_size divisible by 4");
  }
  const Matrix& w = encoder.projection();
  const std::size_t n = w.rows();
  if (n > w.cols()) {
    throw ConfigError("oracle wiring needs channels * patch_size^2 <= encoder.vision_dim");
  }

  // Minimum-norm g with W g = (1/n) 1, so that f_v[p] . g is the patch mean.
  const Matrix gram = matmul_transposed(w, w);
  const std::vector<double> y = solve_linear(gram, std::vector<double>(n, 1.0 / static_cast<double>(n)));
  std::vector<double> g(w.cols(), 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < w.cols(); ++c) g[c] += w(i, c) * y[i];

  DecoderWeights base = DecoderWeights::zeros(dc);
  for (std::size_t c = 0; c < g.size(); ++c) base.image_proj(c, 0) = kOracleGain * g[c];
  base.dense_embed(0, 1) = kOracleAnchor;
  base.mask_token(0, 0) = 1.0;
  base.object_token(0, 1) = 1.0;
  base.hyper(0, 0) = 1.0;
  base.upscale_map(0, 0) = 1.0;
  // The object token's query picks out column 1 of its normalized self and
  // attends sharply over normalized column 0 of the patch embeddings; the
  // result lands in column 2, which the object head reads.
  const double object_norm = layer_norm(base.object_token)(0, 1);
  auto& attn = base.blocks[0].to_context;
  attn.wq(1, 0) = kOracleSharpness / object_norm;
  attn.wk(0, 0) = 1.0;
  attn.wv(0, 0) = 1.0;
  attn.wo(0, 2) = 1.0;
  base.object_head(2, 0) = 1.0;

  OracleWiring wiring;
  wiring.brightness = g;
  std::map<std::string, double> background;
  for (const auto& item : items) {
    DecoderWeights preset = base;
    preset.dense_embed(0, 0) = -kOracleGain * item.synthetic->background_level;
    wiring.decoders.emplace(item.video_id, std::move(preset));
    background.emplace(item.video_id, item.synthetic->background_level);
  }
  wiring.provider = std::make_unique<OracleProvider>(g, std::move(background), config.semantic_dim);
  return wiring;
}

std::vector<ExposureSample> run_sampler(const PipelineConfig& config, const fs::path& sources,
                                        const fs::path& output) {
  return stage("exposure_sampler", [&] {
    const auto src = read_source_manifest(sources);
    auto samples = build_exposure_dataset(src, config.sampler);
    write_text_file(output, render_exposure_manifest(samples, config.sampler));
    return samples;
  });
}

CompressionResult run_compress(const PipelineConfig& config, const fs::path& tokens_path,
                               const fs::path& output) {
  return stage("token_compression", [&] {
    TokenSet tokens{read_matrix(tokens_path), std::nullopt};
    if (tokens.size() < 2) throw DataError("token dump needs at least two tokens");
    CompressionConfig cc = config.compression;
    cc.k = std::min(cc.k, tokens.size() - 1);
    CompressionResult r = compress(tokens, cc);
    write_matrix(output, r.compressed);
    json side;
    side["L_z"] = tokens.size();
    side["D_z"] = tokens.tokens.cols();
    side["L_r"] = r.compressed.rows();
    side["k"] = cc.k;
    side["ratio"] = cc.ratio;
    side["epsilon"] = cc.epsilon;
    side["background_indices"] = r.background_indices;
    side["assignment"] = r.assignment;
    side["densities"] = r.densities;
    side["attention"] = r.attention;
    seal(side, config);
    write_text_file(output.string() + ".json", side.dump(2) + "\n");
    return r;
  });
}

DetectSummary run_detect(const PipelineConfig& config, const fs::path& manifest, const fs::path& out_dir,
                         const Notifier& notify) {
  config.validate();
  const std::vector<DetectItem> items = read_detect_manifest(manifest);

  std::optional<OracleWiring> oracle;
  std::unique_ptr<SemanticProvider> provider;
  if (config.oracle) {
    oracle = oracle_provider_wiring(config, VisionEncoder(config.vision_encoder(), 1), items);
  } else if (!items.empty()) {
    provider = stage("semantic_provider", [&] { return make_provider(config); });
  }

  const ProjectorWeights projector = stage("projector", [&] {
    return config.projector_weights.empty() ? ProjectorWeights::random(config.projector())
                                            : load_projector(config.projector_weights, config.projector());
  });
  const DecoderWeights decoder = stage("decoder", [&] {
    return config.decoder_weights.empty() ? DecoderWeights::random(config.decoder())
                                          : load_decoder(config.decoder_weights, config.decoder());
  });

  const bool untrained = !config.oracle && (config.projector_weights.empty() || config.decoder_weights.empty());
  const bool any_real = std::any_of(items.begin(), items.end(), [](const DetectItem& i) { return !i.synthetic; });
  if (notify && untrained && any_real) {
    notify("notice: untrained random weights on non-synthetic data; scores are not detections");
  }

  DetectContext ctx;
  ctx.config = &config;
  ctx.provider = oracle ? oracle->provider.get() : provider.get();
  ctx.projector = &projector;
  ctx.decoder = &decoder;
  ctx.oracle = oracle ? &*oracle : nullptr;

  DetectSummary summary;
  summary.videos.resize(items.size());
  parallel_for(items.size(), config.jobs,
               [&](std::size_t i) { summary.videos[i] = process_video(items[i], ctx); });

  const fs::path scores_dir = out_dir / "scores";
  fs::create_directories(scores_dir);
  for (auto& v : summary.videos) {
    const std::string name = sanitize_id(v.video_id);
    const Matrix pixels = stack_rows(v.bundle.pixel_scores);
    const auto bytes = encode_matrix(pixels);
    write_file_bytes(scores_dir / (name + ".pixels.bin"), bytes);
    v.summary["pixel"]["file"] = name + ".pixels.bin";
    v.summary["pixel"]["digest"] = hex64(fnv1a64(bytes));
    seal(v.summary, config);
    write_text_file(scores_dir / (name + ".json"), v.summary.dump(2) + "\n");
  }

  std::size_t skipped = 0;
  const auto records = stage("metrics", [&] { return labeled_records(summary.videos, skipped); });
  summary.report = stage("metrics", [&] { return evaluate(records); });
  if (skipped) summary.report.notes.push_back(std::to_string(skipped) + " unlabeled videos skipped");
  const std::string csv = render_score_csv(records);
  write_text_file(out_dir / "scores.csv", csv);
  write_text_file(out_dir / "metrics.json", report_json(summary.report, csv, skipped, config).dump(2) + "\n");
  return summary;
}

MetricsReport run_eval(const PipelineConfig& config, const fs::path& manifest,
                       const fs::path& scores_path, const fs::path& out_dir) {
  const fs::path scores_dir =
      fs::is_directory(scores_path / "scores") ? scores_path / "scores" : scores_path;
  const std::vector<DetectItem> items = read_detect_manifest(manifest);
  std::vector<EvalRecord> records;
  std::size_t skipped = 0;
  stage("metrics", [&] {
    for (const auto& item : items) {
      const std::string name = sanitize_id(item.video_id);
      json doc;
      try {
        doc = json::parse(read_text_file(scores_dir / (name + ".json")));
      } catch (const json::exception& e) {
        throw DataError(name + ".json: " + e.what());
      }
      verify_seal(doc);
      if (doc.value("video_id", std::string()) != item.video_id) {
        throw DataError(name + ".json belongs to another video");
      }
      if (item.frame_labels.empty()) {
        ++skipped;
        continue;
      }
      EvalRecord r;
      r.video_id = item.video_id;
      r.frame_scores = doc.at("frame_scores").get<std::vector<double>>();
      r.frame_labels = item.frame_labels;
      if (!item.mask_counts.empty()) {
        const auto bytes = read_file_bytes(scores_dir / doc.at("pixel").at("file").get<std::string>());
        if (hex64(fnv1a64(bytes)) != doc["pixel"].value("digest", std::string())) {
          throw DataError(name + ": pixel score file does not match its digest");
        }
        const Matrix pixels = decode_matrix(bytes);
        const std::size_t rows = doc["pixel"].at("rows").get<std::size_t>();
        const std::size_t t_count = r.frame_scores.size();
        if (pixels.rows() != rows * t_count) throw DataError(name + ": pixel score shape mismatch");
        for (std::size_t t = 0; t < t_count; ++t) {
          std::vector<std::size_t> idx(rows);
          for (std::size_t i = 0; i < rows; ++i) idx[i] = t * rows + i;
          r.pixel_scores.push_back(pixels.gather_rows(idx));
        }
        r.pixel_labels = masks_of(item);
      }
      r.validate();
      records.push_back(std::move(r));
    }
    return 0;
  });
  MetricsReport report = stage("metrics", [&] { return evaluate(records); });
  if (skipped) report.notes.push_back(std::to_string(skipped) + " unlabeled videos skipped");
  const std::string csv = render_score_csv(records);
  fs::create_directories(out_dir);
  write_text_file(out_dir / "scores.csv", csv);
  write_text_file(out_dir / "metrics.json", report_json(report, csv, skipped, config).dump(2) + "\n");
  return report;
}

std::vector<SyntheticScene> run_synth(const PipelineConfig& config, const SynthOptions& options,
                                      const fs::path& out_dir) {
  static const char* const kAdjectives[] = {"bright", "white", "glaring", "sudden", "moving", "pale"};
  static const char* const kNouns[] = {"rectangle", "block", "flash", "box", "patch", "panel"};
  const std::size_t vocabulary = std::size(kAdjectives) * std::size(kNouns);
  const auto scenes = synthetic_suite(options.count, options.frames, options.height, options.width, config.seed);
  fs::create_directories(out_dir / "videos");
  std::vector<DetectItem> items;
  std::string sources;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const SyntheticScene& scene = scenes[i];
    const SyntheticVideo video = generate_synthetic(scene);
    const std::string ref = "videos/" + scene.id + ".raw";
    write_raw_video(out_dir / ref, video.frames);

    std::vector<std::uint8_t> flat;
    for (const auto& m : video.masks) flat.insert(flat.end(), m.data.begin(), m.data.end());
    DetectItem item;
    item.video_id = scene.id;
    item.visual_ref = ref;
    item.frames = scene.frames;
    item.height = scene.height;
    item.width = scene.width;
    item.categories = {"bright rectangle", "sudden light"};
    item.frame_labels = video.frame_labels;
    item.mask_counts = rle_encode(flat, scene.frames, scene.height, scene.width);
    item.synthetic = SyntheticInfo{scene.pattern, scene.background_level, scene.amplitude, scene.noise};
    items.push_back(item);

    SourceSample src;
    src.id = scene.id;
    src.visual_ref = ref;
    src.frames = scene.frames;
    src.height = scene.height;
    src.width = scene.width;
    src.mask_counts = item.mask_counts;
    const std::size_t word = i % vocabulary;
    src.description = std::string(kAdjectives[word % std::size(kAdjectives)]) + " " +
                      kNouns[word / std::size(kAdjectives)];
    sources += to_json(src).dump() + "\n";
  }
  write_text_file(out_dir / "manifest.jsonl", render_detect_manifest(items));
  write_text_file(out_dir / "sources.jsonl", sources);

  PipelineConfig oracle_config = config;
  oracle_config.oracle = true;
  oracle_config.patch_size = 8;
  oracle_config.vision_dim = 64;
  // Keep the sampler feasible on these sources: a normal sample needs K_E
  // descriptions other than its own.
  const std::size_t distinct = std::min(scenes.size(), vocabulary);
  if (distinct >= 2) {
    oracle_config.sampler.max_categories = std::min(oracle_config.sampler.max_categories, distinct - 1);
  }
  write_text_file(out_dir / "synthetic.ini", render_config(oracle_config));
  return scenes;
}

}  // namespace zsvad

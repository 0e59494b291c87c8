// SPDX-FileCopyrightText: © 2026 The zsvad Authors
//
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "json.hpp"
#include "oracles.h"
#include "test_util.h"
#include "zsvad/config.h"
#include "zsvad/decoder.h"
#include "zsvad/errors.h"
#include "zsvad/exposure_sampler.h"
#include "zsvad/metrics.h"
#include "zsvad/pipeline.h"
#include "zsvad/projector.h"
#include "zsvad/tensor_io.h"
#include "zsvad/token_compression.h"

using namespace zsvad;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;
using zsvad::testing::max_abs_diff;
using zsvad::testing::random_matrix;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    if (pass) detail = why;
    pass = false;
  }
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

// Regularized upper incomplete gamma Q(a, x).
double gamma_q(double a, double x) {
  if (x <= 0.0) return 1.0;
  const double log_prefix = a * std::log(x) - x - std::lgamma(a);
  if (x < a + 1.0) {
    double term = 1.0 / a, sum = term;
    for (int n = 1; n < 1000; ++n) {
      term *= x / (a + n);
      sum += term;
      if (std::abs(term) < std::abs(sum) * 1e-16) break;
    }
    return 1.0 - sum * std::exp(log_prefix);
  }
  // Lentz continued fraction.
  const double tiny = 1e-300;
  double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
  for (int i = 1; i < 1000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return std::exp(log_prefix) * h;
}

// 1. Compression against the straight-line oracle.
Outcome compression_oracle() {
  Outcome out;
  Rng rng(1001);
  const std::size_t ks[] = {2, 4, 8};
  const double ratios[] = {0.1, 0.2, 0.5};
  double worst = 0.0, library_time = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = ks[trial % 3];
    const double ratio = ratios[(trial / 3) % 3];
    const std::size_t n = k + 1 + rng.uniform_index(128 - k);
    const std::size_t d = 1 + rng.uniform_index(32);
    Matrix z = random_matrix(n, d, rng);
    if (trial % 10 == 0) {
      // Repeated rows exercise the density guard and tie-breaking.
      for (std::size_t r = 1; r < n; r += 3) std::copy_n(z.row(0).begin(), d, z.row(r).begin());
    }
    const auto start = Clock::now();
    const CompressionResult got = compress(TokenSet{z, std::nullopt}, {k, ratio, 1e-12});
    library_time += seconds_since(start);
    const oracle::Compressed want = oracle::compress(z, k, ratio, 1e-12);
    if (got.background_indices != want.background || got.assignment != want.assignment) {
      out.fail("partition differs at trial " + std::to_string(trial));
      continue;
    }
    for (std::size_t i = 0; i < n; ++i)
      worst = std::max(worst, oracle::relative_error(got.densities[i], want.densities[i], 1.0));
    for (std::size_t b = 0; b < want.rows.size(); ++b)
      for (std::size_t c = 0; c < d; ++c)
        worst = std::max(worst, std::abs(got.compressed(b, c) - want.rows[b][c]));
  }
  if (worst > 1e-10) out.fail("max deviation " + fmt("%.3g", worst));
  if (library_time >= 10.0) out.fail("runtime " + fmt("%.2f s", library_time));
  if (out.pass) out.detail = "max deviation " + fmt("%.3g", worst) + ", " + fmt("%.3f s", library_time);
  return out;
}

// 2. Forwarded token count at ratio 0.2.
Outcome compression_count() {
  Outcome out;
  Rng rng(1002);
  for (std::size_t n = 2; n <= 400; ++n) {
    const std::size_t want = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(0.2 * n + 0.5)));
    if (compressed_length(n, 0.2) != want) out.fail("L_z = " + std::to_string(n));
    if (n <= 80) {
      const auto r = compress(TokenSet{random_matrix(n, 3, rng), std::nullopt}, {1, 0.2, 1e-12});
      if (r.compressed.rows() != want) out.fail("compress rows at L_z = " + std::to_string(n));
    }
  }
  if (out.pass) out.detail = "L_z in [2, 400]";
  return out;
}

// 3. Duplicate tokens.
Outcome density_guard() {
  Outcome out;
  Rng rng(1003);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng.uniform_index(40);
    const std::size_t d = 1 + rng.uniform_index(8);
    Matrix z = random_matrix(1, d, rng);
    Matrix all = Matrix::zeros(n, d);
    const bool some_distinct = trial % 2 == 1;
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < d; ++c) all(r, c) = (some_distinct && r % 4 == 3) ? rng.normal() : z(0, c);
    const std::size_t k = 1 + rng.uniform_index(n - 1);
    const auto result = compress(TokenSet{all, std::nullopt}, {k, 0.5, 1e-12});
    const bool finite = result.compressed.all_finite() &&
                        std::all_of(result.densities.begin(), result.densities.end(),
                                    [](double v) { return std::isfinite(v); }) &&
                        std::all_of(result.attention.begin(), result.attention.end(),
                                    [](double v) { return std::isfinite(v); });
    if (!finite) out.fail("non-finite output at trial " + std::to_string(trial));
    if (!some_distinct && result.densities[0] != static_cast<double>(k) / 1e-12)
      out.fail("guard not taken at trial " + std::to_string(trial));
  }
  if (out.pass) out.detail = "50 duplicate-heavy sets";
  return out;
}

// 4. Exposure sampler statistics.
Outcome sampler_statistics() {
  Outcome out;
  std::vector<SourceSample> sources(10000);
  for (std::size_t i = 0; i < sources.size(); ++i) {
    sources[i].id = "s" + std::to_string(i);
    sources[i].frames = 1;
    sources[i].height = 2;
    sources[i].width = 2;
    sources[i].mask_counts = {4};
    sources[i].description = "description " + std::to_string(i % 64);
  }
  SamplerConfig cfg;
  cfg.anomaly_probability = 0.3;
  cfg.seed = 1004;
  if (SamplerConfig{}.max_categories != 30) out.fail("default max_categories != 30");
  const auto samples = build_exposure_dataset(sources, cfg);

  std::size_t anomalous = 0;
  std::vector<double> counts(30, 0.0);
  for (const auto& s : samples) {
    anomalous += s.is_anomalous;
    if (s.k_e < 1 || s.k_e > 30) {
      out.fail("K_E out of range");
      continue;
    }
    counts[s.k_e - 1] += 1.0;
    const bool contains = std::find(s.categories.begin(), s.categories.end(), s.base.description) !=
                          s.categories.end();
    if (contains != s.is_anomalous) out.fail("designation invariant broken for " + s.base.id);
  }
  const double n = static_cast<double>(samples.size());
  const double sigma = std::sqrt(n * 0.3 * 0.7);
  const double deviation = std::abs(static_cast<double>(anomalous) - 0.3 * n);
  if (deviation > 3.0 * sigma) out.fail("anomalous count " + std::to_string(anomalous));

  double chi2 = 0.0;
  const double expected = n / 30.0;
  for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
  const double p_value = gamma_q(29.0 / 2.0, chi2 / 2.0);
  if (!(p_value > 0.01)) out.fail("chi-square p " + fmt("%.4f", p_value));
  if (out.pass)
    out.detail = "anomalous " + std::to_string(anomalous) + " (|dev| " + fmt("%.2f", deviation / sigma) +
                 " sigma), chi-square p " + fmt("%.3f", p_value);
  return out;
}

// 5. Metric oracles, exact equality.
Outcome metric_oracles() {
  Outcome out;
  Rng rng(1005);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + rng.uniform_index(499);
    std::vector<double> s(n);
    std::vector<std::uint8_t> y(n);
    const bool ties = trial % 2 == 0;
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = ties ? static_cast<double>(rng.uniform_index(6)) / 5.0 : rng.uniform();
      y[i] = rng.bernoulli(0.35);
    }
    y[0] = 1;
    y[1] = 0;
    if (roc_auc(s, y) != oracle::auc(s, y)) out.fail("roc_auc trial " + std::to_string(trial));
    if (average_precision(s, y) != oracle::average_precision(s, y))
      out.fail("average_precision trial " + std::to_string(trial));

    // Pixel AUC with label masks at a finer resolution than the scores.
    const std::size_t frames = 1 + rng.uniform_index(2);
    const std::size_t rows = 2 + rng.uniform_index(9), cols = 2 + rng.uniform_index(9);
    const std::size_t up = 1 + rng.uniform_index(3);
    EvalRecord rec;
    rec.video_id = "v";
    std::vector<double> flat_scores;
    std::vector<std::uint8_t> flat_labels;
    for (std::size_t t = 0; t < frames; ++t) {
      Matrix sc = Matrix::zeros(rows, cols);
      for (double& v : sc.data()) v = ties ? static_cast<double>(rng.uniform_index(4)) : rng.uniform();
      BinaryMask m{rows * up, cols * up, std::vector<std::uint8_t>(rows * cols * up * up)};
      for (auto& v : m.data) v = rng.bernoulli(0.3);
      m.data[0] = 1;
      m.data[m.data.size() - 1] = 0;
      rec.frame_scores.push_back(rng.uniform());
      rec.frame_labels.push_back(static_cast<std::uint8_t>(t % 2));
      const auto labels = oracle::resample_labels(m.data, m.rows, m.cols, rows, cols);
      flat_scores.insert(flat_scores.end(), sc.data().begin(), sc.data().end());
      flat_labels.insert(flat_labels.end(), labels.begin(), labels.end());
      rec.pixel_scores.push_back(std::move(sc));
      rec.pixel_labels.push_back(std::move(m));
    }
    const bool both = std::count(flat_labels.begin(), flat_labels.end(), 1) > 0 &&
                      std::count(flat_labels.begin(), flat_labels.end(), 0) > 0;
    if (both && pixel_auc(std::vector<EvalRecord>{rec}) != oracle::auc(flat_scores, flat_labels))
      out.fail("pixel_auc trial " + std::to_string(trial));
  }
  if (out.pass) out.detail = "500 instances, half with ties";
  return out;
}

// 6. Loss gradients against central differences.
Outcome gradient_checks() {
  Outcome out;
  Rng rng(1006);
  double worst = 0.0;
  const auto check = [&](const std::function<LossValue(const std::vector<double>&)>& loss,
                         const std::vector<double>& x) {
    const LossValue analytic = loss(x);
    const auto f = [&](const std::vector<double>& v) { return loss(v).loss; };
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double numeric = oracle::central_difference(f, x, i, 1e-5);
      worst = std::max(worst, oracle::relative_error(analytic.grad[i], numeric, 1e-6));
    }
  };
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t n = 4 + rng.uniform_index(60);
    std::vector<double> x(n);
    std::vector<std::uint8_t> t(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = 6.0 * rng.uniform() - 3.0;
      t[i] = rng.bernoulli(0.3);
    }
    const double alpha = 0.25, gamma = 2.0;
    check([&](const std::vector<double>& v) { return focal_loss(v, t, alpha, gamma); }, x);
    check([&](const std::vector<double>& v) { return dice_loss(v, t); }, x);
  }
  if (worst >= 1e-4) out.fail("max relative error " + fmt("%.3g", worst));
  if (out.pass) out.detail = "25 instances each, max relative error " + fmt("%.3g", worst);
  return out;
}

// 7. Projector and decoder invariants.
Outcome model_invariants() {
  Outcome out;
  Rng rng(1007);
  double worst_perm = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    // Convexity: each attention output lies in the hull of the value rows
    // with nonnegative weights that sum to one.
    const std::size_t nq = 1 + rng.uniform_index(5), nk = 1 + rng.uniform_index(8), d = 1 + rng.uniform_index(6);
    const Matrix q = random_matrix(nq, d, rng, 3.0);
    const Matrix k = random_matrix(nk, d, rng, 3.0);
    const Matrix v = random_matrix(nk, d, rng, 3.0);
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    const Matrix weights = row_softmax(matmul_transposed(q, k), scale);
    const Matrix attn = cross_attention(q, k, v, scale);
    for (std::size_t r = 0; r < nq; ++r) {
      double total = 0.0;
      for (std::size_t j = 0; j < nk; ++j) {
        if (weights(r, j) < 0.0) out.fail("negative attention weight");
        total += weights(r, j);
      }
      if (std::abs(total - 1.0) > 1e-12) out.fail("attention weights do not sum to 1");
      for (std::size_t c = 0; c < d; ++c) {
        double lo = INFINITY, hi = -INFINITY;
        for (std::size_t j = 0; j < nk; ++j) {
          lo = std::min(lo, v(j, c));
          hi = std::max(hi, v(j, c));
        }
        if (attn(r, c) < lo - 1e-12 || attn(r, c) > hi + 1e-12) out.fail("attention leaves the hull");
      }
    }

    // Context permutation invariance of f_proj.
    ProjectorConfig pc;
    pc.category_dim = 6;
    pc.vision_dim = 5;
    pc.semantic_dim = 7;
    pc.latent_dim = 4;
    pc.hidden_dim = 8;
    pc.model_dim = 6;
    pc.queries = 5;
    pc.mlp_dim = 10;
    pc.seed = 2000 + trial;
    const ProjectorWeights pw = ProjectorWeights::random(pc);
    const std::size_t frames = 2 + rng.uniform_index(3);
    const std::size_t cats = 1 + rng.uniform_index(5);
    VisionFeatures f_v;
    f_v.grid_rows = 2;
    f_v.grid_cols = 2;
    for (std::size_t t = 0; t < frames; ++t) f_v.frames.push_back(random_matrix(4, pc.vision_dim, rng));
    CategoryFeatures f_c{random_matrix(cats, pc.category_dim, rng), {}};
    for (std::size_t i = 0; i < cats; ++i) f_c.categories.push_back("c" + std::to_string(i));
    SemanticFeature f_sem;
    for (std::size_t i = 0; i < pc.semantic_dim; ++i) f_sem.values.push_back(rng.normal());
    auto f_a = frame_cross_attention(f_c, f_v, pw);
    const ProjectedPrompt prompt = project(f_sem, f_a, pw);
    std::vector<std::size_t> perm(cats);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    for (auto& m : f_a) m = m.gather_rows(perm);
    worst_perm = std::max(worst_perm, max_abs_diff(prompt.f_proj, project(f_sem, f_a, pw).f_proj));

    // Frame permutation equivariance and output range of the decoder.
    DecoderConfig dc;
    dc.vision_dim = pc.vision_dim;
    dc.model_dim = pc.model_dim;
    dc.embed_dim = 4;
    dc.mlp_dim = 10;
    dc.upscale = 2;
    dc.seed = 3000 + trial;
    const DecoderWeights dw = DecoderWeights::random(dc);
    const ScoreBundle bundle = decode(prompt, f_v, dw);
    std::vector<std::size_t> fperm(frames);
    std::iota(fperm.begin(), fperm.end(), 0);
    rng.shuffle(fperm);
    VisionFeatures pv = f_v;
    for (std::size_t t = 0; t < frames; ++t) pv.frames[t] = f_v.frames[fperm[t]];
    const ScoreBundle permuted = decode(ProjectedPrompt{prompt.f_proj.gather_rows(fperm), {}}, pv, dw);
    for (std::size_t t = 0; t < frames; ++t) {
      if (permuted.frame_logits[t] != bundle.frame_logits[fperm[t]] ||
          max_abs_diff(permuted.pixel_logits[t], bundle.pixel_logits[fperm[t]]) != 0.0)
        out.fail("decoder not frame-equivariant at trial " + std::to_string(trial));
      const double fs_ = bundle.frame_scores[t];
      if (!(fs_ >= 0.0 && fs_ <= 1.0)) out.fail("frame score outside [0, 1]");
      for (double p : bundle.pixel_scores[t].data())
        if (!(p >= 0.0 && p <= 1.0)) out.fail("pixel score outside [0, 1]");
    }
  }
  if (worst_perm > 1e-10) out.fail("context permutation changes f_proj by " + fmt("%.3g", worst_perm));
  if (out.pass) out.detail = "100 trials, context permutation deviation " + fmt("%.3g", worst_perm);
  return out;
}

struct SuiteRun {
  Outcome end_to_end;
  double seconds = 0.0;
};

// 8 and 10. Synthetic suite end to end, oracle wiring and random weights.
SuiteRun synthetic_suite_run(const fs::path& root) {
  SuiteRun run;
  Outcome& out = run.end_to_end;
  const auto start = Clock::now();
  try {
    run_synth(PipelineConfig{}, SynthOptions{20, 16, 64, 64}, root / "suite");
    const PipelineConfig cfg = load_config(root / "suite" / "synthetic.ini");
    run_sampler(cfg, root / "suite" / "sources.jsonl", root / "suite" / "exposure.jsonl");
    const DetectSummary oracle_run = run_detect(cfg, root / "suite" / "manifest.jsonl", root / "oracle");
    run_eval(cfg, root / "suite" / "manifest.jsonl", root / "oracle", root / "oracle_eval");
    run.seconds = seconds_since(start);

    const auto& r = oracle_run.report;
    if (r.videos != 20) out.fail("scored " + std::to_string(r.videos) + " videos");
    if (!r.frame_auc || !(*r.frame_auc > 0.95)) out.fail("frame AUC " + fmt("%.4f", r.frame_auc.value_or(NAN)));
    if (!r.pixel_auc || !(*r.pixel_auc > 0.90)) out.fail("pixel AUC " + fmt("%.4f", r.pixel_auc.value_or(NAN)));

    PipelineConfig random_cfg = cfg;
    random_cfg.oracle = false;
    const DetectSummary random_run = run_detect(random_cfg, root / "suite" / "manifest.jsonl", root / "random");
    const auto metrics = nlohmann::json::parse(read_text_file(root / "random" / "metrics.json"));
    verify_seal(metrics);
    const auto& rr = random_run.report;
    const bool well_formed = rr.videos == 20 && rr.frames == 20 * 16 && rr.frame_auc && rr.pixel_auc &&
                             *rr.frame_auc >= 0.0 && *rr.frame_auc <= 1.0 && metrics.contains("frame_auc");
    if (!well_formed) out.fail("random-weights metrics malformed");
    if (out.pass)
      out.detail = "oracle frame AUC " + fmt("%.4f", *r.frame_auc) + ", pixel AUC " + fmt("%.4f", *r.pixel_auc) +
                   "; random weights frame AUC " + fmt("%.4f", *rr.frame_auc);
  } catch (const std::exception& e) {
    out.fail(e.what());
    run.seconds = seconds_since(start);
  }
  return run;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(ZSVAD_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

bool same_tree(const fs::path& a, const fs::path& b, std::string& why) {
  std::size_t files = 0;
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), a);
    if (!fs::exists(b / rel) || read_file_bytes(entry.path()) != read_file_bytes(b / rel)) {
      why = rel.string();
      return false;
    }
    ++files;
  }
  for (const auto& entry : fs::recursive_directory_iterator(b)) {
    if (entry.is_regular_file() && !fs::exists(a / fs::relative(entry.path(), b))) {
      why = fs::relative(entry.path(), b).string();
      return false;
    }
  }
  if (files == 0) why = "no output";
  return files > 0;
}

// 9. Byte-identical reruns of every subcommand.
Outcome determinism(const fs::path& root) {
  Outcome out;
  const std::string d = root.string();
  const std::string synth = " synth --count 20 --frames 16 --height 64 --width 64 -o ";
  const std::string cfg = " -c " + d + "/r1/synthetic.ini";
  fs::create_directories(root);
  Rng rng(1009);
  write_matrix(root / "tokens.bin", random_matrix(96, 16, rng));

  for (const char* tag : {"1", "2"}) {
    const std::string t = tag;
    if (run_cli(synth + d + "/r" + t) != 0) out.fail("synth exited nonzero");
    if (run_cli(cfg + " sample --sources " + d + "/r1/sources.jsonl -o " + d + "/sample" + t + "/exposure.jsonl") != 0)
      out.fail("sample exited nonzero");
    if (run_cli(" compress --tokens " + d + "/tokens.bin -o " + d + "/compress" + t + "/out.bin") != 0)
      out.fail("compress exited nonzero");
    if (run_cli(cfg + " detect --manifest " + d + "/r1/manifest.jsonl -o " + d + "/detect" + t) != 0)
      out.fail("detect exited nonzero");
    if (run_cli(cfg + " eval --manifest " + d + "/r1/manifest.jsonl --scores " + d + "/detect1 -o " + d + "/eval" + t) != 0)
      out.fail("eval exited nonzero");
  }
  for (const char* name : {"r", "sample", "compress", "detect", "eval"}) {
    std::string why;
    if (!same_tree(root / (std::string(name) + "1"), root / (std::string(name) + "2"), why))
      out.fail(std::string(name) + " differs: " + why);
  }
  if (out.pass) out.detail = "synth, sample, compress, detect, eval";
  return out;
}

void report(int number, const std::string& name, const Outcome& o, int& failures) {
  std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", number, name.c_str(), o.detail.c_str());
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

template <typename F>
Outcome guarded(F&& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    Outcome o;
    o.fail(std::string("exception: ") + e.what());
    return o;
  }
}

}  // namespace

int main() {
  const auto root = zsvad::testing::temp_dir("acceptance");
  int failures = 0;
  report(1, "compression oracle equivalence", guarded(compression_oracle), failures);
  report(2, "compressed token count", guarded(compression_count), failures);
  report(3, "density guard on duplicates", guarded(density_guard), failures);
  report(4, "exposure sampler statistics", guarded(sampler_statistics), failures);
  report(5, "metric oracle equivalence", guarded(metric_oracles), failures);
  report(6, "loss gradient checks", guarded(gradient_checks), failures);
  report(7, "projector and decoder invariants", guarded(model_invariants), failures);
  const SuiteRun suite = synthetic_suite_run(root);
  report(8, "synthetic end-to-end", suite.end_to_end, failures);
  report(9, "byte-identical reruns", guarded([&] { return determinism(root / "determinism"); }), failures);
  Outcome timing;
  if (!(suite.seconds < 60.0)) timing.fail(fmt("%.2f s", suite.seconds));
  else timing.detail = fmt("%.2f s", suite.seconds);
  report(10, "synthetic suite under 60 s", timing, failures);
  return failures == 0 ? 0 : 1;
}

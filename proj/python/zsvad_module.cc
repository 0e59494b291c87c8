// SPDX-FileCopyrightText: © 2026 The zsvad Authors
//
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>
#include <string>
#include <vector>

#include "zsvad/config.h"
#include "zsvad/decoder.h"
#include "zsvad/errors.h"
#include "zsvad/exposure_sampler.h"
#include "zsvad/metrics.h"
#include "zsvad/pipeline.h"
#include "zsvad/synthetic.h"
#include "zsvad/token_compression.h"

namespace py = pybind11;
using namespace zsvad;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using ByteArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const DoubleArray& a) {
  if (a.ndim() != 2) throw py::value_error("expected a 2-D array");
  const auto rows = static_cast<std::size_t>(a.shape(0));
  const auto cols = static_cast<std::size_t>(a.shape(1));
  return Matrix(rows, cols, std::vector<double>(a.data(), a.data() + rows * cols));
}

py::array_t<double> to_array(const Matrix& m) {
  py::array_t<double> out({m.rows(), m.cols()});
  std::memcpy(out.mutable_data(), m.data().data(), m.size() * sizeof(double));
  return out;
}

std::vector<double> to_vector(const DoubleArray& a) { return {a.data(), a.data() + a.size()}; }
std::vector<std::uint8_t> to_bytes(const ByteArray& a) { return {a.data(), a.data() + a.size()}; }

template <typename T>
py::array_t<T> vector_array(const std::vector<T>& v) {
  return py::array_t<T>(static_cast<py::ssize_t>(v.size()), v.data());
}

py::tuple loss_tuple(const LossValue& v) { return py::make_tuple(v.loss, vector_array(v.grad)); }

PipelineConfig make_config(const std::optional<std::filesystem::path>& path,
                           const std::vector<std::string>& overrides) {
  PipelineConfig config = path ? load_config(*path) : PipelineConfig{};
  for (const auto& o : overrides) apply_override(config, o);
  config.validate();
  return config;
}

py::dict report_dict(const MetricsReport& r) {
  return py::module_::import("json").attr("loads")(to_json(r).dump());
}

}  // namespace

PYBIND11_MODULE(zsvad, m) {
  m.doc() = "Zero-shot video anomaly detection toolkit";
  m.attr("__version__") = "0.1.0";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", error.ptr());
  py::register_exception<ProviderError>(m, "ProviderError", error.ptr());
  py::register_exception<DataError>(m, "DataError", error.ptr());
  py::register_exception<ContractViolation>(m, "ContractViolation", error.ptr());

  m.def("compressed_length", &compressed_length, py::arg("token_count"), py::arg("ratio"));

  m.def(
      "local_density",
      [](const DoubleArray& tokens, std::size_t k, double epsilon) {
        return vector_array(local_density(TokenSet{to_matrix(tokens), std::nullopt}, k, epsilon));
      },
      py::arg("tokens"), py::arg("k"), py::arg("epsilon") = 1e-12);

  m.def(
      "compress",
      [](const DoubleArray& tokens, std::size_t k, double ratio, double epsilon) {
        const auto r = compress(TokenSet{to_matrix(tokens), std::nullopt}, {k, ratio, epsilon});
        py::dict d;
        d["compressed"] = to_array(r.compressed);
        d["background_indices"] = vector_array(r.background_indices);
        d["assignment"] = vector_array(r.assignment);
        d["densities"] = vector_array(r.densities);
        d["attention"] = vector_array(r.attention);
        return d;
      },
      py::arg("tokens"), py::arg("k") = 8, py::arg("ratio") = 0.2, py::arg("epsilon") = 1e-12,
      "Compress an L_z x D_z token matrix; returns a dict of arrays.");

  m.def(
      "roc_auc", [](const DoubleArray& s, const ByteArray& y) { return roc_auc(to_vector(s), to_bytes(y)); },
      py::arg("scores"), py::arg("labels"));
  m.def(
      "average_precision",
      [](const DoubleArray& s, const ByteArray& y) { return average_precision(to_vector(s), to_bytes(y)); },
      py::arg("scores"), py::arg("labels"));

  m.def(
      "focal_loss",
      [](const DoubleArray& x, const ByteArray& t, double alpha, double gamma) {
        return loss_tuple(focal_loss(to_vector(x), to_bytes(t), alpha, gamma));
      },
      py::arg("logits"), py::arg("targets"), py::arg("alpha") = 0.25, py::arg("gamma") = 2.0,
      "Returns (loss, gradient).");
  m.def(
      "dice_loss",
      [](const DoubleArray& x, const ByteArray& t, double smooth) {
        return loss_tuple(dice_loss(to_vector(x), to_bytes(t), smooth));
      },
      py::arg("logits"), py::arg("targets"), py::arg("smooth") = 1.0);
  m.def(
      "bce_loss",
      [](const DoubleArray& x, const ByteArray& t) { return loss_tuple(bce_loss(to_vector(x), to_bytes(t))); },
      py::arg("logits"), py::arg("targets"));

  m.def(
      "rle_encode",
      [](const ByteArray& mask) {
        if (mask.ndim() != 3) throw py::value_error("expected a (frames, height, width) mask");
        return rle_encode(to_bytes(mask), mask.shape(0), mask.shape(1), mask.shape(2));
      },
      py::arg("mask"));
  m.def(
      "rle_decode",
      [](const std::vector<std::uint64_t>& counts, std::size_t frames, std::size_t height,
         std::size_t width) {
        const auto flat = rle_decode(counts, frames, height, width);
        py::array_t<std::uint8_t> out({frames, height, width});
        std::memcpy(out.mutable_data(), flat.data(), flat.size());
        return out;
      },
      py::arg("counts"), py::arg("frames"), py::arg("height"), py::arg("width"));

  m.def(
      "generate_synthetic",
      [](std::size_t frames, std::size_t height, std::size_t width, const std::string& pattern,
         double background_level, double amplitude, double noise, std::optional<py::dict> rect,
         std::uint64_t seed) {
        SyntheticScene s;
        s.frames = frames;
        s.height = height;
        s.width = width;
        s.pattern = parse_pattern(pattern);
        s.background_level = background_level;
        s.amplitude = amplitude;
        s.noise = noise;
        s.seed = seed;
        if (rect) {
          PlantedRect r;
          const py::dict& d = *rect;
          r.x = d["x"].cast<std::size_t>();
          r.y = d["y"].cast<std::size_t>();
          r.width = d["width"].cast<std::size_t>();
          r.height = d["height"].cast<std::size_t>();
          if (d.contains("dx")) r.dx = d["dx"].cast<std::int64_t>();
          if (d.contains("dy")) r.dy = d["dy"].cast<std::int64_t>();
          if (d.contains("first_frame")) r.first_frame = d["first_frame"].cast<std::size_t>();
          r.frame_count = d.contains("frame_count") ? d["frame_count"].cast<std::size_t>() : frames;
          if (d.contains("level")) r.level = d["level"].cast<double>();
          s.rect = r;
        }
        const SyntheticVideo v = generate_synthetic(s);
        py::array_t<double> video({frames, height, width});
        std::memcpy(video.mutable_data(), v.frames.data.data(), v.frames.data.size() * sizeof(double));
        py::array_t<std::uint8_t> masks({frames, height, width});
        for (std::size_t t = 0; t < frames; ++t)
          std::memcpy(masks.mutable_data() + t * height * width, v.masks[t].data.data(), height * width);
        return py::make_tuple(video, vector_array(v.frame_labels), masks);
      },
      py::arg("frames") = 16, py::arg("height") = 64, py::arg("width") = 64,
      py::arg("pattern") = "uniform", py::arg("background_level") = 0.3, py::arg("amplitude") = 0.1,
      py::arg("noise") = 0.02, py::arg("rect") = py::none(), py::arg("seed") = 0,
      "Returns (frames, frame_labels, masks).");

  m.def(
      "synth",
      [](const std::filesystem::path& out_dir, std::size_t count, std::size_t frames, std::size_t height,
         std::size_t width, const std::optional<std::filesystem::path>& config,
         const std::vector<std::string>& overrides) {
        run_synth(make_config(config, overrides), SynthOptions{count, frames, height, width}, out_dir);
      },
      py::arg("out_dir"), py::arg("count") = 20, py::arg("frames") = 16, py::arg("height") = 64,
      py::arg("width") = 64, py::arg("config") = py::none(), py::arg("overrides") = std::vector<std::string>{});

  m.def(
      "detect",
      [](const std::filesystem::path& manifest, const std::filesystem::path& out_dir,
         const std::optional<std::filesystem::path>& config, const std::vector<std::string>& overrides) {
        const PipelineConfig cfg = make_config(config, overrides);
        DetectSummary summary;
        {
          py::gil_scoped_release release;
          summary = run_detect(cfg, manifest, out_dir);
        }
        return report_dict(summary.report);
      },
      py::arg("manifest"), py::arg("out_dir"), py::arg("config") = py::none(),
      py::arg("overrides") = std::vector<std::string>{}, "Runs detection; returns the metrics report.");

  m.def(
      "evaluate",
      [](const std::filesystem::path& manifest, const std::filesystem::path& scores,
         const std::filesystem::path& out_dir, const std::optional<std::filesystem::path>& config,
         const std::vector<std::string>& overrides) {
        return report_dict(run_eval(make_config(config, overrides), manifest, scores, out_dir));
      },
      py::arg("manifest"), py::arg("scores"), py::arg("out_dir"), py::arg("config") = py::none(),
      py::arg("overrides") = std::vector<std::string>{});
}

// SPDX-FileCopyrightText: © 2026 The zsvad Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "zsvad/tensor_io.h"

#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

#include "zsvad/errors.h"

namespace zsvad {

void put_u64_le(std::vector<unsigned char>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

std::uint64_t get_u64_le(const unsigned char* p) noexcept {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

std::vector<unsigned char> encode_matrix(const Matrix& m) {
  std::vector<unsigned char> out;
  out.reserve(16 + 8 * m.size());
  put_u64_le(out, m.rows());
  put_u64_le(out, m.cols());
  for (double v : m.data()) put_u64_le(out, std::bit_cast<std::uint64_t>(v));
  return out;
}

Matrix decode_matrix(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < 16) throw DataError("tensor file shorter than its 16-byte header");
  const std::uint64_t rows = get_u64_le(bytes.data());
  const std::uint64_t cols = get_u64_le(bytes.data() + 8);
  const std::uint64_t payload = bytes.size() - 16;
  if (cols != 0 && rows > payload / 8 / cols) throw DataError("tensor payload truncated");
  if (payload != rows * cols * 8) {
    throw DataError("tensor payload is " + std::to_string(payload) + " bytes, header implies " +
                    std::to_string(rows * cols * 8));
  }
  std::vector<double> data(rows * cols);
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i] = std::bit_cast<double>(get_u64_le(bytes.data() + 16 + 8 * i));
    if (!std::isfinite(data[i])) throw DataError("tensor contains non-finite value");
  }
  return Matrix(rows, cols, std::move(data));
}

std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("short write to " + path.string());
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  write_file_bytes(path, std::vector<unsigned char>(text.begin(), text.end()));
}

std::string read_text_file(const std::filesystem::path& path) {
  auto bytes = read_file_bytes(path);
  return {bytes.begin(), bytes.end()};
}

void write_matrix(const std::filesystem::path& path, const Matrix& m) {
  write_file_bytes(path, encode_matrix(m));
}

Matrix read_matrix(const std::filesystem::path& path) { return decode_matrix(read_file_bytes(path)); }

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace zsvad

#include "json.hpp"

namespace zsvad {

void save_named_tensors(const std::filesystem::path& dir,
                        const std::vector<std::pair<std::string, const Matrix*>>& tensors) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest = nlohmann::json::object();
  for (const auto& [name, m] : tensors) {
    const std::string file = name + ".bin";
    write_matrix(dir / file, *m);
    manifest[name] = {{"rows", m->rows()}, {"cols", m->cols()}, {"file", file}};
  }
  write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

void load_named_tensors(const std::filesystem::path& dir,
                        const std::vector<std::pair<std::string, Matrix*>>& tensors) {
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_text_file(dir / "manifest.json"));
  } catch (const nlohmann::json::exception& e) {
    throw DataError((dir / "manifest.json").string() + ": " + e.what());
  }
  for (const auto& [name, m] : tensors) {
    if (!manifest.contains(name)) throw DataError("weight '" + name + "' missing from manifest");
    const auto& entry = manifest.at(name);
    Matrix loaded = read_matrix(dir / entry.at("file").get<std::string>());
    if (loaded.rows() != m->rows() || loaded.cols() != m->cols()) {
      throw DataError("weight '" + name + "' has shape " + std::to_string(loaded.rows()) + "x" +
                      std::to_string(loaded.cols()) + ", expected " + std::to_string(m->rows()) +
                      "x" + std::to_string(m->cols()));
    }
    *m = std::move(loaded);
  }
}

}  // namespace zsvad

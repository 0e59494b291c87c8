// SPDX-FileCopyrightText: © 2026 The zsvad Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Shared binary tensor convention:
//   u64 rows, u64 cols (little-endian), then rows*cols f64 values
//   (little-endian IEEE-754, row-major).
// Higher-rank tensors are stored with their leading dimensions merged into
// `rows`; the logical shape travels in a JSON sidecar.

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "zsvad/numerics.h"

namespace zsvad {

std::vector<unsigned char> encode_matrix(const Matrix& m);
/// Throws DataError on truncated or oversized payloads and non-finite values.
Matrix decode_matrix(const std::vector<unsigned char>& bytes);

void write_matrix(const std::filesystem::path& path, const Matrix& m);
Matrix read_matrix(const std::filesystem::path& path);

std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path);
/// Creates missing parent directories.
void write_file_bytes(const std::filesystem::path& path, const std::vector<unsigned char>& bytes);
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

void put_u64_le(std::vector<unsigned char>& out, std::uint64_t v);
std::uint64_t get_u64_le(const unsigned char* p) noexcept;

/// Hex string of a 64-bit digest, zero padded to 16 characters.
std::string hex64(std::uint64_t v);

}  // namespace zsvad

namespace zsvad {

/// Writes each tensor to `<dir>/<name>.bin` and a `manifest.json` mapping
/// names to shapes and files.
void save_named_tensors(const std::filesystem::path& dir,
                        const std::vector<std::pair<std::string, const Matrix*>>& tensors);
/// Loads tensors listed in `<dir>/manifest.json`; every requested name must
/// exist with the shape the target already has.
void load_named_tensors(const std::filesystem::path& dir,
                        const std::vector<std::pair<std::string, Matrix*>>& tensors);

}  // namespace zsvad

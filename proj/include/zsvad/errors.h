// SPDX-FileCopyrightText: © 2026 The zsvad Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace zsvad {

enum class ErrorKind {
  kContract,
  kConfig,
  kData,
  kProvider,
};

/// Base of every error raised by the library. Carries a kind (which maps to
/// a CLI exit code) and, once it crosses a pipeline stage boundary, the name
/// of the module that raised it.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind), message_(message), full_(message) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& module() const noexcept { return module_; }
  const std::string& message() const noexcept { return message_; }

  void set_module(std::string module) {
    module_ = std::move(module);
    full_ = "[" + module_ + "] " + message_;
  }

  const char* what() const noexcept override { return full_.c_str(); }

  /// 2 config, 3 data (contract violations on inputs count as data), 4 provider.
  int exit_code() const noexcept;

 private:
  ErrorKind kind_;
  std::string module_;
  std::string message_;
  std::string full_;
};

class ContractViolation : public Error {
 public:
  explicit ContractViolation(const std::string& message)
      : Error(ErrorKind::kContract, "contract violation: " + message) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message) : Error(ErrorKind::kConfig, message) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& message) : Error(ErrorKind::kData, message) {}
};

class CategoryPoolExhausted : public DataError {
 public:
  explicit CategoryPoolExhausted(const std::string& message)
      : DataError("category pool exhausted: " + message) {}
};

class UndefinedMetric : public DataError {
 public:
  explicit UndefinedMetric(const std::string& message) : DataError(message) {}
};

class ProviderError : public Error {
 public:
  explicit ProviderError(const std::string& message) : Error(ErrorKind::kProvider, message) {}
};

class FixtureNotFound : public ProviderError {
 public:
  explicit FixtureNotFound(const std::string& sample_id)
      : ProviderError("fixture not found: " + sample_id) {}
};

inline int Error::exit_code() const noexcept {
  switch (kind_) {
    case ErrorKind::kConfig:
      return 2;
    case ErrorKind::kContract:
    case ErrorKind::kData:
      return 3;
    case ErrorKind::kProvider:
      return 4;
  }
  return 1;
}

/// Throws ContractViolation with `message` unless `condition` holds.
inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractViolation(message);
}

}  // namespace zsvad

// SPDX-FileCopyrightText: © 2026 The zsvad Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "zsvad/semantic_provider.h"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <sstream>

#include "json.hpp"
#include "zsvad/errors.h"
#include "zsvad/tensor_io.h"

namespace zsvad {

namespace {

constexpr std::string_view kTemplates[kPromptTemplateCount] = {
    "USER: Find the anomaly in this video. Anomaly types may contain {}. ASSISTANT: Sure, it is "
    "<SEG>.",
    "USER: Is anything abnormal happening in this clip? Candidate anomaly types: {}. ASSISTANT: "
    "Sure, it is <SEG>.",
};

}  // namespace

PromptSpec render_prompt(std::span<const std::string> categories, PromptTemplate template_id,
                         Rng& rng) {
  require(!categories.empty(), "render_prompt: no categories");
  PromptSpec spec;
  spec.template_id = template_id == PromptTemplate::kRandom
                         ? static_cast<PromptTemplate>(rng.uniform_index(kPromptTemplateCount))
                         : template_id;
  spec.categories.assign(categories.begin(), categories.end());
  std::string joined;
  for (std::size_t i = 0; i < categories.size(); ++i) {
    if (i) joined += ", ";
    joined += categories[i];
  }
  const std::string_view tmpl = kTemplates[static_cast<std::size_t>(spec.template_id)];
  const std::size_t slot = tmpl.find("{}");
  spec.rendered.append(tmpl.substr(0, slot));
  spec.rendered.append(joined);
  spec.rendered.append(tmpl.substr(slot + 2));
  return spec;
}

SemanticFeature extract_semantic(std::string_view sample_id, const CompressionResult& visual,
                                 const PromptSpec& prompt, const SemanticProvider& provider) {
  SemanticFeature feature;
  feature.values = provider.query(SemanticRequest{sample_id, visual, prompt});
  if (feature.values.size() != provider.dim()) {
    throw ProviderError(provider.id() + " returned " + std::to_string(feature.values.size()) +
                        " values, expected " + std::to_string(provider.dim()));
  }
  if (!std::all_of(feature.values.begin(), feature.values.end(),
                   [](double v) { return std::isfinite(v); })) {
    throw ProviderError(provider.id() + " returned a non-finite semantic feature");
  }
  feature.provider_id = provider.id();
  feature.prompt = prompt;
  return feature;
}

SyntheticProvider::SyntheticProvider(std::size_t dim, std::size_t token_dim, std::uint64_t seed)
    : dim_(dim), seed_(seed) {
  require(dim >= 1 && token_dim >= 1, "synthetic provider needs positive dimensions");
  Rng rng(seed);
  visual_map_ = gaussian_matrix(token_dim, dim, rng);
}

std::vector<double> SyntheticProvider::query(const SemanticRequest& request) const {
  const Matrix& z = request.visual.compressed;
  require(z.cols() == visual_map_.rows(), "synthetic provider: token width " +
                                              std::to_string(z.cols()) + ", expected " +
                                              std::to_string(visual_map_.rows()));
  require(z.rows() >= 1, "synthetic provider: no compressed tokens");
  const Matrix visual = matmul(z.mean_rows(), visual_map_);
  std::vector<double> out(visual.data().begin(), visual.data().end());

  std::vector<std::string> bag = request.prompt.categories;
  std::sort(bag.begin(), bag.end());
  if (!bag.empty()) {
    std::vector<double> text(dim_, 0.0);
    const double stddev = 1.0 / std::sqrt(static_cast<double>(dim_));
    for (const auto& category : bag) {
      Rng rng(splitmix64(fnv1a64(category) ^ seed_ ^ kBagSalt));
      for (double& v : text) v += rng.normal() * stddev;
    }
    for (std::size_t i = 0; i < dim_; ++i) out[i] += text[i] / static_cast<double>(bag.size());
  }
  return out;
}

double SyntheticProvider::lipschitz_bound() const {
  double total = 0.0;
  for (double v : visual_map_.data()) total += v * v;
  return std::sqrt(total);
}

FixtureProvider::FixtureProvider(std::map<std::string, std::vector<double>> vectors,
                                 std::size_t dim)
    : vectors_(std::move(vectors)), dim_(dim) {
  for (const auto& [id, v] : vectors_) {
    if (v.size() != dim_) {
      throw ProviderError("fixture '" + id + "' has " + std::to_string(v.size()) +
                          " values, expected " + std::to_string(dim_));
    }
  }
}

FixtureProvider FixtureProvider::from_file(const std::filesystem::path& path, std::size_t dim) {
  std::map<std::string, std::vector<double>> vectors;
  std::istringstream in(read_text_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      vectors[j.at("sample_id").get<std::string>()] = j.at("vector").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
      throw ProviderError(path.string() + ": malformed fixture line: " + e.what());
    }
  }
  return FixtureProvider(std::move(vectors), dim);
}

std::vector<double> FixtureProvider::query(const SemanticRequest& request) const {
  auto it = vectors_.find(std::string(request.sample_id));
  if (it == vectors_.end()) throw FixtureNotFound(std::string(request.sample_id));
  return it->second;
}

std::string render_fixture_file(const std::map<std::string, std::vector<double>>& vectors) {
  std::string out;
  for (const auto& [id, v] : vectors) {
    out += nlohmann::json{{"sample_id", id}, {"vector", v}}.dump();
    out += '\n';
  }
  return out;
}

SubprocessProvider::SubprocessProvider(std::vector<std::string> argv, std::size_t dim,
                                       std::chrono::milliseconds timeout)
    : argv_(std::move(argv)), dim_(dim), timeout_(timeout) {
  require(!argv_.empty(), "subprocess provider needs a command");
}

SubprocessProvider::~SubprocessProvider() {
  std::lock_guard lock(mu_);
  shutdown();
}

void SubprocessProvider::spawn() const {
  int fds[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM, 0, fds) != 0) {
    throw ProviderError(std::string("socketpair failed: ") + std::strerror(errno));
  }
  std::vector<char*> args;
  for (const auto& a : argv_) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);
  const pid_t pid = ::fork();
  if (pid < 0) {
    ::close(fds[0]);
    ::close(fds[1]);
    throw ProviderError(std::string("fork failed: ") + std::strerror(errno));
  }
  if (pid == 0) {
    ::dup2(fds[1], STDIN_FILENO);
    ::dup2(fds[1], STDOUT_FILENO);
    ::close(fds[0]);
    ::close(fds[1]);
    ::execvp(args[0], args.data());
    ::_exit(127);
  }
  ::close(fds[1]);
  ::fcntl(fds[0], F_SETFD, FD_CLOEXEC);
  fd_ = fds[0];
  pid_ = pid;
  buffer_.clear();
}

void SubprocessProvider::shutdown() const {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
  if (pid_ > 0) {
    int status = 0;
    for (int i = 0; i < 50; ++i) {
      if (::waitpid(pid_, &status, WNOHANG) != 0) {
        pid_ = -1;
        return;
      }
      ::usleep(10000);
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, &status, 0);
    pid_ = -1;
  }
}

std::string SubprocessProvider::read_line() const {
  const auto deadline = std::chrono::steady_clock::now() + timeout_;
  for (;;) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (remaining.count() <= 0) {
      shutdown();
      throw ProviderError("subprocess provider timed out after " +
                          std::to_string(timeout_.count()) + " ms");
    }
    pollfd pfd{fd_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, static_cast<int>(remaining.count()));
    if (ready < 0 && errno == EINTR) continue;
    if (ready == 0) continue;
    char chunk[4096];
    const ssize_t got = ::recv(fd_, chunk, sizeof chunk, 0);
    if (got <= 0) {
      shutdown();
      throw ProviderError("subprocess provider closed its output");
    }
    buffer_.append(chunk, static_cast<std::size_t>(got));
  }
}

std::vector<double> SubprocessProvider::query(const SemanticRequest& request) const {
  const Matrix& z = request.visual.compressed;
  nlohmann::json j = {
      {"sample_id", request.sample_id},
      {"prompt", request.prompt.rendered},
      {"categories", request.prompt.categories},
      {"template_id", static_cast<int>(request.prompt.template_id)},
      {"dim", dim_},
      {"tokens", {{"rows", z.rows()}, {"cols", z.cols()}, {"data", z.values()}}},
  };
  const std::string line = j.dump() + "\n";

  std::lock_guard lock(mu_);
  if (fd_ < 0) spawn();
  std::size_t sent = 0;
  while (sent < line.size()) {
    const ssize_t n = ::send(fd_, line.data() + sent, line.size() - sent, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      shutdown();
      throw ProviderError("subprocess provider is not accepting requests");
    }
    sent += static_cast<std::size_t>(n);
  }
  const std::string reply = read_line();
  try {
    const auto r = nlohmann::json::parse(reply);
    if (r.contains("error")) throw ProviderError("subprocess provider: " + r.at("error").dump());
    return r.at("vector").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ProviderError(std::string("subprocess provider sent a malformed reply: ") + e.what());
  }
}

}  // namespace zsvad

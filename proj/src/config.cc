// SPDX-FileCopyrightText: © 2026 The zsvad Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "zsvad/config.h"

#include <charconv>
#include <cstdio>
#include <functional>
#include <sstream>
#include <vector>

#include "zsvad/errors.h"
#include "zsvad/tensor_io.h"

namespace zsvad {

namespace {

struct Field {
  std::string section;
  std::string key;
  std::function<std::string(const PipelineConfig&)> get;
  std::function<void(PipelineConfig&, const std::string&)> set;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError(key + ": expected a nonnegative integer, got '" + v + "'");
  }
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double out = std::stod(v, &used);
    if (used == v.size()) return out;
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": expected a number, got '" + v + "'");
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
Field count_field(std::string section, std::string key, T PipelineConfig::*member) {
  return {section, key,
          [member](const PipelineConfig& c) { return std::to_string(c.*member); },
          [member, name = section + "." + key](PipelineConfig& c, const std::string& v) {
            c.*member = static_cast<T>(parse_u64(name, v));
          }};
}

Field real_field(std::string section, std::string key, std::function<double&(PipelineConfig&)> ref) {
  return {section, key,
          [ref](const PipelineConfig& c) { return format_double(ref(const_cast<PipelineConfig&>(c))); },
          [ref, name = section + "." + key](PipelineConfig& c, const std::string& v) {
            ref(c) = parse_double(name, v);
          }};
}

Field string_field(std::string section, std::string key, std::string PipelineConfig::*member) {
  return {section, key, [member](const PipelineConfig& c) { return c.*member; },
          [member](PipelineConfig& c, const std::string& v) { c.*member = v; }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back(count_field("pipeline", "seed", &PipelineConfig::seed));
    f.push_back(count_field("pipeline", "jobs", &PipelineConfig::jobs));
    f.push_back({"pipeline", "oracle",
                 [](const PipelineConfig& c) { return std::string(c.oracle ? "true" : "false"); },
                 [](PipelineConfig& c, const std::string& v) { c.oracle = parse_bool("pipeline.oracle", v); }});
    f.push_back({"pipeline", "provider",
                 [](const PipelineConfig& c) -> std::string {
                   switch (c.provider) {
                     case ProviderKind::kSynthetic: return "synthetic";
                     case ProviderKind::kFixture: return "fixture";
                     case ProviderKind::kSubprocess: return "subprocess";
                   }
                   return "synthetic";
                 },
                 [](PipelineConfig& c, const std::string& v) {
                   if (v == "synthetic") c.provider = ProviderKind::kSynthetic;
                   else if (v == "fixture") c.provider = ProviderKind::kFixture;
                   else if (v == "subprocess") c.provider = ProviderKind::kSubprocess;
                   else throw ConfigError("pipeline.provider: expected synthetic, fixture or subprocess");
                 }});
    f.push_back(string_field("pipeline", "fixture_path", &PipelineConfig::fixture_path));
    f.push_back(string_field("pipeline", "provider_command", &PipelineConfig::provider_command));
    f.push_back(count_field("pipeline", "provider_timeout_ms", &PipelineConfig::provider_timeout_ms));
    f.push_back({"pipeline", "prompt_template",
                 [](const PipelineConfig& c) -> std::string {
                   if (c.prompt_template == PromptTemplate::kRandom) return "random";
                   return std::to_string(static_cast<int>(c.prompt_template));
                 },
                 [](PipelineConfig& c, const std::string& v) {
                   if (v == "random") c.prompt_template = PromptTemplate::kRandom;
                   else if (v == "0") c.prompt_template = PromptTemplate::kFindAnomaly;
                   else if (v == "1") c.prompt_template = PromptTemplate::kAnomalyTypes;
                   else throw ConfigError("pipeline.prompt_template: expected 0, 1 or random");
                 }});
    f.push_back(string_field("pipeline", "projector_weights", &PipelineConfig::projector_weights));
    f.push_back(string_field("pipeline", "decoder_weights", &PipelineConfig::decoder_weights));

    f.push_back(real_field("sampler", "anomaly_probability",
                           [](PipelineConfig& c) -> double& { return c.sampler.anomaly_probability; }));
    f.push_back({"sampler", "max_categories",
                 [](const PipelineConfig& c) { return std::to_string(c.sampler.max_categories); },
                 [](PipelineConfig& c, const std::string& v) {
                   c.sampler.max_categories = parse_u64("sampler.max_categories", v);
                 }});
    f.push_back({"sampler", "normal_branch",
                 [](const PipelineConfig& c) -> std::string {
                   return c.sampler.normal_branch == NormalBranch::kProse ? "prose" : "equation";
                 },
                 [](PipelineConfig& c, const std::string& v) {
                   if (v == "prose") c.sampler.normal_branch = NormalBranch::kProse;
                   else if (v == "equation") c.sampler.normal_branch = NormalBranch::kEquation;
                   else throw ConfigError("sampler.normal_branch: expected prose or equation");
                 }});

    f.push_back({"compression", "k",
                 [](const PipelineConfig& c) { return std::to_string(c.compression.k); },
                 [](PipelineConfig& c, const std::string& v) { c.compression.k = parse_u64("compression.k", v); }});
    f.push_back(real_field("compression", "ratio", [](PipelineConfig& c) -> double& { return c.compression.ratio; }));
    f.push_back(real_field("compression", "epsilon", [](PipelineConfig& c) -> double& { return c.compression.epsilon; }));

    f.push_back(count_field("encoder", "patch_size", &PipelineConfig::patch_size));
    f.push_back(count_field("encoder", "vision_dim", &PipelineConfig::vision_dim));
    f.push_back(count_field("encoder", "text_dim", &PipelineConfig::text_dim));

    f.push_back(count_field("semantic", "dim", &PipelineConfig::semantic_dim));

    f.push_back(count_field("projector", "latent_dim", &PipelineConfig::latent_dim));
    f.push_back(count_field("projector", "hidden_dim", &PipelineConfig::hidden_dim));
    f.push_back(count_field("projector", "model_dim", &PipelineConfig::model_dim));
    f.push_back(count_field("projector", "queries", &PipelineConfig::queries));
    f.push_back(count_field("projector", "depth", &PipelineConfig::projector_depth));
    f.push_back(count_field("projector", "mlp_dim", &PipelineConfig::projector_mlp_dim));

    f.push_back(count_field("decoder", "embed_dim", &PipelineConfig::embed_dim));
    f.push_back(count_field("decoder", "depth", &PipelineConfig::decoder_depth));
    f.push_back(count_field("decoder", "mlp_dim", &PipelineConfig::decoder_mlp_dim));
    f.push_back(count_field("decoder", "upscale", &PipelineConfig::upscale));

    f.push_back(real_field("loss", "seg", [](PipelineConfig& c) -> double& { return c.loss.seg; }));
    f.push_back(real_field("loss", "focal", [](PipelineConfig& c) -> double& { return c.loss.focal; }));
    f.push_back(real_field("loss", "dice", [](PipelineConfig& c) -> double& { return c.loss.dice; }));
    f.push_back(real_field("loss", "object", [](PipelineConfig& c) -> double& { return c.loss.object; }));
    f.push_back(real_field("loss", "focal_alpha", [](PipelineConfig& c) -> double& { return c.loss.focal_alpha; }));
    f.push_back(real_field("loss", "focal_gamma", [](PipelineConfig& c) -> double& { return c.loss.focal_gamma; }));
    return f;
  }();
  return table;
}

void set_field(PipelineConfig& config, const std::string& section, const std::string& key,
               const std::string& value) {
  for (const auto& f : fields()) {
    if (f.section == section && f.key == key) {
      f.set(config, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + section + "." + key + "'");
}

}  // namespace

void PipelineConfig::validate() const {
  if (jobs < 1) throw ConfigError("pipeline.jobs must be at least 1");
  if (provider == ProviderKind::kFixture && fixture_path.empty() && !oracle) {
    throw ConfigError("pipeline.fixture_path is required for the fixture provider");
  }
  if (provider == ProviderKind::kSubprocess && provider_command.empty() && !oracle) {
    throw ConfigError("pipeline.provider_command is required for the subprocess provider");
  }
  sampler.validate();
  if (compression.k < 1) throw ConfigError("compression.k must be at least 1");
  if (!(compression.ratio > 0.0 && compression.ratio <= 1.0)) {
    throw ConfigError("compression.ratio must lie in (0, 1]");
  }
  if (!(compression.epsilon > 0.0)) throw ConfigError("compression.epsilon must be positive");
  for (auto [name, v] : {std::pair{"encoder.patch_size", patch_size},
                         {"encoder.vision_dim", vision_dim},
                         {"encoder.text_dim", text_dim},
                         {"semantic.dim", semantic_dim},
                         {"projector.latent_dim", latent_dim},
                         {"projector.hidden_dim", hidden_dim},
                         {"projector.model_dim", model_dim},
                         {"projector.queries", queries},
                         {"projector.mlp_dim", projector_mlp_dim},
                         {"decoder.embed_dim", embed_dim},
                         {"decoder.mlp_dim", decoder_mlp_dim},
                         {"decoder.upscale", upscale}}) {
    if (v < 1) throw ConfigError(std::string(name) + " must be positive");
  }
  try {
    loss.validate();
  } catch (const ContractViolation& e) {
    throw ConfigError(e.message());
  }
}

VisionEncoderConfig PipelineConfig::vision_encoder() const {
  return {patch_size, vision_dim, splitmix64(seed ^ 0x01)};
}
std::uint64_t PipelineConfig::text_seed() const { return splitmix64(seed ^ 0x02); }
std::uint64_t PipelineConfig::provider_seed() const { return splitmix64(seed ^ 0x03); }

ProjectorConfig PipelineConfig::projector() const {
  return {text_dim,  vision_dim, semantic_dim,    latent_dim,        hidden_dim,
          model_dim, queries,    projector_depth, projector_mlp_dim, splitmix64(seed ^ 0x04)};
}

DecoderConfig PipelineConfig::decoder() const {
  return {vision_dim, model_dim, embed_dim, decoder_depth, decoder_mlp_dim, upscale,
          splitmix64(seed ^ 0x05)};
}

PipelineConfig parse_config(const std::string& text) {
  PipelineConfig config;
  std::istringstream in(text);
  std::string line;
  std::string section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(line_no) + ": bad section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    if (section.empty()) throw ConfigError("line " + std::to_string(line_no) + ": key outside a section");
    set_field(config, section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  config.validate();
  return config;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const DataError& e) {
    throw ConfigError(e.message());
  }
  return parse_config(text);
}

std::string render_config(const PipelineConfig& config) {
  std::string out;
  std::string section;
  for (const auto& f : fields()) {
    if (f.section != section) {
      if (!section.empty()) out += "\n";
      section = f.section;
      out += "[" + section + "]\n";
    }
    out += f.key + " = " + f.get(config) + "\n";
  }
  return out;
}

void apply_override(PipelineConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
    throw ConfigError("override '" + assignment + "' must look like section.key=value");
  }
  set_field(config, trim(assignment.substr(0, dot)), trim(assignment.substr(dot + 1, eq - dot - 1)),
            trim(assignment.substr(eq + 1)));
}

std::uint64_t config_hash(const PipelineConfig& config) {
  PipelineConfig canonical = config;
  canonical.jobs = 1;
  return fnv1a64(render_config(canonical));
}

}  // namespace zsvad

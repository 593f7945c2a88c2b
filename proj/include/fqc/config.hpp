#pragma once

// Versioned JSON run configuration aggregating every tunable of the pipeline.
// Missing keys take their defaults; unknown keys are rejected.

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>

#include "fqc/dataio.hpp"
#include "fqc/error.hpp"
#include "fqc/fqs.hpp"
#include "fqc/pacing.hpp"

namespace fqc {

enum class FeatureHook { spectral_bands, source_embedding };

struct HarnessConfig {
  std::size_t batch_size = 32;
  double real_fraction = 0.5;  // share of each mini-batch drawn from real samples
  FeatureHook feature_hook = FeatureHook::spectral_bands;
  double init_scale = 0.01;  // std-dev of the initial toy weights

  void validate() const {
    if (batch_size < 2) fail(Errc::config, "batch_size must be at least 2");
    if (!(real_fraction > 0.0 && real_fraction < 1.0)) fail(Errc::config, "real_fraction must lie in (0,1)");
    if (!(init_scale >= 0.0)) fail(Errc::config, "init_scale must be non-negative");
  }
};

struct RunConfig {
  FqsConfig fqs;
  PacingConfig pacing;
  std::optional<std::size_t> freda_radius;  // unset: floor(min(H,W)/16) per image
  std::uint64_t seed = 0;
  HarnessConfig harness;
  fs::path manifest;
  fs::path embeddings;
  fs::path out_dir;

  void validate() const {
    fqs.validate();
    pacing.validate();
    harness.validate();
  }
};

namespace detail {

inline void reject_unknown(const json& obj, std::initializer_list<const char*> known, const std::string& where) {
  if (!obj.is_object()) fail(Errc::config, where + " must be an object");
  std::set<std::string> allowed(known.begin(), known.end());
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key)) fail(Errc::config, "unknown config key '" + where + "." + key + "'");
}

template <class T>
void read_opt(const json& obj, const char* key, T& out, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    fail(Errc::config, "config key '" + where + "." + key + "' has the wrong type");
  }
}

}  // namespace detail

inline RunConfig parse_config(const json& j, const fs::path& base_dir = {}) {
  detail::reject_unknown(j, {"version", "seed", "fqs", "pacing", "freda", "harness", "paths"}, "config");
  int version = 0;
  detail::read_opt(j, "version", version, "config");
  if (version != kFormatVersion) fail(Errc::config, "config version must be " + std::to_string(kFormatVersion));

  RunConfig cfg;
  detail::read_opt(j, "seed", cfg.seed, "config");

  if (auto it = j.find("fqs"); it != j.end()) {
    const json& f = *it;
    detail::reject_unknown(f, {"gamma", "alpha_f_init", "lr_max", "alpha_f_decay", "hardness_ceiling"}, "fqs");
    detail::read_opt(f, "gamma", cfg.fqs.gamma, "fqs");
    detail::read_opt(f, "alpha_f_init", cfg.fqs.alpha_f_init, "fqs");
    detail::read_opt(f, "lr_max", cfg.fqs.lr_max, "fqs");
    detail::read_opt(f, "alpha_f_decay", cfg.fqs.alpha_f_decay, "fqs");
    detail::read_opt(f, "hardness_ceiling", cfg.fqs.hardness_ceiling, "fqs");
  }
  if (auto it = j.find("pacing"); it != j.end()) {
    const json& p = *it;
    detail::reject_unknown(p, {"milestones", "total_epochs", "k_init", "alpha_beta", "easy_count", "selection",
                               "softmax_temperature"},
                           "pacing");
    detail::read_opt(p, "milestones", cfg.pacing.milestones, "pacing");
    detail::read_opt(p, "total_epochs", cfg.pacing.total_epochs, "pacing");
    if (auto k = p.find("k_init"); k != p.end() && !k->is_null()) {
      std::size_t v = 0;
      detail::read_opt(p, "k_init", v, "pacing");
      cfg.pacing.k_init = v;
    }
    detail::read_opt(p, "alpha_beta", cfg.pacing.alpha_beta, "pacing");
    detail::read_opt(p, "easy_count", cfg.pacing.easy_count, "pacing");
    std::string sel = "top_k";
    detail::read_opt(p, "selection", sel, "pacing");
    if (sel == "top_k")
      cfg.pacing.selection = SelectionMode::top_k;
    else if (sel == "softmax")
      cfg.pacing.selection = SelectionMode::softmax;
    else
      fail(Errc::config, "pacing.selection must be 'top_k' or 'softmax'");
    detail::read_opt(p, "softmax_temperature", cfg.pacing.softmax_temperature, "pacing");
  }
  if (auto it = j.find("freda"); it != j.end()) {
    detail::reject_unknown(*it, {"radius"}, "freda");
    if (auto r = it->find("radius"); r != it->end() && !r->is_null()) {
      std::size_t v = 0;
      detail::read_opt(*it, "radius", v, "freda");
      cfg.freda_radius = v;
    }
  }
  if (auto it = j.find("harness"); it != j.end()) {
    const json& h = *it;
    detail::reject_unknown(h, {"batch_size", "real_fraction", "feature_hook", "init_scale"}, "harness");
    detail::read_opt(h, "batch_size", cfg.harness.batch_size, "harness");
    detail::read_opt(h, "real_fraction", cfg.harness.real_fraction, "harness");
    detail::read_opt(h, "init_scale", cfg.harness.init_scale, "harness");
    std::string hook = "spectral_bands";
    detail::read_opt(h, "feature_hook", hook, "harness");
    if (hook == "spectral_bands")
      cfg.harness.feature_hook = FeatureHook::spectral_bands;
    else if (hook == "source_embedding")
      cfg.harness.feature_hook = FeatureHook::source_embedding;
    else
      fail(Errc::config, "harness.feature_hook must be 'spectral_bands' or 'source_embedding'");
  }
  if (auto it = j.find("paths"); it != j.end()) {
    detail::reject_unknown(*it, {"manifest", "embeddings", "out_dir"}, "paths");
    auto path_of = [&](const char* key) -> fs::path {
      std::string s;
      detail::read_opt(*it, key, s, "paths");
      if (s.empty()) return {};
      const fs::path p(s);
      return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
    };
    cfg.manifest = path_of("manifest");
    cfg.embeddings = path_of("embeddings");
    cfg.out_dir = path_of("out_dir");
  }
  cfg.validate();
  return cfg;
}

/// Relative paths inside the file resolve against the file's directory.
inline RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail(Errc::config, path.string() + ": " + e.what());
  }
  return parse_config(j, path.parent_path());
}

inline json config_to_json(const RunConfig& cfg) {
  return json{
      {"version", kFormatVersion},
      {"seed", cfg.seed},
      {"fqs",
       {{"gamma", cfg.fqs.gamma},
        {"alpha_f_init", cfg.fqs.alpha_f_init},
        {"lr_max", cfg.fqs.lr_max},
        {"alpha_f_decay", cfg.fqs.alpha_f_decay},
        {"hardness_ceiling", cfg.fqs.hardness_ceiling}}},
      {"pacing",
       {{"milestones", cfg.pacing.milestones},
        {"total_epochs", cfg.pacing.total_epochs},
        {"k_init", cfg.pacing.k_init ? json(*cfg.pacing.k_init) : json(nullptr)},
        {"alpha_beta", cfg.pacing.alpha_beta},
        {"easy_count", cfg.pacing.easy_count},
        {"selection", cfg.pacing.selection == SelectionMode::top_k ? "top_k" : "softmax"},
        {"softmax_temperature", cfg.pacing.softmax_temperature}}},
      {"freda", {{"radius", cfg.freda_radius ? json(*cfg.freda_radius) : json(nullptr)}}},
      {"harness",
       {{"batch_size", cfg.harness.batch_size},
        {"real_fraction", cfg.harness.real_fraction},
        {"feature_hook", cfg.harness.feature_hook == FeatureHook::spectral_bands ? "spectral_bands" : "source_embedding"},
        {"init_scale", cfg.harness.init_scale}}},
      {"paths",
       {{"manifest", cfg.manifest.string()},
        {"embeddings", cfg.embeddings.string()},
        {"out_dir", cfg.out_dir.string()}}}};
}

}  // namespace fqc

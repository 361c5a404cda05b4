#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace typicality {

enum class TextPrototype { Mean, Label };
enum class ClipApproach { Category, Mean, Appended, CrossModality };

std::string_view to_string(TextPrototype p);
std::string_view to_string(ClipApproach a);
/// Throws Error(Config) on unknown names.
TextPrototype parse_text_prototype(std::string_view name);
ClipApproach parse_clip_approach(std::string_view name);

struct StabilityConfig {
  std::string model;
  std::string category;
  std::size_t trials = 100;
  std::optional<std::uint64_t> seed;  // falls back to RunConfig::seed
};

/// A run described by a JSON config file. Relative paths are resolved against
/// the directory holding the config file.
///
///   {
///     "embeddings": "embeddings.jsonl",
///     "ratings": "ratings.csv",
///     "logits": "logits.csv",                  // optional
///     "supercategories": "supercategories.csv",  // optional
///     "text_models": ["minilm"],
///     "vision_models": ["alexnet"],
///     "text_prototype": "mean",                // or "label"
///     "clip": {"model": "clip-vit", "approaches": ["category", "mean"]},
///     "stability": {"model": "vgg19", "category": "Bird", "trials": 100, "seed": 7},
///     "output_dir": "out",
///     "seed": 0,
///     "jobs": 1
///   }
struct RunConfig {
  std::filesystem::path embeddings_path;
  std::filesystem::path ratings_path;
  std::optional<std::filesystem::path> logits_path;
  std::optional<std::filesystem::path> supercategories_path;
  std::vector<std::string> text_models;
  std::vector<std::string> vision_models;
  std::string clip_model;
  std::vector<ClipApproach> clip_approaches;
  TextPrototype text_prototype = TextPrototype::Mean;
  std::optional<StabilityConfig> stability;
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 0;
  std::size_t jobs = 1;

  bool wants_embeddings() const;
  /// Throws Error(Config) when an enabled evaluation lacks an input or trials == 0.
  void check() const;
};

/// Throws Error(Config) for unreadable or malformed files.
RunConfig load_run_config(const std::filesystem::path& path);
RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir);

/// Canonical JSON of the config without output_dir and jobs, which do not
/// affect results. Used for run manifests.
std::string config_snapshot(const RunConfig& config);

}  // namespace typicality

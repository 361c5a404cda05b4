#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "typicality/core.hpp"
#include "typicality/datastore.hpp"

namespace typicality::testing {

/// Planted typicality gradient. For each model and category a prototype p and
/// per-exemplar offsets d_k are drawn from N(0, I); exemplar of human rank k
/// (1 = most typical) gets image vectors
///
///   p + (k / 10) * d_k + sigma * e_i,    e_i ~ N(0, I)
///
/// and a single text vector of the same form. Human typicality is 1 - k/(E+1).
/// Small sigma makes cosine-to-prototype decrease with k; large sigma buries
/// the gradient in per-vector noise.
struct FixtureSpec {
  std::size_t categories = 27;
  std::size_t exemplars = 10;
  std::size_t images = 8;
  std::size_t dim = 128;
  double sigma = 0.1;
  std::uint64_t seed = 1;
  std::vector<std::string> text_models{"text_a"};
  std::vector<std::string> vision_models{"vision_a"};
  bool text_labels = true;  // emit category_label records for text models
  std::optional<std::string> clip_model;  // text + label + images + logits
};

struct Fixture {
  std::vector<EmbeddingRecord> records;
  std::vector<std::pair<ExemplarKey, double>> ratings;
  std::vector<std::pair<LogitKey, double>> logits;

  EmbeddingStore store() const { return EmbeddingStore::from_records(records); }
  RatingsTable ratings_table() const { return RatingsTable::from_entries(ratings); }
  LogitTable logit_table() const { return LogitTable::from_entries(logits); }
};

std::string category_name(std::size_t c);
std::string exemplar_name(std::size_t k);

Fixture make_planted_fixture(const FixtureSpec& spec);

struct FixturePaths {
  std::filesystem::path embeddings;
  std::filesystem::path ratings;
  std::filesystem::path logits;
};

/// Writes embeddings.jsonl, ratings.csv and (when present) logits.csv into dir.
FixturePaths write_fixture_files(const Fixture& fixture, const std::filesystem::path& dir);

/// Fresh empty directory under the system temp dir.
std::filesystem::path fresh_temp_dir(const std::string& name);

/// Reads a whole file.
std::string slurp(const std::filesystem::path& path);

}  // namespace typicality::testing

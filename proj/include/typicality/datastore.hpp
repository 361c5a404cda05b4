#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "typicality/core.hpp"

namespace typicality {

/// Read-only index over a validated embedding set.
class EmbeddingStore {
 public:
  /// Throws Error(Schema) when the set is empty or fails validation.
  static EmbeddingStore from_records(std::vector<EmbeddingRecord> records);

  std::vector<std::string> models() const;
  bool has_model(const std::string& model_id) const;
  /// Throws Error(UnknownModel).
  std::size_t dim_of(const std::string& model_id) const;

  /// Categories with at least one exemplar record of the given modality.
  std::vector<std::string> categories(const std::string& model_id, Modality modality) const;

  /// Single text embedding of an exemplar, if present.
  std::optional<Vector> text_vector(const std::string& model_id, const ExemplarKey& key) const;

  /// Text embedding of a category label, if present.
  std::optional<Vector> label_vector(const std::string& model_id,
                                     const std::string& category) const;

  /// Exemplar -> text embedding, for one category.
  std::map<std::string, Vector> text_vectors(const std::string& model_id,
                                             const std::string& category) const;

  /// Exemplar -> image embeddings sorted by image_id, for one category.
  std::map<std::string, std::vector<Vector>> image_vectors(const std::string& model_id,
                                                           const std::string& category) const;

  /// Image embeddings of one exemplar ordered by image_id.
  std::vector<Vector> images_of(const std::string& model_id, const ExemplarKey& key) const;

  /// All records in load order.
  const std::vector<EmbeddingRecord>& records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }

 private:
  struct ModelIndex {
    std::size_t dim = 0;
    std::map<ExemplarKey, std::size_t> text_exemplars;
    std::map<std::string, std::size_t> labels;
    // key -> (image_id -> record index); the inner map keeps image_id order.
    std::map<ExemplarKey, std::map<std::string, std::size_t>> images;
  };

  const ModelIndex& index_of(const std::string& model_id) const;

  std::vector<EmbeddingRecord> records_;
  std::map<std::string, ModelIndex> by_model_;
};

/// Image vectors for one exemplar, ordered by image_id; empty if none.
/// Throws Error(UnknownModel).
std::vector<Vector> exemplar_image_vectors(const EmbeddingStore& store,
                                           const std::string& model_id, const ExemplarKey& key);

/// Parses the line-delimited embeddings format without validating invariants.
/// Throws ParseError on malformed lines, Error(Io) if unreadable.
std::vector<EmbeddingRecord> parse_embeddings(const std::filesystem::path& path);
std::vector<EmbeddingRecord> parse_embeddings(std::istream& in);

/// parse_embeddings followed by validation and indexing.
EmbeddingStore load_embeddings(const std::filesystem::path& path);

/// Writes records in the embeddings format; reloading yields bitwise-equal vectors.
void write_embeddings(const std::vector<EmbeddingRecord>& records, std::ostream& out);
void write_embeddings(const std::vector<EmbeddingRecord>& records,
                      const std::filesystem::path& path);

/// CSV with header category,exemplar,typicality.
RatingsTable load_ratings(const std::filesystem::path& path);
RatingsTable parse_ratings(std::istream& in);

/// CSV with header model,category,exemplar,image_id,logit.
LogitTable load_logits(const std::filesystem::path& path);
LogitTable parse_logits(std::istream& in);

}  // namespace typicality

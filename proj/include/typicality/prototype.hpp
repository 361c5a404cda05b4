#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "typicality/core.hpp"

namespace typicality {

/// Dimension from which dot products switch to compensated summation.
inline constexpr std::size_t kCompensatedDim = 1024;

/// dot(a, b) / (|a| |b|), clamped to [-1, 1].
/// Throws Error(DimMismatch), Error(ZeroVector) or Error(NonFinite).
double cosine_similarity(const Vector& a, const Vector& b);

/// Coordinatewise mean of raw (un-normalized) vectors.
/// Throws Error(EmptyInput) or Error(DimMismatch).
Vector average_vector(std::span<const Vector> vectors);

/// Mean of per-exemplar vectors; each exemplar has weight one.
Vector mean_prototype(const std::map<std::string, Vector>& exemplar_vectors);

/// Text coordinates followed by image coordinates.
Vector appended_representation(const Vector& text, const Vector& image);

/// v / |v|. Throws Error(ZeroVector).
Vector unit_normalized(const Vector& v);

enum class PrototypeStrategy { MeanOfExemplars, CategoryLabel, Appended, CrossModal };

std::string_view to_string(PrototypeStrategy s);

/// Everything a strategy may need for one category. Which members are used:
///
///   MeanOfExemplars  exemplars
///   CategoryLabel    exemplars, label
///   Appended         exemplars (text), image_exemplars (averaged), label
///   CrossModal       logits
struct CategoryData {
  std::string category;
  std::map<std::string, Vector> exemplars;
  std::optional<Vector> label;
  std::map<std::string, Vector> image_exemplars;
  std::map<std::string, std::vector<double>> logits;
};

/// Scores each exemplar of a category under the chosen strategy.
///
/// The Appended strategy scales each block (exemplar text, averaged exemplar
/// image, label text, mean image prototype) to unit length before
/// concatenating, so both modalities carry equal weight and the score is the
/// mean of the two per-block cosines. It scores exemplars present in both
/// `exemplars` and `image_exemplars`.
///
/// Throws Error(TooFewExemplars) below RatingsTable::kMinExemplars scored
/// exemplars, Error(MissingLabelEmbedding), Error(MissingModality) or
/// Error(MissingLogits) when a prerequisite is absent.
TypicalityScores typicality_scores(PrototypeStrategy strategy, const CategoryData& data);

}  // namespace typicality

#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace typicality {

/// Dense embedding coordinates. Construction does not validate, so malformed
/// inputs can still be represented and reported by validate_embedding_set;
/// arithmetic entry points check their own preconditions.
class Vector {
 public:
  Vector() = default;
  explicit Vector(std::vector<double> values) : values_(std::move(values)) {}
  Vector(std::initializer_list<double> values) : values_(values) {}

  std::size_t dim() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  /// True when every coordinate is finite.
  bool is_finite() const noexcept;

  friend bool operator==(const Vector&, const Vector&) = default;

 private:
  std::vector<double> values_;
};

/// Whitespace-trimmed copy; case is preserved.
std::string trim(std::string_view s);

struct ExemplarKey {
  std::string category;
  std::string exemplar;

  /// Builds a key with both parts trimmed.
  static ExemplarKey make(std::string_view category, std::string_view exemplar);

  friend auto operator<=>(const ExemplarKey&, const ExemplarKey&) = default;
};

enum class Modality { Text, Image };
enum class RecordKind { Exemplar, CategoryLabel };

std::string_view to_string(Modality m);
std::string_view to_string(RecordKind k);

struct EmbeddingRecord {
  std::string model_id;
  Modality modality = Modality::Text;
  RecordKind kind = RecordKind::Exemplar;
  ExemplarKey key;  // key.exemplar is empty iff kind == CategoryLabel
  std::optional<std::string> image_id;
  Vector vector;
};

enum class ViolationCode {
  EmptyModelId,
  EmptyCategory,
  ExemplarKindMismatch,  // exemplar name present on a label, or missing on an exemplar
  ImageIdMismatch,       // image_id present iff modality=image and kind=exemplar
  EmptyVector,
  NonFiniteValue,
  DimMismatch,
  DuplicateRecord,
};

std::string_view to_string(ViolationCode code);

struct Violation {
  std::size_t record_index;
  ViolationCode code;
  std::string detail;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const noexcept { return violations.empty(); }
};

/// Checks every EmbeddingRecord invariant across the set. Never throws on
/// malformed records; each broken rule yields one Violation.
ValidationReport validate_embedding_set(std::span<const EmbeddingRecord> records);

/// Human typicality per (category, exemplar); higher is more typical.
class RatingsTable {
 public:
  static constexpr std::size_t kMinExemplars = 3;

  /// Throws Error(Range) for values outside [0, 1], Error(Schema) for duplicate
  /// keys or categories with fewer than kMinExemplars exemplars.
  static RatingsTable from_entries(std::span<const std::pair<ExemplarKey, double>> entries);

  std::vector<std::string> categories() const;
  /// Exemplar -> typicality for one category; empty if the category is absent.
  std::map<std::string, double> category(const std::string& name) const;
  std::optional<double> find(const ExemplarKey& key) const;
  const std::map<ExemplarKey, double>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }

 private:
  std::map<ExemplarKey, double> entries_;
};

struct LogitKey {
  std::string model_id;
  ExemplarKey key;
  std::string image_id;

  friend auto operator<=>(const LogitKey&, const LogitKey&) = default;
};

/// Cross-modal alignment logits per (model, exemplar, image).
class LogitTable {
 public:
  /// Throws Error(Schema) on duplicate keys or non-finite logits.
  static LogitTable from_entries(std::span<const std::pair<LogitKey, double>> entries);

  /// Exemplar -> logits ordered by image_id, for one model and category.
  std::map<std::string, std::vector<double>> logits_for(const std::string& model_id,
                                                        const std::string& category) const;
  std::vector<std::string> models() const;
  const std::map<LogitKey, double>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }

 private:
  std::map<LogitKey, double> entries_;
};

struct TypicalityScores {
  std::string category;
  std::map<std::string, double> scores;  // exemplar -> predicted typicality
};

struct CategoryAlignment {
  std::string category;
  double rho = 0.0;
  std::size_t n_exemplars = 0;
};

struct ModelSummary {
  std::string model_id;
  double mean_rho = 0.0;
  double stdev_rho = 0.0;
  std::size_t n_categories = 0;
};

struct CombinedFit {
  std::string category;
  double beta_language = 0.0;
  double beta_vision = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double rho_predicted = 0.0;
  std::size_t n_exemplars = 0;
};

}  // namespace typicality

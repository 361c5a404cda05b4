#include "typicality/core.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>
#include <unordered_map>

#include "typicality/error.hpp"

namespace typicality {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Io: return "io_error";
    case ErrorCode::Parse: return "parse_error";
    case ErrorCode::Schema: return "schema_error";
    case ErrorCode::Range: return "range_error";
    case ErrorCode::UnknownModel: return "unknown_model";
    case ErrorCode::DimMismatch: return "dim_mismatch";
    case ErrorCode::ZeroVector: return "zero_vector";
    case ErrorCode::NonFinite: return "non_finite";
    case ErrorCode::EmptyInput: return "empty_input";
    case ErrorCode::MissingLabelEmbedding: return "missing_label_embedding";
    case ErrorCode::MissingLogits: return "missing_logits";
    case ErrorCode::MissingModality: return "missing_modality";
    case ErrorCode::TooFewExemplars: return "too_few_exemplars";
    case ErrorCode::LengthMismatch: return "length_mismatch";
    case ErrorCode::DegenerateInput: return "degenerate_input";
    case ErrorCode::ZeroVariance: return "zero_variance";
    case ErrorCode::CollinearPredictors: return "collinear_predictors";
    case ErrorCode::NoImages: return "no_images";
    case ErrorCode::NoEvaluableCategories: return "no_evaluable_categories";
    case ErrorCode::NoCommonCategories: return "no_common_categories";
    case ErrorCode::Config: return "config_error";
  }
  return "unknown";
}

bool Vector::is_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

std::string trim(std::string_view s) {
  constexpr std::string_view kSpace = " \t\r\n\f\v";
  const auto first = s.find_first_not_of(kSpace);
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(kSpace);
  return std::string(s.substr(first, last - first + 1));
}

ExemplarKey ExemplarKey::make(std::string_view category, std::string_view exemplar) {
  return ExemplarKey{trim(category), trim(exemplar)};
}

std::string_view to_string(Modality m) { return m == Modality::Text ? "text" : "image"; }

std::string_view to_string(RecordKind k) {
  return k == RecordKind::Exemplar ? "exemplar" : "category_label";
}

std::string_view to_string(ViolationCode code) {
  switch (code) {
    case ViolationCode::EmptyModelId: return "empty model id";
    case ViolationCode::EmptyCategory: return "empty category";
    case ViolationCode::ExemplarKindMismatch: return "exemplar/kind mismatch";
    case ViolationCode::ImageIdMismatch: return "image id mismatch";
    case ViolationCode::EmptyVector: return "empty vector";
    case ViolationCode::NonFiniteValue: return "non-finite value";
    case ViolationCode::DimMismatch: return "dim mismatch";
    case ViolationCode::DuplicateRecord: return "duplicate record";
  }
  return "unknown";
}

ValidationReport validate_embedding_set(std::span<const EmbeddingRecord> records) {
  ValidationReport report;
  auto flag = [&](std::size_t i, ViolationCode code, std::string detail) {
    report.violations.push_back({i, code, std::move(detail)});
  };

  std::unordered_map<std::string, std::size_t> dim_of;
  using Identity =
      std::tuple<std::string, Modality, RecordKind, ExemplarKey, std::optional<std::string>>;
  std::set<Identity> seen;

  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.model_id.empty()) flag(i, ViolationCode::EmptyModelId, "");
    if (r.key.category.empty()) flag(i, ViolationCode::EmptyCategory, "");

    const bool is_label = r.kind == RecordKind::CategoryLabel;
    if (is_label != r.key.exemplar.empty()) {
      flag(i, ViolationCode::ExemplarKindMismatch,
           is_label ? "category_label record names exemplar '" + r.key.exemplar + "'"
                    : "exemplar record has no exemplar name");
    }

    const bool wants_image = r.modality == Modality::Image && r.kind == RecordKind::Exemplar;
    const bool has_image = r.image_id.has_value() && !r.image_id->empty();
    if (wants_image != has_image) {
      flag(i, ViolationCode::ImageIdMismatch,
           wants_image ? "image exemplar record has no image_id"
                       : "image_id only allowed on image exemplar records");
    }

    if (r.vector.empty()) {
      flag(i, ViolationCode::EmptyVector, "");
    } else {
      if (!r.vector.is_finite()) flag(i, ViolationCode::NonFiniteValue, "");
      auto [it, inserted] = dim_of.try_emplace(r.model_id, r.vector.dim());
      if (!inserted && it->second != r.vector.dim()) {
        flag(i, ViolationCode::DimMismatch,
             "model '" + r.model_id + "' expects dim " + std::to_string(it->second) + ", got " +
                 std::to_string(r.vector.dim()));
      }
    }

    if (!seen.emplace(r.model_id, r.modality, r.kind, r.key, r.image_id).second) {
      flag(i, ViolationCode::DuplicateRecord,
           r.key.category + "/" + r.key.exemplar + (r.image_id ? "/" + *r.image_id : ""));
    }
  }
  return report;
}

RatingsTable RatingsTable::from_entries(
    std::span<const std::pair<ExemplarKey, double>> entries) {
  RatingsTable table;
  for (const auto& [raw_key, value] : entries) {
    auto key = ExemplarKey::make(raw_key.category, raw_key.exemplar);
    if (!(value >= 0.0 && value <= 1.0)) {
      throw Error(ErrorCode::Range, "typicality for " + key.category + "/" + key.exemplar +
                                        " outside [0, 1]: " + std::to_string(value));
    }
    if (key.category.empty() || key.exemplar.empty()) {
      throw Error(ErrorCode::Schema, "empty category or exemplar name");
    }
    if (!table.entries_.emplace(key, value).second) {
      throw Error(ErrorCode::Schema,
                  "duplicate rating for " + key.category + "/" + key.exemplar);
    }
  }

  std::map<std::string, std::size_t> counts;
  for (const auto& [key, value] : table.entries_) ++counts[key.category];
  for (const auto& [category, n] : counts) {
    if (n < kMinExemplars) {
      throw Error(ErrorCode::Schema, "too few exemplars in category '" + category + "' (" +
                                         std::to_string(n) + " < " +
                                         std::to_string(kMinExemplars) + ")");
    }
  }
  return table;
}

std::vector<std::string> RatingsTable::categories() const {
  std::vector<std::string> out;
  for (const auto& [key, value] : entries_) {
    if (out.empty() || out.back() != key.category) out.push_back(key.category);
  }
  return out;
}

std::map<std::string, double> RatingsTable::category(const std::string& name) const {
  std::map<std::string, double> out;
  for (auto it = entries_.lower_bound(ExemplarKey{name, ""});
       it != entries_.end() && it->first.category == name; ++it) {
    out.emplace(it->first.exemplar, it->second);
  }
  return out;
}

std::optional<double> RatingsTable::find(const ExemplarKey& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

LogitTable LogitTable::from_entries(std::span<const std::pair<LogitKey, double>> entries) {
  LogitTable table;
  for (const auto& [raw_key, logit] : entries) {
    LogitKey key{trim(raw_key.model_id),
                 ExemplarKey::make(raw_key.key.category, raw_key.key.exemplar),
                 trim(raw_key.image_id)};
    const auto where = key.model_id + "/" + key.key.category + "/" + key.key.exemplar + "/" +
                       key.image_id;
    if (!std::isfinite(logit)) throw Error(ErrorCode::Schema, "non-finite logit for " + where);
    if (!table.entries_.emplace(std::move(key), logit).second) {
      throw Error(ErrorCode::Schema, "duplicate logit for " + where);
    }
  }
  return table;
}

std::map<std::string, std::vector<double>> LogitTable::logits_for(
    const std::string& model_id, const std::string& category) const {
  std::map<std::string, std::vector<double>> out;
  for (auto it = entries_.lower_bound(LogitKey{model_id, {category, ""}, ""});
       it != entries_.end() && it->first.model_id == model_id &&
       it->first.key.category == category;
       ++it) {
    out[it->first.key.exemplar].push_back(it->second);
  }
  return out;
}

std::vector<std::string> LogitTable::models() const {
  std::vector<std::string> out;
  for (const auto& [key, logit] : entries_) {
    if (out.empty() || out.back() != key.model_id) out.push_back(key.model_id);
  }
  return out;
}

}  // namespace typicality

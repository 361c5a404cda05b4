#include "typicality/prototype.hpp"

#include <algorithm>
#include <cmath>

#include "typicality/error.hpp"

namespace typicality {
namespace {

// Neumaier-compensated running sum.
struct CompensatedSum {
  double sum = 0.0;
  double carry = 0.0;

  void add(double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      carry += (sum - t) + x;
    } else {
      carry += (x - t) + sum;
    }
    sum = t;
  }

  double value() const { return sum + carry; }
};

struct DotNorms {
  double dot = 0.0;
  double aa = 0.0;
  double bb = 0.0;
};

DotNorms dot_and_norms(std::span<const double> a, std::span<const double> b) {
  if (a.size() >= kCompensatedDim) {
    CompensatedSum dot, aa, bb;
    for (std::size_t i = 0; i < a.size(); ++i) {
      dot.add(a[i] * b[i]);
      aa.add(a[i] * a[i]);
      bb.add(b[i] * b[i]);
    }
    return {dot.value(), aa.value(), bb.value()};
  }
  DotNorms r;
  for (std::size_t i = 0; i < a.size(); ++i) {
    r.dot += a[i] * b[i];
    r.aa += a[i] * a[i];
    r.bb += b[i] * b[i];
  }
  return r;
}

void require_min_exemplars(const std::string& category, std::size_t n) {
  if (n < RatingsTable::kMinExemplars) {
    throw Error(ErrorCode::TooFewExemplars,
                "category '" + category + "' has " + std::to_string(n) + " scorable exemplars");
  }
}

TypicalityScores score_against(const std::string& category,
                               const std::map<std::string, Vector>& exemplars,
                               const Vector& prototype) {
  TypicalityScores out{category, {}};
  for (const auto& [name, vec] : exemplars) {
    out.scores.emplace(name, cosine_similarity(vec, prototype));
  }
  return out;
}

}  // namespace

double cosine_similarity(const Vector& a, const Vector& b) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorCode::DimMismatch, "cosine of dims " + std::to_string(a.dim()) + " and " +
                                            std::to_string(b.dim()));
  }
  if (a.empty()) throw Error(ErrorCode::ZeroVector, "cosine of empty vectors");
  const auto r = dot_and_norms(a.values(), b.values());
  if (!std::isfinite(r.dot) || !std::isfinite(r.aa) || !std::isfinite(r.bb)) {
    throw Error(ErrorCode::NonFinite, "non-finite value in cosine inputs");
  }
  if (r.aa == 0.0 || r.bb == 0.0) throw Error(ErrorCode::ZeroVector, "cosine with a zero vector");
  const double c = r.dot / (std::sqrt(r.aa) * std::sqrt(r.bb));
  return std::clamp(c, -1.0, 1.0);
}

Vector average_vector(std::span<const Vector> vectors) {
  if (vectors.empty()) throw Error(ErrorCode::EmptyInput, "average of no vectors");
  const std::size_t dim = vectors.front().dim();
  std::vector<double> sum(dim, 0.0);
  for (const auto& v : vectors) {
    if (v.dim() != dim) {
      throw Error(ErrorCode::DimMismatch, "average over dims " + std::to_string(dim) + " and " +
                                              std::to_string(v.dim()));
    }
    for (std::size_t i = 0; i < dim; ++i) sum[i] += v[i];
  }
  const double n = static_cast<double>(vectors.size());
  for (auto& x : sum) x /= n;
  return Vector(std::move(sum));
}

Vector mean_prototype(const std::map<std::string, Vector>& exemplar_vectors) {
  std::vector<Vector> vs;
  vs.reserve(exemplar_vectors.size());
  for (const auto& [name, v] : exemplar_vectors) vs.push_back(v);
  return average_vector(vs);
}

Vector appended_representation(const Vector& text, const Vector& image) {
  std::vector<double> out(text.values().begin(), text.values().end());
  out.insert(out.end(), image.values().begin(), image.values().end());
  return Vector(std::move(out));
}

Vector unit_normalized(const Vector& v) {
  double ss = 0.0;
  for (double x : v.values()) ss += x * x;
  if (ss == 0.0) throw Error(ErrorCode::ZeroVector, "cannot normalize a zero vector");
  const double norm = std::sqrt(ss);
  std::vector<double> out(v.values().begin(), v.values().end());
  for (auto& x : out) x /= norm;
  return Vector(std::move(out));
}

std::string_view to_string(PrototypeStrategy s) {
  switch (s) {
    case PrototypeStrategy::MeanOfExemplars: return "mean";
    case PrototypeStrategy::CategoryLabel: return "label";
    case PrototypeStrategy::Appended: return "appended";
    case PrototypeStrategy::CrossModal: return "cross_modality";
  }
  return "unknown";
}

TypicalityScores typicality_scores(PrototypeStrategy strategy, const CategoryData& data) {
  switch (strategy) {
    case PrototypeStrategy::MeanOfExemplars: {
      require_min_exemplars(data.category, data.exemplars.size());
      return score_against(data.category, data.exemplars, mean_prototype(data.exemplars));
    }
    case PrototypeStrategy::CategoryLabel: {
      require_min_exemplars(data.category, data.exemplars.size());
      if (!data.label) {
        throw Error(ErrorCode::MissingLabelEmbedding,
                    "no category_label embedding for '" + data.category + "'");
      }
      return score_against(data.category, data.exemplars, *data.label);
    }
    case PrototypeStrategy::Appended: {
      if (!data.label) {
        throw Error(ErrorCode::MissingLabelEmbedding,
                    "no category_label embedding for '" + data.category + "'");
      }
      if (data.exemplars.empty() || data.image_exemplars.empty()) {
        throw Error(ErrorCode::MissingModality,
                    "appended scoring of '" + data.category + "' needs text and image vectors");
      }
      std::map<std::string, Vector> images;
      for (const auto& [name, v] : data.image_exemplars) {
        if (data.exemplars.contains(name)) images.emplace(name, v);
      }
      require_min_exemplars(data.category, images.size());

      const Vector prototype = appended_representation(unit_normalized(*data.label),
                                                       unit_normalized(mean_prototype(images)));
      std::map<std::string, Vector> joined;
      for (const auto& [name, image] : images) {
        joined.emplace(name, appended_representation(unit_normalized(data.exemplars.at(name)),
                                                     unit_normalized(image)));
      }
      return score_against(data.category, joined, prototype);
    }
    case PrototypeStrategy::CrossModal: {
      if (data.logits.empty()) {
        throw Error(ErrorCode::MissingLogits, "no logits for '" + data.category + "'");
      }
      TypicalityScores out{data.category, {}};
      for (const auto& [name, logits] : data.logits) {
        if (logits.empty()) continue;
        double sum = 0.0;
        for (double l : logits) sum += l;
        out.scores.emplace(name, sum / static_cast<double>(logits.size()));
      }
      require_min_exemplars(data.category, out.scores.size());
      return out;
    }
  }
  throw Error(ErrorCode::Config, "unknown prototype strategy");
}

}  // namespace typicality

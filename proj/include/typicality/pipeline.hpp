#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "typicality/config.hpp"
#include "typicality/core.hpp"
#include "typicality/datastore.hpp"
#include "typicality/stats.hpp"

namespace typicality {

/// Alignment of one model (or one CLIP approach) across categories.
struct ModelEvaluation {
  std::string model_id;
  std::vector<CategoryAlignment> alignments;  // sorted by category
  ModelSummary summary;
  std::map<std::string, TypicalityScores> scores;  // category -> scores of rated exemplars
  std::vector<std::string> warnings;
};

/// Minimum shared exemplars for a two-predictor fit.
inline constexpr std::size_t kMinCombinedExemplars = 4;

struct CombinedPairResult {
  std::string language_model;
  std::string vision_model;
  std::vector<CombinedFit> fits;   // sorted by category
  std::optional<double> mean_rho;  // empty when every category was skipped
  std::vector<std::string> warnings;
};

struct CombinedGrid {
  std::vector<std::string> language_models;
  std::vector<std::string> vision_models;
  std::map<std::pair<std::string, std::string>, CombinedPairResult> cells;  // (language, vision)

  const CombinedPairResult* best_cell() const;
};

/// Per-model evaluations. Categories that cannot be scored are skipped and
/// listed in `warnings` as "<model>: <category>: <reason_code>: <detail>".
/// Throw Error(UnknownModel) or Error(NoEvaluableCategories).
ModelEvaluation evaluate_text_model(const EmbeddingStore& store, const RatingsTable& ratings,
                                    const std::string& model_id, TextPrototype prototype,
                                    std::size_t jobs = 1);

ModelEvaluation evaluate_vision_model(const EmbeddingStore& store, const RatingsTable& ratings,
                                      const std::string& model_id, std::size_t jobs = 1);

/// One CLIP approach; the result's model_id is the approach name.
/// `logits` may be null unless the approach is CrossModality.
/// Throws Error(MissingModality) or Error(MissingLogits) when the approach's
/// inputs are absent for the model.
ModelEvaluation evaluate_clip(const EmbeddingStore& store, const RatingsTable& ratings,
                              const LogitTable* logits, const std::string& model_id,
                              ClipApproach approach, std::size_t jobs = 1);

/// Per-category standardized fit of human typicality on language and vision
/// scores. Throws Error(NoCommonCategories) when the two models share no scored
/// category.
CombinedPairResult evaluate_combined_pair(const ModelEvaluation& language,
                                          const ModelEvaluation& vision,
                                          const RatingsTable& ratings);

/// Full cross product of already-evaluated models. Cells that cannot be
/// computed carry warnings and no mean.
CombinedGrid combined_grid(const std::vector<ModelEvaluation>& language,
                           const std::vector<ModelEvaluation>& vision,
                           const RatingsTable& ratings, std::size_t jobs = 1);

/// Evaluates the listed models first. Models with no evaluable category
/// contribute warning-only cells.
CombinedGrid combined_grid(const EmbeddingStore& store, const RatingsTable& ratings,
                           const std::vector<std::string>& language_models,
                           const std::vector<std::string>& vision_models,
                           TextPrototype prototype = TextPrototype::Mean, std::size_t jobs = 1);

struct EvaluationRun {
  std::string run_id;
  std::string config_snapshot;
  std::vector<ModelEvaluation> text;
  std::vector<ModelEvaluation> vision;
  std::optional<CombinedGrid> grid;
  std::vector<ModelEvaluation> clip;
  std::vector<std::string> warnings;
};

/// Loads the configured inputs and runs every enabled evaluation. Deterministic
/// for a given config.
EvaluationRun run_all(const RunConfig& config);

/// Single-image stability study named by config.stability.
StabilityReport run_stability(const RunConfig& config);

}  // namespace typicality

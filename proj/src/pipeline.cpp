#include "typicality/pipeline.hpp"

#include <functional>
#include <set>

#include "typicality/digest.hpp"
#include "typicality/error.hpp"
#include "typicality/parallel.hpp"
#include "typicality/prototype.hpp"

namespace typicality {
namespace {

std::string warning(const std::string& who, const std::string& category, std::string_view code,
                    const std::string& detail) {
  std::string w = who + ": " + category + ": " + std::string(code);
  if (!detail.empty()) w += ": " + detail;
  return w;
}

// Keeps the entries of `m` whose exemplar is rated; counts what was dropped.
template <typename T>
std::map<std::string, T> keep_rated(const std::map<std::string, T>& m,
                                    const std::map<std::string, double>& human,
                                    std::size_t& unrated) {
  std::map<std::string, T> out;
  for (const auto& [name, value] : m) {
    if (human.contains(name)) {
      out.emplace(name, value);
    } else {
      ++unrated;
    }
  }
  return out;
}

struct CategoryInput {
  bool covered = false;  // the model has any representation for this category
  PrototypeStrategy strategy = PrototypeStrategy::MeanOfExemplars;
  CategoryData data;
  std::size_t unrated = 0;
  std::size_t scorable = 0;  // rated exemplars with a representation
};

using InputBuilder = std::function<CategoryInput(const std::string& category,
                                                 const std::map<std::string, double>& human)>;

struct CategoryOutcome {
  std::optional<CategoryAlignment> alignment;
  std::optional<TypicalityScores> scores;
  std::vector<std::string> warnings;
};

CategoryOutcome evaluate_category(const std::string& who, const std::string& category,
                                  const std::map<std::string, double>& human,
                                  const InputBuilder& build) {
  CategoryOutcome out;
  CategoryInput input;
  try {
    input = build(category, human);
  } catch (const Error& e) {
    out.warnings.push_back(warning(who, category, to_string(e.code()), e.what()));
    return out;
  }
  if (!input.covered) {
    out.warnings.push_back(warning(who, category, "no_embeddings", ""));
    return out;
  }
  const std::size_t missing = human.size() - std::min(human.size(), input.scorable);
  if (input.unrated > 0 || missing > 0) {
    out.warnings.push_back(warning(who, category, "dropped_exemplars",
                                   std::to_string(input.unrated) + " unrated, " +
                                       std::to_string(missing) + " rated without data"));
  }
  try {
    auto scores = typicality_scores(input.strategy, input.data);
    std::vector<double> model_side, human_side;
    for (const auto& [name, score] : scores.scores) {
      model_side.push_back(score);
      human_side.push_back(human.at(name));
    }
    out.alignment = CategoryAlignment{category, spearman(model_side, human_side),
                                      model_side.size()};
    out.scores = std::move(scores);
  } catch (const Error& e) {
    out.warnings.push_back(warning(who, category, to_string(e.code()), e.what()));
  }
  return out;
}

ModelEvaluation evaluate_model(const std::string& model_id, const std::string& who,
                               const RatingsTable& ratings,
                               const std::vector<std::string>& model_categories,
                               const InputBuilder& build, std::size_t jobs) {
  const auto categories = ratings.categories();
  std::vector<CategoryOutcome> outcomes(categories.size());
  parallel_for(categories.size(), jobs, [&](std::size_t i) {
    outcomes[i] = evaluate_category(who, categories[i], ratings.category(categories[i]), build);
  });

  ModelEvaluation eval;
  eval.model_id = model_id;
  const std::set<std::string> rated(categories.begin(), categories.end());
  for (const auto& c : model_categories) {
    if (!rated.contains(c)) eval.warnings.push_back(warning(who, c, "unrated_category", ""));
  }
  std::vector<double> rhos;
  for (auto& o : outcomes) {
    eval.warnings.insert(eval.warnings.end(), o.warnings.begin(), o.warnings.end());
    if (o.alignment) {
      rhos.push_back(o.alignment->rho);
      eval.alignments.push_back(*o.alignment);
      eval.scores.emplace(o.scores->category, std::move(*o.scores));
    }
  }
  if (rhos.empty()) {
    std::string detail = "no evaluable categories for '" + who + "'";
    if (!eval.warnings.empty()) detail += " (first: " + eval.warnings.front() + ")";
    throw Error(ErrorCode::NoEvaluableCategories, detail);
  }
  eval.summary = summarize(model_id, rhos);
  return eval;
}

void require_model(const EmbeddingStore& store, const std::string& model_id) {
  if (!store.has_model(model_id)) {
    throw Error(ErrorCode::UnknownModel, "unknown model '" + model_id + "'");
  }
}

std::map<std::string, Vector> averaged(const std::map<std::string, std::vector<Vector>>& images) {
  std::map<std::string, Vector> out;
  for (const auto& [name, vectors] : images) out.emplace(name, average_vector(vectors));
  return out;
}

ModelEvaluation warning_only(const std::string& model_id, const Error& e) {
  ModelEvaluation eval;
  eval.model_id = model_id;
  eval.summary.model_id = model_id;
  eval.warnings.push_back(model_id + ": *: " + std::string(to_string(e.code())) + ": " + e.what());
  return eval;
}

}  // namespace

const CombinedPairResult* CombinedGrid::best_cell() const {
  const CombinedPairResult* best = nullptr;
  for (const auto& l : language_models) {
    for (const auto& v : vision_models) {
      auto it = cells.find({l, v});
      if (it == cells.end() || !it->second.mean_rho) continue;
      if (!best || *it->second.mean_rho > *best->mean_rho) best = &it->second;
    }
  }
  return best;
}

ModelEvaluation evaluate_text_model(const EmbeddingStore& store, const RatingsTable& ratings,
                                    const std::string& model_id, TextPrototype prototype,
                                    std::size_t jobs) {
  require_model(store, model_id);
  auto build = [&](const std::string& category, const std::map<std::string, double>& human) {
    CategoryInput in;
    const auto vectors = store.text_vectors(model_id, category);
    in.covered = !vectors.empty();
    in.data.category = category;
    in.data.exemplars = keep_rated(vectors, human, in.unrated);
    in.scorable = in.data.exemplars.size();
    if (prototype == TextPrototype::Label) {
      in.strategy = PrototypeStrategy::CategoryLabel;
      in.data.label = store.label_vector(model_id, category);
    }
    return in;
  };
  return evaluate_model(model_id, model_id, ratings, store.categories(model_id, Modality::Text),
                        build, jobs);
}

ModelEvaluation evaluate_vision_model(const EmbeddingStore& store, const RatingsTable& ratings,
                                      const std::string& model_id, std::size_t jobs) {
  require_model(store, model_id);
  auto build = [&](const std::string& category, const std::map<std::string, double>& human) {
    CategoryInput in;
    const auto images = store.image_vectors(model_id, category);
    in.covered = !images.empty();
    in.data.category = category;
    in.data.exemplars = averaged(keep_rated(images, human, in.unrated));
    in.scorable = in.data.exemplars.size();
    return in;
  };
  return evaluate_model(model_id, model_id, ratings, store.categories(model_id, Modality::Image),
                        build, jobs);
}

ModelEvaluation evaluate_clip(const EmbeddingStore& store, const RatingsTable& ratings,
                              const LogitTable* logits, const std::string& model_id,
                              ClipApproach approach, std::size_t jobs) {
  const std::string name(to_string(approach));
  const std::string who = model_id + "/" + name;

  if (approach == ClipApproach::CrossModality) {
    if (!logits) throw Error(ErrorCode::MissingLogits, "cross_modality needs a logits table");
    const auto models = logits->models();
    if (std::find(models.begin(), models.end(), model_id) == models.end()) {
      throw Error(ErrorCode::MissingLogits, "no logits for model '" + model_id + "'");
    }
    std::vector<std::string> covered;
    for (const auto& [key, value] : logits->entries()) {
      if (key.model_id == model_id &&
          (covered.empty() || covered.back() != key.key.category)) {
        covered.push_back(key.key.category);
      }
    }
    auto build = [&](const std::string& category, const std::map<std::string, double>& human) {
      CategoryInput in;
      in.strategy = PrototypeStrategy::CrossModal;
      const auto rows = logits->logits_for(model_id, category);
      in.covered = !rows.empty();
      in.data.category = category;
      in.data.logits = keep_rated(rows, human, in.unrated);
      in.scorable = in.data.logits.size();
      return in;
    };
    return evaluate_model(name, who, ratings, covered, build, jobs);
  }

  require_model(store, model_id);
  const bool needs_text = approach != ClipApproach::Mean;
  const bool needs_image = approach != ClipApproach::Category;
  const auto text_categories = store.categories(model_id, Modality::Text);
  const auto image_categories = store.categories(model_id, Modality::Image);
  if (needs_text && text_categories.empty()) {
    throw Error(ErrorCode::MissingModality, who + " needs text embeddings");
  }
  if (needs_image && image_categories.empty()) {
    throw Error(ErrorCode::MissingModality, who + " needs image embeddings");
  }

  auto build = [&](const std::string& category, const std::map<std::string, double>& human) {
    CategoryInput in;
    in.data.category = category;
    switch (approach) {
      case ClipApproach::Category: {
        in.strategy = PrototypeStrategy::CategoryLabel;
        const auto vectors = store.text_vectors(model_id, category);
        in.covered = !vectors.empty();
        in.data.exemplars = keep_rated(vectors, human, in.unrated);
        in.data.label = store.label_vector(model_id, category);
        in.scorable = in.data.exemplars.size();
        break;
      }
      case ClipApproach::Mean: {
        in.strategy = PrototypeStrategy::MeanOfExemplars;
        const auto images = store.image_vectors(model_id, category);
        in.covered = !images.empty();
        in.data.exemplars = averaged(keep_rated(images, human, in.unrated));
        in.scorable = in.data.exemplars.size();
        break;
      }
      case ClipApproach::Appended: {
        in.strategy = PrototypeStrategy::Appended;
        const auto vectors = store.text_vectors(model_id, category);
        const auto images = store.image_vectors(model_id, category);
        in.covered = !vectors.empty() && !images.empty();
        std::size_t unrated_images = 0;
        in.data.exemplars = keep_rated(vectors, human, in.unrated);
        in.data.image_exemplars = averaged(keep_rated(images, human, unrated_images));
        in.data.label = store.label_vector(model_id, category);
        for (const auto& [exemplar, v] : in.data.exemplars) {
          if (in.data.image_exemplars.contains(exemplar)) ++in.scorable;
        }
        break;
      }
      case ClipApproach::CrossModality:
        break;
    }
    return in;
  };
  std::vector<std::string> covered = needs_text ? text_categories : image_categories;
  return evaluate_model(name, who, ratings, covered, build, jobs);
}

CombinedPairResult evaluate_combined_pair(const ModelEvaluation& language,
                                          const ModelEvaluation& vision,
                                          const RatingsTable& ratings) {
  CombinedPairResult result;
  result.language_model = language.model_id;
  result.vision_model = vision.model_id;
  const std::string who = language.model_id + "+" + vision.model_id;

  std::vector<std::string> common;
  for (const auto& [category, scores] : language.scores) {
    if (vision.scores.contains(category)) common.push_back(category);
  }
  if (common.empty()) {
    throw Error(ErrorCode::NoCommonCategories, who + " share no scored category");
  }

  std::vector<double> rhos;
  for (const auto& category : common) {
    const auto human = ratings.category(category);
    const auto& lang = language.scores.at(category).scores;
    const auto& vis = vision.scores.at(category).scores;
    std::vector<double> y, x1, x2;
    for (const auto& [name, score] : lang) {
      auto v = vis.find(name);
      auto h = human.find(name);
      if (v == vis.end() || h == human.end()) continue;
      y.push_back(h->second);
      x1.push_back(score);
      x2.push_back(v->second);
    }
    if (y.size() < kMinCombinedExemplars) {
      result.warnings.push_back(warning(who, category, to_string(ErrorCode::TooFewExemplars),
                                        std::to_string(y.size()) + " shared exemplars"));
      continue;
    }
    try {
      const auto fit = ols2_standardized(y, x1, x2);
      CombinedFit cf;
      cf.category = category;
      cf.beta_language = fit.beta1;
      cf.beta_vision = fit.beta2;
      cf.intercept = fit.intercept;
      cf.r_squared = fit.r_squared;
      cf.rho_predicted = spearman(fit.fitted, y);
      cf.n_exemplars = y.size();
      rhos.push_back(cf.rho_predicted);
      result.fits.push_back(cf);
    } catch (const Error& e) {
      result.warnings.push_back(warning(who, category, to_string(e.code()), e.what()));
    }
  }
  if (!rhos.empty()) result.mean_rho = summarize(who, rhos).mean_rho;
  return result;
}

CombinedGrid combined_grid(const std::vector<ModelEvaluation>& language,
                           const std::vector<ModelEvaluation>& vision,
                           const RatingsTable& ratings, std::size_t jobs) {
  CombinedGrid grid;
  for (const auto& l : language) grid.language_models.push_back(l.model_id);
  for (const auto& v : vision) grid.vision_models.push_back(v.model_id);

  std::vector<CombinedPairResult> cells(language.size() * vision.size());
  parallel_for(cells.size(), jobs, [&](std::size_t k) {
    const auto& l = language[k / vision.size()];
    const auto& v = vision[k % vision.size()];
    try {
      cells[k] = evaluate_combined_pair(l, v, ratings);
    } catch (const Error& e) {
      CombinedPairResult empty;
      empty.language_model = l.model_id;
      empty.vision_model = v.model_id;
      empty.warnings.push_back(l.model_id + "+" + v.model_id + ": *: " +
                               std::string(to_string(e.code())) + ": " + e.what());
      cells[k] = std::move(empty);
    }
  });
  for (auto& cell : cells) {
    auto key = std::make_pair(cell.language_model, cell.vision_model);
    grid.cells.emplace(std::move(key), std::move(cell));
  }
  return grid;
}

CombinedGrid combined_grid(const EmbeddingStore& store, const RatingsTable& ratings,
                           const std::vector<std::string>& language_models,
                           const std::vector<std::string>& vision_models,
                           TextPrototype prototype, std::size_t jobs) {
  std::vector<ModelEvaluation> language, vision;
  for (const auto& id : language_models) {
    try {
      language.push_back(evaluate_text_model(store, ratings, id, prototype, jobs));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoEvaluableCategories) throw;
      language.push_back(warning_only(id, e));
    }
  }
  for (const auto& id : vision_models) {
    try {
      vision.push_back(evaluate_vision_model(store, ratings, id, jobs));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoEvaluableCategories) throw;
      vision.push_back(warning_only(id, e));
    }
  }
  return combined_grid(language, vision, ratings, jobs);
}

EvaluationRun run_all(const RunConfig& config) {
  config.check();
  EvaluationRun run;
  run.config_snapshot = config_snapshot(config);

  std::string id_source = run.config_snapshot;
  const auto ratings = load_ratings(config.ratings_path);
  id_source += sha256_file(config.ratings_path);

  EmbeddingStore store;
  if (config.wants_embeddings()) {
    store = load_embeddings(config.embeddings_path);
    id_source += sha256_file(config.embeddings_path);
  }
  std::optional<LogitTable> logits;
  if (config.logits_path) {
    logits = load_logits(*config.logits_path);
    id_source += sha256_file(*config.logits_path);
  }
  if (config.supercategories_path) id_source += sha256_file(*config.supercategories_path);
  run.run_id = sha256_hex(id_source).substr(0, 16);

  auto collect = [&](const ModelEvaluation& eval) {
    run.warnings.insert(run.warnings.end(), eval.warnings.begin(), eval.warnings.end());
  };

  std::vector<ModelEvaluation> grid_text, grid_vision;
  for (const auto& id : config.text_models) {
    try {
      auto eval = evaluate_text_model(store, ratings, id, config.text_prototype, config.jobs);
      collect(eval);
      grid_text.push_back(eval);
      run.text.push_back(std::move(eval));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoEvaluableCategories) throw;
      grid_text.push_back(warning_only(id, e));
      collect(grid_text.back());
    }
  }
  for (const auto& id : config.vision_models) {
    try {
      auto eval = evaluate_vision_model(store, ratings, id, config.jobs);
      collect(eval);
      grid_vision.push_back(eval);
      run.vision.push_back(std::move(eval));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoEvaluableCategories) throw;
      grid_vision.push_back(warning_only(id, e));
      collect(grid_vision.back());
    }
  }

  if (!grid_text.empty() && !grid_vision.empty()) {
    run.grid = combined_grid(grid_text, grid_vision, ratings, config.jobs);
    for (const auto& l : run.grid->language_models) {
      for (const auto& v : run.grid->vision_models) {
        const auto& cell = run.grid->cells.at({l, v});
        run.warnings.insert(run.warnings.end(), cell.warnings.begin(), cell.warnings.end());
      }
    }
  }

  for (auto approach : config.clip_approaches) {
    try {
      auto eval = evaluate_clip(store, ratings, logits ? &*logits : nullptr, config.clip_model,
                                approach, config.jobs);
      collect(eval);
      run.clip.push_back(std::move(eval));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoEvaluableCategories) throw;
      run.warnings.push_back(config.clip_model + "/" + std::string(to_string(approach)) +
                             ": *: " + std::string(to_string(e.code())) + ": " + e.what());
    }
  }
  return run;
}

StabilityReport run_stability(const RunConfig& config) {
  config.check();
  if (!config.stability) throw Error(ErrorCode::Config, "config has no 'stability' section");
  const auto& s = *config.stability;
  const auto ratings = load_ratings(config.ratings_path);
  const auto store = load_embeddings(config.embeddings_path);
  require_model(store, s.model);
  const auto human = ratings.category(s.category);
  if (human.empty()) {
    throw Error(ErrorCode::TooFewExemplars, "category '" + s.category + "' has no ratings");
  }
  const auto images = store.image_vectors(s.model, s.category);
  if (images.empty()) {
    throw Error(ErrorCode::NoImages,
                "model '" + s.model + "' has no images for category '" + s.category + "'");
  }
  return single_image_stability(images, human, s.trials, s.seed.value_or(config.seed),
                                config.jobs);
}

}  // namespace typicality

#include "typicality/pipeline.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "typicality/error.hpp"

namespace typicality {
namespace {

using testing::FixtureSpec;
using testing::make_planted_fixture;

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::Config;
}

bool has_warning(const std::vector<std::string>& warnings, const std::string& needle) {
  return std::any_of(warnings.begin(), warnings.end(),
                     [&](const std::string& w) { return w.find(needle) != std::string::npos; });
}

std::vector<double> as_std(const Vector& v) { return {v.values().begin(), v.values().end()}; }

// Scores a text category from scratch: raw mean of exemplar vectors, long
// double cosine, brute-force ranks.
double oracle_text_rho(const EmbeddingStore& store, const RatingsTable& ratings,
                       const std::string& model, const std::string& category) {
  const auto vectors = store.text_vectors(model, category);
  const std::size_t dim = vectors.begin()->second.dim();
  std::vector<double> mean(dim, 0.0);
  for (const auto& [name, v] : vectors) {
    for (std::size_t i = 0; i < dim; ++i) mean[i] += v[i] / static_cast<double>(vectors.size());
  }
  std::vector<double> model_side, human_side;
  for (const auto& [name, v] : vectors) {
    model_side.push_back(testing::cosine_oracle(as_std(v), mean));
    human_side.push_back(*ratings.find({category, name}));
  }
  return testing::spearman_oracle(model_side, human_side);
}

TEST(TextModel, PlantedGradientRecovered) {
  const auto fixture = make_planted_fixture(FixtureSpec{});
  const auto store = fixture.store();
  const auto ratings = fixture.ratings_table();
  const auto eval = evaluate_text_model(store, ratings, "text_a", TextPrototype::Mean);
  ASSERT_EQ(eval.alignments.size(), 27u);
  EXPECT_TRUE(eval.warnings.empty());
  for (const auto& a : eval.alignments) {
    EXPECT_GE(a.rho, 0.9) << a.category;
    EXPECT_EQ(a.n_exemplars, 10u);
    EXPECT_NEAR(a.rho, oracle_text_rho(store, ratings, "text_a", a.category), 1e-12);
  }
  EXPECT_EQ(eval.summary.n_categories, 27u);
  EXPECT_EQ(eval.summary.model_id, "text_a");

  const auto by_label = evaluate_text_model(store, ratings, "text_a", TextPrototype::Label);
  EXPECT_EQ(by_label.alignments.size(), 27u);
  EXPECT_GT(by_label.summary.mean_rho, 0.8);
}

TEST(TextModel, JobsDoNotChangeResults) {
  const auto fixture = make_planted_fixture(FixtureSpec{});
  const auto store = fixture.store();
  const auto ratings = fixture.ratings_table();
  const auto a = evaluate_text_model(store, ratings, "text_a", TextPrototype::Mean, 1);
  const auto b = evaluate_text_model(store, ratings, "text_a", TextPrototype::Mean, 5);
  ASSERT_EQ(a.alignments.size(), b.alignments.size());
  for (std::size_t i = 0; i < a.alignments.size(); ++i) {
    EXPECT_EQ(a.alignments[i].category, b.alignments[i].category);
    EXPECT_EQ(a.alignments[i].rho, b.alignments[i].rho);
  }
  EXPECT_EQ(a.summary.mean_rho, b.summary.mean_rho);
}

TEST(TextModel, Errors) {
  FixtureSpec spec;
  spec.categories = 3;
  spec.dim = 8;
  auto fixture = make_planted_fixture(spec);
  const auto ratings = fixture.ratings_table();
  EXPECT_EQ(code_of([&] {
              evaluate_text_model(fixture.store(), ratings, "nope", TextPrototype::Mean);
            }),
            ErrorCode::UnknownModel);

  // only two embedded exemplars per category
  std::erase_if(fixture.records, [](const EmbeddingRecord& r) {
    return r.kind == RecordKind::Exemplar && r.key.exemplar != "ex01" && r.key.exemplar != "ex02";
  });
  EXPECT_EQ(code_of([&] {
              evaluate_text_model(fixture.store(), ratings, "text_a", TextPrototype::Mean);
            }),
            ErrorCode::NoEvaluableCategories);
}

TEST(TextModel, MissingLabelsSkipCategories) {
  FixtureSpec spec;
  spec.categories = 3;
  spec.dim = 8;
  auto fixture = make_planted_fixture(spec);
  std::erase_if(fixture.records, [](const EmbeddingRecord& r) {
    return r.kind == RecordKind::CategoryLabel && r.key.category == "cat01";
  });
  const auto eval = evaluate_text_model(fixture.store(), fixture.ratings_table(), "text_a",
                                        TextPrototype::Label);
  EXPECT_EQ(eval.alignments.size(), 2u);
  EXPECT_TRUE(has_warning(eval.warnings, "text_a: cat01: missing_label_embedding"));
}

TEST(TextModel, WarningsForCoverageGaps) {
  FixtureSpec spec;
  spec.categories = 3;
  spec.dim = 8;
  auto fixture = make_planted_fixture(spec);
  // unrated exemplar, unrated category, and a rated category without embeddings
  const auto first = *std::find_if(fixture.records.begin(), fixture.records.end(),
                                   [](const auto& r) { return r.kind == RecordKind::Exemplar; });
  auto extra = first;
  extra.key.exemplar = "stray";
  fixture.records.push_back(extra);
  auto other = first;
  other.key.category = "unrated";
  fixture.records.push_back(other);
  std::erase_if(fixture.records, [](const EmbeddingRecord& r) { return r.key.category == "cat02"; });

  const auto eval = evaluate_text_model(fixture.store(), fixture.ratings_table(), "text_a",
                                        TextPrototype::Mean);
  EXPECT_EQ(eval.alignments.size(), 2u);
  EXPECT_TRUE(has_warning(eval.warnings, "text_a: cat00: dropped_exemplars: 1 unrated"));
  EXPECT_TRUE(has_warning(eval.warnings, "text_a: unrated: unrated_category"));
  EXPECT_TRUE(has_warning(eval.warnings, "text_a: cat02: no_embeddings"));
  // the stray exemplar is not scored
  EXPECT_FALSE(eval.scores.at("cat00").scores.contains("stray"));
}

TEST(TextModel, IdenticalVectorsAreDegenerate) {
  FixtureSpec spec;
  spec.categories = 2;
  spec.dim = 8;
  auto fixture = make_planted_fixture(spec);
  for (auto& r : fixture.records) {
    if (r.key.category == "cat00" && r.kind == RecordKind::Exemplar) r.vector = Vector(std::vector<double>(8, 1.0));
  }
  const auto eval = evaluate_text_model(fixture.store(), fixture.ratings_table(), "text_a",
                                        TextPrototype::Mean);
  EXPECT_EQ(eval.alignments.size(), 1u);
  EXPECT_TRUE(has_warning(eval.warnings, "text_a: cat00: degenerate_input"));
}

TEST(VisionModel, PlantedGradientRecovered) {
  FixtureSpec spec;
  const auto fixture = make_planted_fixture(spec);
  const auto eval = evaluate_vision_model(fixture.store(), fixture.ratings_table(), "vision_a");
  ASSERT_EQ(eval.alignments.size(), 27u);
  for (const auto& a : eval.alignments) EXPECT_GE(a.rho, 0.9) << a.category;
}

TEST(VisionModel, AveragingImagesBeatsNoiseOfSingleVectors) {
  // with heavy per-vector noise, averaging 8 images recovers more signal than
  // one text vector drawn with the same noise
  FixtureSpec spec;
  spec.categories = 40;
  spec.sigma = 0.35;
  spec.dim = 64;
  const auto fixture = make_planted_fixture(spec);
  const auto store = fixture.store();
  const auto ratings = fixture.ratings_table();
  const auto text = evaluate_text_model(store, ratings, "text_a", TextPrototype::Mean);
  const auto vision = evaluate_vision_model(store, ratings, "vision_a");
  EXPECT_GE(vision.summary.mean_rho, text.summary.mean_rho - 0.05);
}

TEST(Combined, PlantedPairFits) {
  const auto fixture = make_planted_fixture(FixtureSpec{});
  const auto store = fixture.store();
  const auto ratings = fixture.ratings_table();
  const auto text = evaluate_text_model(store, ratings, "text_a", TextPrototype::Mean);
  const auto vision = evaluate_vision_model(store, ratings, "vision_a");
  const auto pair = evaluate_combined_pair(text, vision, ratings);
  ASSERT_EQ(pair.fits.size(), 27u);
  ASSERT_TRUE(pair.mean_rho);
  EXPECT_GT(*pair.mean_rho, 0.9);
  for (const auto& f : pair.fits) {
    std::vector<double> y, x1, x2;
    for (const auto& [name, h] : ratings.category(f.category)) {
      y.push_back(h);
      x1.push_back(text.scores.at(f.category).scores.at(name));
      x2.push_back(vision.scores.at(f.category).scores.at(name));
    }
    const auto oracle = testing::ols_normal_equations(y, x1, x2);
    EXPECT_NEAR(f.beta_language, oracle.beta1, 1e-9);
    EXPECT_NEAR(f.beta_vision, oracle.beta2, 1e-9);
    EXPECT_NEAR(f.r_squared, oracle.r_squared, 1e-9);
    EXPECT_GE(f.r_squared + 1e-12, std::max(testing::squared_correlation(y, x1),
                                            testing::squared_correlation(y, x2)));
    EXPECT_EQ(f.n_exemplars, 10u);
  }
}

TEST(Combined, IdenticalScoresAreCollinear) {
  FixtureSpec spec;
  spec.categories = 3;
  spec.dim = 16;
  const auto fixture = make_planted_fixture(spec);
  const auto ratings = fixture.ratings_table();
  const auto text = evaluate_text_model(fixture.store(), ratings, "text_a", TextPrototype::Mean);
  auto twin = text;
  twin.model_id = "twin";
  const auto pair = evaluate_combined_pair(text, twin, ratings);
  EXPECT_TRUE(pair.fits.empty());
  EXPECT_FALSE(pair.mean_rho);
  EXPECT_TRUE(has_warning(pair.warnings, "text_a+twin: cat00: collinear_predictors"));
}

TEST(Combined, NoCommonCategories) {
  ModelEvaluation a, b;
  a.model_id = "a";
  b.model_id = "b";
  a.scores["x"] = {"x", {}};
  b.scores["y"] = {"y", {}};
  RatingsTable empty;
  EXPECT_EQ(code_of([&] { evaluate_combined_pair(a, b, empty); }), ErrorCode::NoCommonCategories);
}

TEST(Grid, SingleCellMatchesPair) {
  const auto fixture = make_planted_fixture(FixtureSpec{});
  const auto store = fixture.store();
  const auto ratings = fixture.ratings_table();
  const auto grid = combined_grid(store, ratings, {"text_a"}, {"vision_a"});
  const auto pair = evaluate_combined_pair(
      evaluate_text_model(store, ratings, "text_a", TextPrototype::Mean),
      evaluate_vision_model(store, ratings, "vision_a"), ratings);
  ASSERT_EQ(grid.cells.size(), 1u);
  ASSERT_NE(grid.best_cell(), nullptr);
  EXPECT_EQ(grid.best_cell()->mean_rho, pair.mean_rho);
}

TEST(Grid, DegenerateModelGivesWarningCells) {
  FixtureSpec spec;
  spec.categories = 6;
  spec.dim = 32;
  spec.text_models = {"text_a", "text_b"};
  spec.vision_models = {"vision_a", "vision_b"};
  auto fixture = make_planted_fixture(spec);
  std::erase_if(fixture.records, [](const EmbeddingRecord& r) {
    return r.model_id == "vision_b" && r.key.exemplar != "ex01" && r.key.exemplar != "ex02";
  });
  const auto grid =
      combined_grid(fixture.store(), fixture.ratings_table(), {"text_a", "text_b"},
                    {"vision_a", "vision_b"}, TextPrototype::Mean, 3);
  ASSERT_EQ(grid.cells.size(), 4u);
  for (const auto* l : {"text_a", "text_b"}) {
    EXPECT_TRUE(grid.cells.at({l, "vision_a"}).mean_rho);
    const auto& bad = grid.cells.at({l, "vision_b"});
    EXPECT_FALSE(bad.mean_rho);
    EXPECT_TRUE(has_warning(bad.warnings, "no_common_categories"));
  }
  const auto* best = grid.best_cell();
  ASSERT_NE(best, nullptr);
  EXPECT_EQ(best->vision_model, "vision_a");
  EXPECT_GE(*best->mean_rho, *grid.cells.at({"text_a", "vision_a"}).mean_rho);
  EXPECT_GE(*best->mean_rho, *grid.cells.at({"text_b", "vision_a"}).mean_rho);
}

TEST(Clip, AllApproaches) {
  FixtureSpec spec;
  spec.categories = 5;
  spec.dim = 32;
  spec.clip_model = "clip";
  const auto fixture = make_planted_fixture(spec);
  const auto store = fixture.store();
  const auto ratings = fixture.ratings_table();
  const auto logits = fixture.logit_table();
  for (auto approach : {ClipApproach::Category, ClipApproach::Mean, ClipApproach::Appended,
                        ClipApproach::CrossModality}) {
    const auto eval = evaluate_clip(store, ratings, &logits, "clip", approach);
    EXPECT_EQ(eval.model_id, to_string(approach));
    EXPECT_EQ(eval.alignments.size(), 5u);
    EXPECT_GT(eval.summary.mean_rho, 0.8) << to_string(approach);
  }
  const auto cross = evaluate_clip(store, ratings, &logits, "clip", ClipApproach::CrossModality);
  for (const auto& a : cross.alignments) EXPECT_DOUBLE_EQ(a.rho, 1.0);
}

TEST(Clip, CrossModalityMeanLogits) {
  std::vector<std::pair<ExemplarKey, double>> human{{{"bird", "robin"}, 0.9},
                                                    {{"bird", "owl"}, 0.5},
                                                    {{"bird", "emu"}, 0.1}};
  std::vector<std::pair<LogitKey, double>> rows{{{"clip", {"bird", "robin"}, "a"}, 2.0},
                                                {{"clip", {"bird", "robin"}, "b"}, 4.0},
                                                {{"clip", {"bird", "owl"}, "a"}, 2.5},
                                                {{"clip", {"bird", "emu"}, "a"}, 1.0}};
  const auto ratings = RatingsTable::from_entries(human);
  const auto logits = LogitTable::from_entries(rows);
  const auto eval =
      evaluate_clip(EmbeddingStore{}, ratings, &logits, "clip", ClipApproach::CrossModality);
  EXPECT_DOUBLE_EQ(eval.scores.at("bird").scores.at("robin"), 3.0);
  EXPECT_DOUBLE_EQ(eval.alignments.at(0).rho, 1.0);
}

TEST(Clip, MissingInputs) {
  FixtureSpec spec;
  spec.categories = 2;
  spec.dim = 8;
  const auto fixture = make_planted_fixture(spec);
  const auto store = fixture.store();
  const auto ratings = fixture.ratings_table();
  EXPECT_EQ(code_of([&] {
              evaluate_clip(store, ratings, nullptr, "text_a", ClipApproach::CrossModality);
            }),
            ErrorCode::MissingLogits);
  EXPECT_EQ(code_of([&] { evaluate_clip(store, ratings, nullptr, "text_a", ClipApproach::Mean); }),
            ErrorCode::MissingModality);
  EXPECT_EQ(code_of([&] {
              evaluate_clip(store, ratings, nullptr, "vision_a", ClipApproach::Category);
            }),
            ErrorCode::MissingModality);
}

class RunAllTest : public ::testing::Test {
 protected:
  void SetUp() override {
    FixtureSpec spec;
    spec.categories = 6;
    spec.dim = 32;
    spec.clip_model = "clip";
    dir_ = testing::fresh_temp_dir("pipeline_run_all");
    testing::write_fixture_files(make_planted_fixture(spec), dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }

  RunConfig config(const std::string& extra = "") const {
    return parse_run_config(R"({"embeddings": "embeddings.jsonl", "ratings": "ratings.csv",
      "logits": "logits.csv", "text_models": ["text_a"], "vision_models": ["vision_a"],
      "clip": {"model": "clip", "approaches": ["category", "mean", "appended", "cross_modality"]},
      "stability": {"model": "vision_a", "category": "cat00", "trials": 20})" +
                                extra + "}",
                            dir_);
  }

  std::filesystem::path dir_;
};

TEST_F(RunAllTest, RunsEverything) {
  const auto run = run_all(config());
  EXPECT_EQ(run.run_id.size(), 16u);
  EXPECT_EQ(run.text.size(), 1u);
  EXPECT_EQ(run.vision.size(), 1u);
  EXPECT_EQ(run.clip.size(), 4u);
  ASSERT_TRUE(run.grid);
  EXPECT_NE(run.grid->best_cell(), nullptr);
  EXPECT_TRUE(run.warnings.empty());

  const auto again = run_all(config());
  EXPECT_EQ(again.run_id, run.run_id);
  EXPECT_EQ(again.text[0].summary.mean_rho, run.text[0].summary.mean_rho);
  EXPECT_NE(run_all(config(R"(, "seed": 5)")).run_id, run.run_id);
  EXPECT_EQ(run_all(config(R"(, "jobs": 4)")).run_id, run.run_id);
}

TEST_F(RunAllTest, Stability) {
  const auto report = run_stability(config());
  EXPECT_EQ(report.rhos.size(), 20u);
  EXPECT_LE(report.min, report.max);
  const auto seeded = run_stability(config(R"(, "seed": 9)"));
  EXPECT_EQ(seeded.multi_image_rho, report.multi_image_rho);

  auto bad = config();
  bad.stability->category = "nope";
  EXPECT_EQ(code_of([&] { run_stability(bad); }), ErrorCode::TooFewExemplars);
}

}  // namespace
}  // namespace typicality

#include "fixtures.hpp"

#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "typicality/csv.hpp"

namespace typicality::testing {
namespace {

std::vector<double> gaussian(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> v(dim);
  for (auto& x : v) x = n(rng);
  return v;
}

Vector planted(const std::vector<double>& p, const std::vector<double>& d, double scale,
               double sigma, std::mt19937_64& rng) {
  const auto noise = gaussian(rng, p.size());
  std::vector<double> v(p.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = p[i] + scale * d[i] + sigma * noise[i];
  return Vector(std::move(v));
}

std::string two_digits(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%02zu", prefix, i);
  return buf;
}

}  // namespace

std::string category_name(std::size_t c) { return two_digits("cat", c); }
std::string exemplar_name(std::size_t k) { return two_digits("ex", k); }

Fixture make_planted_fixture(const FixtureSpec& spec) {
  Fixture f;
  std::mt19937_64 rng(spec.seed);
  const double denom = static_cast<double>(spec.exemplars + 1);

  for (std::size_t c = 0; c < spec.categories; ++c) {
    for (std::size_t k = 1; k <= spec.exemplars; ++k) {
      f.ratings.emplace_back(ExemplarKey{category_name(c), exemplar_name(k)},
                             1.0 - static_cast<double>(k) / denom);
    }
  }

  auto emit_model = [&](const std::string& model, bool text, bool images, bool label,
                        bool logits) {
    for (std::size_t c = 0; c < spec.categories; ++c) {
      const auto category = category_name(c);
      const auto p = gaussian(rng, spec.dim);
      if (label) {
        f.records.push_back({model, Modality::Text, RecordKind::CategoryLabel, {category, ""},
                             std::nullopt, planted(p, p, 0.0, 0.05, rng)});
      }
      for (std::size_t k = 1; k <= spec.exemplars; ++k) {
        const ExemplarKey key{category, exemplar_name(k)};
        const auto d = gaussian(rng, spec.dim);
        const double scale = static_cast<double>(k) / 10.0;
        if (text) {
          f.records.push_back({model, Modality::Text, RecordKind::Exemplar, key, std::nullopt,
                               planted(p, d, scale, spec.sigma, rng)});
        }
        if (images) {
          for (std::size_t i = 0; i < spec.images; ++i) {
            f.records.push_back({model, Modality::Image, RecordKind::Exemplar, key,
                                 two_digits("img", i), planted(p, d, scale, spec.sigma, rng)});
          }
        }
        if (logits) {
          std::normal_distribution<double> n(0.0, 1.0);
          for (std::size_t i = 0; i < spec.images; ++i) {
            f.logits.emplace_back(LogitKey{model, key, two_digits("img", i)},
                                  25.0 - 0.5 * static_cast<double>(k) + spec.sigma * n(rng));
          }
        }
      }
    }
  };

  for (const auto& m : spec.text_models) emit_model(m, true, false, spec.text_labels, false);
  for (const auto& m : spec.vision_models) emit_model(m, false, true, false, false);
  if (spec.clip_model) emit_model(*spec.clip_model, true, true, true, true);
  return f;
}

FixturePaths write_fixture_files(const Fixture& fixture, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  FixturePaths paths{dir / "embeddings.jsonl", dir / "ratings.csv", dir / "logits.csv"};
  write_embeddings(fixture.records, paths.embeddings);

  std::ofstream ratings(paths.ratings, std::ios::binary);
  ratings << "category,exemplar,typicality\n";
  for (const auto& [key, value] : fixture.ratings) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    ratings << csv::join({key.category, key.exemplar, buf}) << '\n';
  }
  if (!fixture.logits.empty()) {
    std::ofstream logits(paths.logits, std::ios::binary);
    logits << "model,category,exemplar,image_id,logit\n";
    for (const auto& [key, value] : fixture.logits) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.17g", value);
      logits << csv::join({key.model_id, key.key.category, key.key.exemplar, key.image_id, buf})
             << '\n';
    }
  }
  return paths;
}

std::filesystem::path fresh_temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("typicality_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace typicality::testing

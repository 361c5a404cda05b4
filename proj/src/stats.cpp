#include "typicality/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "typicality/error.hpp"
#include "typicality/parallel.hpp"
#include "typicality/prototype.hpp"

namespace typicality {
namespace {

double mean_of(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

void require_same_length(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::LengthMismatch, "lengths " + std::to_string(a.size()) + " and " +
                                               std::to_string(b.size()));
  }
}

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

}  // namespace

std::vector<double> fractional_ranks(std::span<const double> xs) {
  for (double x : xs) {
    if (!std::isfinite(x)) throw Error(ErrorCode::NonFinite, "cannot rank a non-finite value");
  }
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });

  std::vector<double> ranks(xs.size());
  std::size_t start = 0;
  while (start < order.size()) {
    std::size_t end = start + 1;
    while (end < order.size() && xs[order[end]] == xs[order[start]]) ++end;
    // positions start+1 .. end (1-based) share their mean
    const double rank = (static_cast<double>(start + 1) + static_cast<double>(end)) / 2.0;
    for (std::size_t k = start; k < end; ++k) ranks[order[k]] = rank;
    start = end;
  }
  return ranks;
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  require_same_length(xs, ys);
  if (xs.size() < 2) throw Error(ErrorCode::DegenerateInput, "correlation needs two points");
  const double mx = mean_of(xs);
  const double my = mean_of(ys);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw Error(ErrorCode::DegenerateInput, "correlation with a constant sequence");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double spearman(std::span<const double> xs, std::span<const double> ys) {
  require_same_length(xs, ys);
  if (xs.size() < 3) {
    throw Error(ErrorCode::DegenerateInput,
                "spearman needs at least 3 pairs, got " + std::to_string(xs.size()));
  }
  const auto rx = fractional_ranks(xs);
  const auto ry = fractional_ranks(ys);
  return pearson(rx, ry);
}

std::vector<double> standardize(std::span<const double> xs) {
  if (xs.size() < 2) throw Error(ErrorCode::ZeroVariance, "standardize needs two values");
  const double m = mean_of(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  if (!(ss > 0.0)) throw Error(ErrorCode::ZeroVariance, "constant sequence has zero variance");
  const double sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  std::vector<double> z(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) z[i] = (xs[i] - m) / sd;
  return z;
}

Ols2Fit ols2_standardized(std::span<const double> y, std::span<const double> x1,
                          std::span<const double> x2) {
  require_same_length(y, x1);
  require_same_length(y, x2);
  if (y.size() < 4) {
    throw Error(ErrorCode::DegenerateInput,
                "two-predictor fit needs at least 4 points, got " + std::to_string(y.size()));
  }
  const auto zy = standardize(y);
  const auto z1 = standardize(x1);
  const auto z2 = standardize(x2);

  double s11 = 0.0, s22 = 0.0, s12 = 0.0, s1y = 0.0, s2y = 0.0;
  for (std::size_t i = 0; i < zy.size(); ++i) {
    s11 += z1[i] * z1[i];
    s22 += z2[i] * z2[i];
    s12 += z1[i] * z2[i];
    s1y += z1[i] * zy[i];
    s2y += z2[i] * zy[i];
  }
  const double r12 = s12 / std::sqrt(s11 * s22);
  if (std::abs(r12) >= 1.0 - kCollinearityTolerance) {
    throw Error(ErrorCode::CollinearPredictors,
                "predictors are collinear (|r| = " + std::to_string(std::abs(r12)) + ")");
  }

  const double det = s11 * s22 - s12 * s12;
  Ols2Fit fit;
  fit.beta1 = (s22 * s1y - s12 * s2y) / det;
  fit.beta2 = (s11 * s2y - s12 * s1y) / det;
  fit.intercept = mean_of(zy) - fit.beta1 * mean_of(z1) - fit.beta2 * mean_of(z2);

  fit.fitted.resize(zy.size());
  double ss_res = 0.0, ss_tot = 0.0;
  const double my = mean_of(zy);
  for (std::size_t i = 0; i < zy.size(); ++i) {
    fit.fitted[i] = fit.intercept + fit.beta1 * z1[i] + fit.beta2 * z2[i];
    const double r = zy[i] - fit.fitted[i];
    ss_res += r * r;
    ss_tot += (zy[i] - my) * (zy[i] - my);
  }
  fit.r_squared = std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0);
  return fit;
}

ModelSummary summarize(const std::string& model_id, std::span<const double> rhos) {
  if (rhos.empty()) throw Error(ErrorCode::EmptyInput, "no correlations to summarize");
  ModelSummary s;
  s.model_id = model_id;
  s.n_categories = rhos.size();
  s.mean_rho = mean_of(rhos);
  if (rhos.size() > 1) {
    double ss = 0.0;
    for (double r : rhos) ss += (r - s.mean_rho) * (r - s.mean_rho);
    s.stdev_rho = std::sqrt(ss / static_cast<double>(rhos.size() - 1));
  }
  return s;
}

SubstreamRng::SubstreamRng(std::uint64_t seed, std::uint64_t stream)
    : key_(mix64(seed ^ mix64(stream + kGolden))) {}

std::uint64_t SubstreamRng::next() { return mix64(key_ + kGolden * ++counter_); }

std::uint64_t SubstreamRng::uniform_below(std::uint64_t bound) {
  // Rejects the low (2^64 mod bound) outputs so every residue is equally likely.
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = next();
    if (r >= threshold) return r % bound;
  }
}

StabilityReport single_image_stability(const std::map<std::string, std::vector<Vector>>& images,
                                       const std::map<std::string, double>& human,
                                       std::size_t trials, std::uint64_t seed,
                                       std::size_t jobs) {
  if (trials == 0) throw Error(ErrorCode::EmptyInput, "stability needs at least one trial");

  std::vector<std::string> names;
  std::vector<double> human_scores;
  for (const auto& [name, vectors] : images) {
    auto it = human.find(name);
    if (it == human.end()) continue;
    if (vectors.empty()) throw Error(ErrorCode::NoImages, "exemplar '" + name + "' has no images");
    names.push_back(name);
    human_scores.push_back(it->second);
  }
  if (images.empty()) throw Error(ErrorCode::NoImages, "no image vectors");
  if (names.size() < RatingsTable::kMinExemplars) {
    throw Error(ErrorCode::TooFewExemplars,
                std::to_string(names.size()) + " exemplars have both images and ratings");
  }

  auto rho_of = [&](const std::map<std::string, Vector>& exemplar_vectors) {
    const auto prototype = mean_prototype(exemplar_vectors);
    std::vector<double> scores;
    scores.reserve(names.size());
    for (const auto& name : names) {
      scores.push_back(cosine_similarity(exemplar_vectors.at(name), prototype));
    }
    return spearman(scores, human_scores);
  };

  StabilityReport report;
  report.trials = trials;
  report.seed = seed;

  std::map<std::string, Vector> averaged;
  for (const auto& name : names) averaged.emplace(name, average_vector(images.at(name)));
  report.multi_image_rho = rho_of(averaged);

  report.rhos.resize(trials);
  parallel_for(trials, jobs, [&](std::size_t t) {
    SubstreamRng rng(seed, t);
    std::map<std::string, Vector> picked;
    for (const auto& name : names) {
      const auto& vectors = images.at(name);
      picked.emplace(name, vectors[rng.uniform_below(vectors.size())]);
    }
    report.rhos[t] = rho_of(picked);
  });

  const auto [lo, hi] = std::minmax_element(report.rhos.begin(), report.rhos.end());
  report.min = *lo;
  report.max = *hi;
  report.mean = std::clamp(mean_of(report.rhos), report.min, report.max);
  return report;
}

}  // namespace typicality

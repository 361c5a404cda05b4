#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "typicality/core.hpp"

namespace typicality {

/// 1-based ascending ranks; ties share the mean of the positions they span.
/// Throws Error(NonFinite).
std::vector<double> fractional_ranks(std::span<const double> xs);

/// Pearson correlation, two-pass centered. Throws Error(LengthMismatch) or
/// Error(DegenerateInput) when either side is constant.
double pearson(std::span<const double> xs, std::span<const double> ys);

/// Tie-corrected Spearman rho: Pearson over fractional ranks.
/// Requires equal lengths n >= 3 and at least two distinct values per side.
double spearman(std::span<const double> xs, std::span<const double> ys);

/// z-scores with the sample (n - 1) standard deviation. Throws Error(ZeroVariance).
std::vector<double> standardize(std::span<const double> xs);

/// Collinearity guard for ols2_standardized on |corr(x1, x2)|.
inline constexpr double kCollinearityTolerance = 1e-10;

struct Ols2Fit {
  double beta1 = 0.0;
  double beta2 = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::vector<double> fitted;  // standardized scale, input order
};

/// Least squares of standardized y on standardized x1 and x2 through the 2x2
/// normal equations. Requires n >= 4.
/// Throws Error(LengthMismatch), Error(ZeroVariance), Error(CollinearPredictors).
Ols2Fit ols2_standardized(std::span<const double> y, std::span<const double> x1,
                          std::span<const double> x2);

/// Arithmetic mean and sample standard deviation (0 for a single value).
/// Throws Error(EmptyInput).
ModelSummary summarize(const std::string& model_id, std::span<const double> rhos);

/// Counter-based generator: the stream for (seed, stream) is independent of
/// how many other streams have been drawn.
class SubstreamRng {
 public:
  SubstreamRng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next();
  /// Uniform integer in [0, bound). `bound` must be positive.
  std::uint64_t uniform_below(std::uint64_t bound);

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

struct StabilityReport {
  std::size_t trials = 0;
  std::vector<double> rhos;
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double multi_image_rho = 0.0;
  std::uint64_t seed = 0;
};

/// Single-image resampling study for one category.
///
/// `images` maps exemplar -> image vectors (in a fixed order, e.g. by
/// image_id); `human` maps exemplar -> human typicality. Exemplars missing from
/// either side are ignored. Trial t draws one image per exemplar from
/// SubstreamRng(seed, t), rebuilds the mean prototype and records spearman
/// against human ratings. Trials run on up to `jobs` threads; results do not
/// depend on `jobs`.
///
/// Throws Error(NoImages), Error(TooFewExemplars), Error(EmptyInput) for
/// trials == 0.
StabilityReport single_image_stability(const std::map<std::string, std::vector<Vector>>& images,
                                       const std::map<std::string, double>& human,
                                       std::size_t trials, std::uint64_t seed,
                                       std::size_t jobs = 1);

}  // namespace typicality

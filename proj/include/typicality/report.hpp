#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "typicality/core.hpp"
#include "typicality/pipeline.hpp"
#include "typicality/stats.hpp"

namespace typicality {

/// Fixed 4-decimal rendering, ties to even on the exact binary value. Never "-0.0000".
std::string format_fixed4(double value);

/// Optional category -> supercategory metadata for beta-weight tables.
class SupercategoryMap {
 public:
  static constexpr const char* kUnassigned = "Unassigned";
  static const std::vector<std::string>& labels();

  SupercategoryMap() = default;
  /// Throws Error(Schema) for labels outside labels() or duplicate categories.
  explicit SupercategoryMap(std::map<std::string, std::string> entries);

  /// kUnassigned for unknown categories.
  const std::string& label_of(const std::string& category) const;

 private:
  std::map<std::string, std::string> entries_;
};

/// CSV with header category,supercategory.
SupercategoryMap load_supercategories(const std::filesystem::path& path);

/// model,mean_rho,stdev_rho,n_categories; rows sorted by model id.
/// Throws Error(EmptyInput) or Error(Io).
void write_summary_table(std::vector<ModelSummary> summaries, const std::filesystem::path& path);

/// Language models as rows, vision models as columns, each ordered by
/// descending marginal mean (ties by id). Cells without a mean are blank.
void write_grid_matrix(const CombinedGrid& grid, const std::filesystem::path& path);

/// category,beta_language,beta_vision,r_squared,rho_predicted,supercategory.
void write_beta_weights(const std::vector<CombinedFit>& fits, const SupercategoryMap& supercategories,
                        const std::filesystem::path& path);

/// kind,model,category,rho,n_exemplars for every evaluated category.
void write_alignments(const std::vector<std::pair<std::string, const ModelEvaluation*>>& evals,
                      const std::filesystem::path& path);

/// language_model,vision_model,category,beta_language,beta_vision,intercept,r_squared,rho_predicted,n_exemplars
void write_combined_fits(const CombinedGrid& grid, const std::filesystem::path& path);

/// trial,rho rows. summary_line() gives the one-line min/max/mean/multi-image summary.
void write_stability(const StabilityReport& report, const std::filesystem::path& path);
std::string summary_line(const StabilityReport& report);

/// Writes every table for a run into `dir` (created if needed):
///   summary_text.csv, summary_vision.csv, summary_clip.csv,
///   alignments.csv, combined_grid.csv, combined_fits.csv, beta_weights.csv
///   (best grid cell), warnings.txt and manifest.json.
/// Tables for evaluations that did not run are not written. Returns the
/// written file names in order.
std::vector<std::string> write_run_outputs(const EvaluationRun& run, const RunConfig& config,
                                           const std::filesystem::path& dir);

}  // namespace typicality

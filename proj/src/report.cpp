#include "typicality/report.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "typicality/csv.hpp"
#include "typicality/digest.hpp"
#include "typicality/error.hpp"

namespace typicality {
namespace {

class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
  }

  void row(const std::vector<std::string>& fields) { out_ << csv::join(fields) << '\n'; }

  void close() {
    out_.close();
    if (!out_) throw Error(ErrorCode::Io, "write failed for '" + path_.string() + "'");
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

std::string count(std::size_t n) { return std::to_string(n); }

struct Marginal {
  std::string id;
  double mean;
};

// Descending by marginal mean over available cells; ids without any cell go last.
std::vector<std::string> order_by_marginal(std::vector<Marginal> m) {
  std::sort(m.begin(), m.end(), [](const Marginal& a, const Marginal& b) {
    if (a.mean != b.mean) return a.mean > b.mean;
    return a.id < b.id;
  });
  std::vector<std::string> out;
  for (auto& x : m) out.push_back(std::move(x.id));
  return out;
}

double marginal_mean(const CombinedGrid& grid, const std::string& id, bool is_row) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& other : is_row ? grid.vision_models : grid.language_models) {
    auto it = is_row ? grid.cells.find({id, other}) : grid.cells.find({other, id});
    if (it != grid.cells.end() && it->second.mean_rho) {
      sum += *it->second.mean_rho;
      ++n;
    }
  }
  return n ? sum / static_cast<double>(n) : -std::numeric_limits<double>::infinity();
}

}  // namespace

std::string format_fixed4(double value) {
  if (!std::isfinite(value)) throw Error(ErrorCode::NonFinite, "cannot render a non-finite value");
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed, 4);
  if (ec != std::errc{}) throw Error(ErrorCode::Io, "number formatting failed");
  std::string s(buf, ptr);
  if (s == "-0.0000") s = "0.0000";
  return s;
}

const std::vector<std::string>& SupercategoryMap::labels() {
  static const std::vector<std::string> kLabels = {
      "Environment", "Abstract", "Vehicle", "Man-Made Miscellaneous", "Plant",
      "Animal", "Man-Made Tool", "Garment", kUnassigned};
  return kLabels;
}

SupercategoryMap::SupercategoryMap(std::map<std::string, std::string> entries)
    : entries_(std::move(entries)) {
  const auto& allowed = labels();
  for (const auto& [category, label] : entries_) {
    if (std::find(allowed.begin(), allowed.end(), label) == allowed.end()) {
      throw Error(ErrorCode::Schema,
                  "unknown supercategory '" + label + "' for category '" + category + "'");
    }
  }
}

const std::string& SupercategoryMap::label_of(const std::string& category) const {
  static const std::string kDefault = kUnassigned;
  auto it = entries_.find(category);
  return it == entries_.end() ? kDefault : it->second;
}

SupercategoryMap load_supercategories(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
  std::string line;
  std::size_t line_no = 0;
  std::map<std::string, std::string> entries;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
      if (trim(line) != "category,supercategory") {
        throw ParseError(line_no, "expected header 'category,supercategory'");
      }
      continue;
    }
    if (trim(line).empty()) continue;
    const auto fields = csv::split(line);
    if (fields.size() != 2) throw ParseError(line_no, "expected 2 fields");
    if (!entries.emplace(trim(fields[0]), trim(fields[1])).second) {
      throw Error(ErrorCode::Schema, "duplicate category '" + trim(fields[0]) + "'");
    }
  }
  if (line_no == 0) throw ParseError(1, "missing header");
  return SupercategoryMap(std::move(entries));
}

void write_summary_table(std::vector<ModelSummary> summaries, const std::filesystem::path& path) {
  if (summaries.empty()) throw Error(ErrorCode::EmptyInput, "no summaries to write");
  std::sort(summaries.begin(), summaries.end(),
            [](const ModelSummary& a, const ModelSummary& b) { return a.model_id < b.model_id; });
  CsvWriter out(path);
  out.row({"model", "mean_rho", "stdev_rho", "n_categories"});
  for (const auto& s : summaries) {
    out.row({s.model_id, format_fixed4(s.mean_rho), format_fixed4(s.stdev_rho),
             count(s.n_categories)});
  }
  out.close();
}

void write_grid_matrix(const CombinedGrid& grid, const std::filesystem::path& path) {
  if (grid.language_models.empty() || grid.vision_models.empty()) {
    throw Error(ErrorCode::EmptyInput, "empty grid");
  }
  std::vector<Marginal> rows, cols;
  for (const auto& l : grid.language_models) rows.push_back({l, marginal_mean(grid, l, true)});
  for (const auto& v : grid.vision_models) cols.push_back({v, marginal_mean(grid, v, false)});
  const auto row_ids = order_by_marginal(std::move(rows));
  const auto col_ids = order_by_marginal(std::move(cols));

  CsvWriter out(path);
  std::vector<std::string> header{"language_model"};
  header.insert(header.end(), col_ids.begin(), col_ids.end());
  out.row(header);
  for (const auto& l : row_ids) {
    std::vector<std::string> row{l};
    for (const auto& v : col_ids) {
      auto it = grid.cells.find({l, v});
      row.push_back(it != grid.cells.end() && it->second.mean_rho
                        ? format_fixed4(*it->second.mean_rho)
                        : std::string());
    }
    out.row(row);
  }
  out.close();
}

void write_beta_weights(const std::vector<CombinedFit>& fits,
                        const SupercategoryMap& supercategories,
                        const std::filesystem::path& path) {
  if (fits.empty()) throw Error(ErrorCode::EmptyInput, "no fits to write");
  CsvWriter out(path);
  out.row({"category", "beta_language", "beta_vision", "r_squared", "rho_predicted",
           "supercategory"});
  for (const auto& f : fits) {
    out.row({f.category, format_fixed4(f.beta_language), format_fixed4(f.beta_vision),
             format_fixed4(f.r_squared), format_fixed4(f.rho_predicted),
             supercategories.label_of(f.category)});
  }
  out.close();
}

void write_alignments(const std::vector<std::pair<std::string, const ModelEvaluation*>>& evals,
                      const std::filesystem::path& path) {
  CsvWriter out(path);
  out.row({"kind", "model", "category", "rho", "n_exemplars"});
  for (const auto& [kind, eval] : evals) {
    for (const auto& a : eval->alignments) {
      out.row({kind, eval->model_id, a.category, format_fixed4(a.rho), count(a.n_exemplars)});
    }
  }
  out.close();
}

void write_combined_fits(const CombinedGrid& grid, const std::filesystem::path& path) {
  CsvWriter out(path);
  out.row({"language_model", "vision_model", "category", "beta_language", "beta_vision",
           "intercept", "r_squared", "rho_predicted", "n_exemplars"});
  for (const auto& [key, cell] : grid.cells) {
    for (const auto& f : cell.fits) {
      out.row({key.first, key.second, f.category, format_fixed4(f.beta_language),
               format_fixed4(f.beta_vision), format_fixed4(f.intercept), format_fixed4(f.r_squared),
               format_fixed4(f.rho_predicted), count(f.n_exemplars)});
    }
  }
  out.close();
}

void write_stability(const StabilityReport& report, const std::filesystem::path& path) {
  CsvWriter out(path);
  out.row({"trial", "rho"});
  for (std::size_t t = 0; t < report.rhos.size(); ++t) {
    out.row({count(t), format_fixed4(report.rhos[t])});
  }
  out.close();
}

std::string summary_line(const StabilityReport& report) {
  return "trials=" + count(report.trials) + " seed=" + std::to_string(report.seed) +
         " min=" + format_fixed4(report.min) + " max=" + format_fixed4(report.max) +
         " mean=" + format_fixed4(report.mean) +
         " multi_image_rho=" + format_fixed4(report.multi_image_rho);
}

std::vector<std::string> write_run_outputs(const EvaluationRun& run, const RunConfig& config,
                                           const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create '" + dir.string() + "': " + ec.message());

  std::vector<std::string> written;
  auto summaries_of = [](const std::vector<ModelEvaluation>& evals) {
    std::vector<ModelSummary> out;
    for (const auto& e : evals) out.push_back(e.summary);
    return out;
  };
  auto emit_summary = [&](const std::vector<ModelEvaluation>& evals, const std::string& name) {
    if (evals.empty()) return;
    write_summary_table(summaries_of(evals), dir / name);
    written.push_back(name);
  };
  emit_summary(run.text, "summary_text.csv");
  emit_summary(run.vision, "summary_vision.csv");
  emit_summary(run.clip, "summary_clip.csv");

  std::vector<std::pair<std::string, const ModelEvaluation*>> all;
  for (const auto& e : run.text) all.emplace_back("text", &e);
  for (const auto& e : run.vision) all.emplace_back("vision", &e);
  for (const auto& e : run.clip) all.emplace_back("clip", &e);
  if (!all.empty()) {
    write_alignments(all, dir / "alignments.csv");
    written.push_back("alignments.csv");
  }

  if (run.grid) {
    write_grid_matrix(*run.grid, dir / "combined_grid.csv");
    written.push_back("combined_grid.csv");
    write_combined_fits(*run.grid, dir / "combined_fits.csv");
    written.push_back("combined_fits.csv");
    if (const auto* best = run.grid->best_cell()) {
      const auto supercategories = config.supercategories_path
                                       ? load_supercategories(*config.supercategories_path)
                                       : SupercategoryMap{};
      write_beta_weights(best->fits, supercategories, dir / "beta_weights.csv");
      written.push_back("beta_weights.csv");
    }
  }

  if (!run.warnings.empty()) {
    std::ofstream out(dir / "warnings.txt", std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write warnings.txt");
    for (const auto& w : run.warnings) out << w << '\n';
    written.push_back("warnings.txt");
  }

  nlohmann::json manifest;
  manifest["run_id"] = run.run_id;
  manifest["seed"] = config.seed;
  manifest["config"] = nlohmann::json::parse(run.config_snapshot);
  nlohmann::json inputs = nlohmann::json::object();
  auto digest = [&](const char* name, const std::filesystem::path& p) {
    inputs[name] = {{"path", p.generic_string()}, {"sha256", sha256_file(p)}};
  };
  digest("ratings", config.ratings_path);
  if (config.wants_embeddings()) digest("embeddings", config.embeddings_path);
  if (config.logits_path) digest("logits", *config.logits_path);
  if (config.supercategories_path) digest("supercategories", *config.supercategories_path);
  manifest["inputs"] = inputs;
  if (run.grid) {
    if (const auto* best = run.grid->best_cell()) {
      manifest["best_pair"] = {{"language_model", best->language_model},
                               {"vision_model", best->vision_model},
                               {"mean_rho", *best->mean_rho}};
    }
  }
  written.push_back("manifest.json");
  manifest["outputs"] = written;
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write manifest.json");
  out << manifest.dump(2) << '\n';
  return written;
}

}  // namespace typicality

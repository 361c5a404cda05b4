#include "typicality/cli.hpp"

#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "typicality/config.hpp"
#include "typicality/datastore.hpp"
#include "typicality/error.hpp"
#include "typicality/pipeline.hpp"
#include "typicality/report.hpp"

namespace typicality {
namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  std::optional<std::string> text_prototype;
};

// Loads the config and applies flag overrides. Missing input files count as
// configuration errors.
RunConfig resolve_config(const Overrides& o) {
  auto config = load_run_config(o.config_path);
  if (o.out_dir) config.output_dir = *o.out_dir;
  if (o.seed) config.seed = *o.seed;
  if (o.jobs) config.jobs = *o.jobs;
  if (o.text_prototype) config.text_prototype = parse_text_prototype(*o.text_prototype);
  config.check();

  auto require_file = [](const char* what, const std::filesystem::path& p) {
    if (!std::filesystem::is_regular_file(p)) {
      throw Error(ErrorCode::Config,
                  std::string(what) + " file '" + p.string() + "' does not exist");
    }
  };
  require_file("ratings", config.ratings_path);
  if (config.wants_embeddings()) require_file("embeddings", config.embeddings_path);
  if (config.logits_path) require_file("logits", *config.logits_path);
  if (config.supercategories_path) require_file("supercategories", *config.supercategories_path);
  return config;
}

int report_error(const Error& e, std::ostream& err) {
  err << "error: " << e.what() << '\n';
  return e.code() == ErrorCode::Config ? kExitUsageError : kExitDataError;
}

int cmd_validate(const Overrides& o, std::ostream& out, std::ostream& err) {
  RunConfig config;
  try {
    config = resolve_config(o);
  } catch (const Error& e) {
    return report_error(e, err);
  }

  std::vector<std::string> problems;
  auto guarded = [&](const char* what, auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      problems.push_back(std::string(what) + ": " + e.what());
    }
  };

  std::optional<EmbeddingStore> store;
  if (config.wants_embeddings()) {
    guarded("embeddings", [&] {
      auto records = parse_embeddings(config.embeddings_path);
      if (records.empty()) {
        problems.push_back("embeddings: no records");
        return;
      }
      const auto report = validate_embedding_set(records);
      for (const auto& v : report.violations) {
        std::string line = "embeddings: record " + std::to_string(v.record_index) + ": " +
                           std::string(to_string(v.code));
        if (!v.detail.empty()) line += " (" + v.detail + ")";
        problems.push_back(std::move(line));
      }
      if (report.ok()) store = EmbeddingStore::from_records(std::move(records));
    });
  }
  guarded("ratings", [&] { load_ratings(config.ratings_path); });
  std::optional<LogitTable> logits;
  if (config.logits_path) guarded("logits", [&] { logits = load_logits(*config.logits_path); });
  if (config.supercategories_path) {
    guarded("supercategories", [&] { load_supercategories(*config.supercategories_path); });
  }

  if (store) {
    auto require = [&](const std::string& id, Modality modality, const char* role) {
      if (!store->has_model(id)) {
        problems.push_back(std::string("config: ") + role + " model '" + id +
                           "' not in embeddings");
      } else if (store->categories(id, modality).empty()) {
        problems.push_back(std::string("config: ") + role + " model '" + id + "' has no " +
                           std::string(to_string(modality)) + " exemplar embeddings");
      }
    };
    for (const auto& id : config.text_models) require(id, Modality::Text, "text");
    for (const auto& id : config.vision_models) require(id, Modality::Image, "vision");
    if (config.stability) require(config.stability->model, Modality::Image, "stability");
    const bool clip_embeddings = std::any_of(
        config.clip_approaches.begin(), config.clip_approaches.end(),
        [](ClipApproach a) { return a != ClipApproach::CrossModality; });
    if (clip_embeddings && !store->has_model(config.clip_model)) {
      problems.push_back("config: clip model '" + config.clip_model + "' not in embeddings");
    }
  }
  if (logits && std::count(config.clip_approaches.begin(), config.clip_approaches.end(),
                           ClipApproach::CrossModality)) {
    const auto models = logits->models();
    if (std::find(models.begin(), models.end(), config.clip_model) == models.end()) {
      problems.push_back("config: clip model '" + config.clip_model + "' not in logits");
    }
  }

  for (const auto& p : problems) out << p << '\n';
  return problems.empty() ? kExitOk : kExitDataError;
}

int cmd_eval(const Overrides& o, std::ostream& out, std::ostream& err) {
  try {
    const auto config = resolve_config(o);
    const auto run = run_all(config);
    const auto files = write_run_outputs(run, config, config.output_dir);
    out << "run " << run.run_id << ": wrote " << files.size() << " files to "
        << config.output_dir.string() << '\n';
    if (!run.warnings.empty()) {
      err << run.warnings.size() << " warning(s); see "
          << (config.output_dir / "warnings.txt").string() << '\n';
    }
    return kExitOk;
  } catch (const Error& e) {
    return report_error(e, err);
  }
}

int cmd_stability(const Overrides& o, std::ostream& out, std::ostream& err) {
  try {
    const auto config = resolve_config(o);
    if (!config.stability) throw Error(ErrorCode::Config, "config has no 'stability' section");
    const auto report = run_stability(config);
    std::error_code ec;
    std::filesystem::create_directories(config.output_dir, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create '" + config.output_dir.string() + "'");
    write_stability(report, config.output_dir / "stability.csv");
    const auto line = summary_line(report);
    std::ofstream summary(config.output_dir / "stability_summary.txt", std::ios::binary);
    summary << line << '\n';
    out << line << '\n';
    return kExitOk;
  } catch (const Error& e) {
    return report_error(e, err);
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Concept typicality alignment harness", "typicality"};
  app.require_subcommand(1);

  Overrides o;
  std::string out_dir, text_prototype;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "Run config (JSON)")->required();
    sub->add_option("--out", out_dir, "Output directory (overrides config)");
    sub->add_option("--seed", seed, "Seed (overrides config)");
    sub->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--text-prototype", text_prototype, "Text prototype")
        ->check(CLI::IsMember({"mean", "label"}));
  };
  auto* validate = app.add_subcommand("validate", "Load and validate every configured input");
  auto* eval = app.add_subcommand("eval", "Run all configured evaluations and write tables");
  auto* stability = app.add_subcommand("stability", "Single-image resampling study");
  for (auto* sub : {validate, eval, stability}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream help_out, help_err;
    const int code = app.exit(e, help_out, help_err);
    out << help_out.str();
    err << help_err.str();
    return code == 0 ? kExitOk : kExitUsageError;
  }

  auto* active = app.get_subcommands().front();
  if (active->count("--out")) o.out_dir = out_dir;
  if (active->count("--seed")) o.seed = seed;
  if (active->count("--jobs")) o.jobs = jobs;
  if (active->count("--text-prototype")) o.text_prototype = text_prototype;

  if (active == validate) return cmd_validate(o, out, err);
  if (active == eval) return cmd_eval(o, out, err);
  return cmd_stability(o, out, err);
}

}  // namespace typicality

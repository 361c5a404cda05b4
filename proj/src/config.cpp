#include "typicality/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "typicality/error.hpp"

namespace typicality {
namespace {

using json = nlohmann::json;

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (!known.contains(key)) throw Error(ErrorCode::Config, "unknown key '" + key + "' in " + where);
  }
}

std::vector<std::string> string_list(const json& obj, const char* key) {
  std::vector<std::string> out;
  if (!obj.contains(key)) return out;
  for (const auto& v : obj.at(key)) out.push_back(v.get<std::string>());
  return out;
}

}  // namespace

std::string_view to_string(TextPrototype p) { return p == TextPrototype::Mean ? "mean" : "label"; }

std::string_view to_string(ClipApproach a) {
  switch (a) {
    case ClipApproach::Category: return "category";
    case ClipApproach::Mean: return "mean";
    case ClipApproach::Appended: return "appended";
    case ClipApproach::CrossModality: return "cross_modality";
  }
  return "unknown";
}

TextPrototype parse_text_prototype(std::string_view name) {
  if (name == "mean") return TextPrototype::Mean;
  if (name == "label") return TextPrototype::Label;
  throw Error(ErrorCode::Config, "text_prototype must be 'mean' or 'label', got '" +
                                     std::string(name) + "'");
}

ClipApproach parse_clip_approach(std::string_view name) {
  for (auto a : {ClipApproach::Category, ClipApproach::Mean, ClipApproach::Appended,
                 ClipApproach::CrossModality}) {
    if (name == to_string(a)) return a;
  }
  throw Error(ErrorCode::Config, "unknown clip approach '" + std::string(name) + "'");
}

bool RunConfig::wants_embeddings() const {
  const bool clip_needs_embeddings =
      std::any_of(clip_approaches.begin(), clip_approaches.end(),
                  [](ClipApproach a) { return a != ClipApproach::CrossModality; });
  return !text_models.empty() || !vision_models.empty() || clip_needs_embeddings ||
         stability.has_value();
}

void RunConfig::check() const {
  if (ratings_path.empty()) throw Error(ErrorCode::Config, "missing 'ratings' path");
  if (wants_embeddings() && embeddings_path.empty()) {
    throw Error(ErrorCode::Config, "missing 'embeddings' path");
  }
  if (!clip_approaches.empty() && clip_model.empty()) {
    throw Error(ErrorCode::Config, "clip approaches need 'clip.model'");
  }
  for (auto a : clip_approaches) {
    if (a == ClipApproach::CrossModality && !logits_path) {
      throw Error(ErrorCode::Config, "cross_modality approach needs a 'logits' path");
    }
  }
  if (stability) {
    if (stability->trials == 0) throw Error(ErrorCode::Config, "stability trials must be >= 1");
    if (stability->model.empty() || stability->category.empty()) {
      throw Error(ErrorCode::Config, "stability needs 'model' and 'category'");
    }
  }
}

RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir) {
  RunConfig c;
  try {
    const json j = json::parse(text);
    if (!j.is_object()) throw Error(ErrorCode::Config, "config must be a JSON object");
    reject_unknown(j,
                   {"embeddings", "ratings", "logits", "supercategories", "text_models",
                    "vision_models", "text_prototype", "clip", "stability", "output_dir", "seed",
                    "jobs"},
                   "config");
    if (j.contains("embeddings")) c.embeddings_path = resolve(base_dir, j.at("embeddings"));
    if (j.contains("ratings")) c.ratings_path = resolve(base_dir, j.at("ratings"));
    if (j.contains("logits")) c.logits_path = resolve(base_dir, j.at("logits"));
    if (j.contains("supercategories")) {
      c.supercategories_path = resolve(base_dir, j.at("supercategories"));
    }
    c.text_models = string_list(j, "text_models");
    c.vision_models = string_list(j, "vision_models");
    if (j.contains("text_prototype")) {
      c.text_prototype = parse_text_prototype(j.at("text_prototype").get<std::string>());
    }
    if (j.contains("clip")) {
      const auto& clip = j.at("clip");
      reject_unknown(clip, {"model", "approaches"}, "clip");
      c.clip_model = clip.value("model", "");
      for (const auto& name : string_list(clip, "approaches")) {
        c.clip_approaches.push_back(parse_clip_approach(name));
      }
    }
    if (j.contains("stability")) {
      const auto& s = j.at("stability");
      reject_unknown(s, {"model", "category", "trials", "seed"}, "stability");
      StabilityConfig sc;
      sc.model = s.value("model", "");
      sc.category = s.value("category", "");
      if (s.contains("trials")) {
        const auto trials = s.at("trials").get<long long>();
        if (trials < 1) throw Error(ErrorCode::Config, "stability trials must be >= 1");
        sc.trials = static_cast<std::size_t>(trials);
      }
      if (s.contains("seed")) sc.seed = s.at("seed").get<std::uint64_t>();
      c.stability = sc;
    }
    if (j.contains("output_dir")) c.output_dir = resolve(base_dir, j.at("output_dir"));
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("jobs")) c.jobs = j.at("jobs").get<std::size_t>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Config, std::string("malformed config: ") + e.what());
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Config, "cannot read config '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_run_config(text.str(), path.parent_path());
}

std::string config_snapshot(const RunConfig& c) {
  json j;
  j["embeddings"] = c.embeddings_path.generic_string();
  j["ratings"] = c.ratings_path.generic_string();
  j["logits"] = c.logits_path ? json(c.logits_path->generic_string()) : json(nullptr);
  j["supercategories"] =
      c.supercategories_path ? json(c.supercategories_path->generic_string()) : json(nullptr);
  j["text_models"] = c.text_models;
  j["vision_models"] = c.vision_models;
  j["text_prototype"] = to_string(c.text_prototype);
  json approaches = json::array();
  for (auto a : c.clip_approaches) approaches.push_back(to_string(a));
  j["clip"] = {{"model", c.clip_model}, {"approaches", approaches}};
  if (c.stability) {
    j["stability"] = {{"model", c.stability->model},
                      {"category", c.stability->category},
                      {"trials", c.stability->trials},
                      {"seed", c.stability->seed.value_or(c.seed)}};
  } else {
    j["stability"] = nullptr;
  }
  j["seed"] = c.seed;
  return j.dump(2);
}

}  // namespace typicality

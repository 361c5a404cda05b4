#include "typicality/datastore.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "typicality/csv.hpp"
#include "typicality/error.hpp"

namespace typicality {
namespace {

using json = nlohmann::json;

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
  return in;
}

void strip_line_end(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

void strip_bom(std::string& line) {
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
}

std::optional<std::string> optional_string(const json& obj, const char* field,
                                           std::size_t line) {
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw ParseError(line, std::string("field '") + field + "' must be a string or null");
  return it->get<std::string>();
}

std::string required_string(const json& obj, const char* field, std::size_t line) {
  auto it = obj.find(field);
  if (it == obj.end() || !it->is_string()) {
    throw ParseError(line, std::string("missing string field '") + field + "'");
  }
  return it->get<std::string>();
}

EmbeddingRecord parse_record(const std::string& text, std::size_t line) {
  json obj;
  try {
    obj = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(line, e.what());
  }
  if (!obj.is_object()) throw ParseError(line, "record is not an object");

  EmbeddingRecord r;
  r.model_id = trim(required_string(obj, "model", line));

  const auto modality = required_string(obj, "modality", line);
  if (modality == "text") {
    r.modality = Modality::Text;
  } else if (modality == "image") {
    r.modality = Modality::Image;
  } else {
    throw ParseError(line, "modality must be \"text\" or \"image\"");
  }

  const auto kind = required_string(obj, "kind", line);
  if (kind == "exemplar") {
    r.kind = RecordKind::Exemplar;
  } else if (kind == "category_label") {
    r.kind = RecordKind::CategoryLabel;
  } else {
    throw ParseError(line, "kind must be \"exemplar\" or \"category_label\"");
  }

  r.key = ExemplarKey::make(required_string(obj, "category", line),
                            optional_string(obj, "exemplar", line).value_or(""));
  if (auto image_id = optional_string(obj, "image_id", line)) r.image_id = trim(*image_id);

  auto vec = obj.find("vector");
  if (vec == obj.end() || !vec->is_array()) throw ParseError(line, "missing array field 'vector'");
  std::vector<double> values;
  values.reserve(vec->size());
  for (const auto& v : *vec) {
    if (!v.is_number()) throw ParseError(line, "vector holds a non-numeric value");
    values.push_back(v.get<double>());
  }
  r.vector = Vector(std::move(values));
  return r;
}

// Returns data rows (header excluded) with their 1-based line numbers.
std::vector<std::pair<std::size_t, std::vector<std::string>>> read_csv(
    std::istream& in, const std::vector<std::string>& header) {
  std::string line;
  std::size_t line_no = 0;
  bool saw_header = false;
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    strip_line_end(line);
    if (!saw_header) {
      strip_bom(line);
      std::vector<std::string> got;
      try {
        got = csv::split(line);
      } catch (const Error& e) {
        throw ParseError(line_no, e.what());
      }
      for (auto& f : got) f = trim(f);
      if (got != header) throw ParseError(line_no, "expected header '" + csv::join(header) + "'");
      saw_header = true;
      continue;
    }
    if (trim(line).empty()) continue;
    std::vector<std::string> fields;
    try {
      fields = csv::split(line);
    } catch (const Error& e) {
      throw ParseError(line_no, e.what());
    }
    if (fields.size() != header.size()) {
      throw ParseError(line_no, "expected " + std::to_string(header.size()) + " fields, got " +
                                    std::to_string(fields.size()));
    }
    rows.emplace_back(line_no, std::move(fields));
  }
  if (!saw_header) throw ParseError(1, "missing header");
  return rows;
}

double parse_number(const std::string& field, std::size_t line, const char* name) {
  double value = 0.0;
  if (!csv::parse_double(field, value)) {
    throw ParseError(line, std::string("'") + field + "' is not a number in column " + name);
  }
  return value;
}

}  // namespace

EmbeddingStore EmbeddingStore::from_records(std::vector<EmbeddingRecord> records) {
  if (records.empty()) throw Error(ErrorCode::Schema, "no records");
  const auto report = validate_embedding_set(records);
  if (!report.ok()) {
    const auto& v = report.violations.front();
    std::string message = "record " + std::to_string(v.record_index) + ": " +
                          std::string(to_string(v.code));
    if (!v.detail.empty()) message += " (" + v.detail + ")";
    if (report.violations.size() > 1) {
      message += " [+" + std::to_string(report.violations.size() - 1) + " more]";
    }
    throw Error(ErrorCode::Schema, message);
  }

  EmbeddingStore store;
  store.records_ = std::move(records);
  for (std::size_t i = 0; i < store.records_.size(); ++i) {
    const auto& r = store.records_[i];
    auto& index = store.by_model_[r.model_id];
    index.dim = r.vector.dim();
    if (r.kind == RecordKind::CategoryLabel) {
      if (r.modality == Modality::Text) index.labels.emplace(r.key.category, i);
    } else if (r.modality == Modality::Text) {
      index.text_exemplars.emplace(r.key, i);
    } else {
      index.images[r.key].emplace(*r.image_id, i);
    }
  }
  return store;
}

const EmbeddingStore::ModelIndex& EmbeddingStore::index_of(const std::string& model_id) const {
  auto it = by_model_.find(model_id);
  if (it == by_model_.end()) throw Error(ErrorCode::UnknownModel, "unknown model '" + model_id + "'");
  return it->second;
}

std::vector<std::string> EmbeddingStore::models() const {
  std::vector<std::string> out;
  for (const auto& [id, index] : by_model_) out.push_back(id);
  return out;
}

bool EmbeddingStore::has_model(const std::string& model_id) const {
  return by_model_.contains(model_id);
}

std::size_t EmbeddingStore::dim_of(const std::string& model_id) const {
  return index_of(model_id).dim;
}

std::vector<std::string> EmbeddingStore::categories(const std::string& model_id,
                                                    Modality modality) const {
  const auto& index = index_of(model_id);
  std::vector<std::string> out;
  auto collect = [&](const auto& map) {
    for (const auto& [key, value] : map) {
      if (out.empty() || out.back() != key.category) out.push_back(key.category);
    }
  };
  if (modality == Modality::Text) {
    collect(index.text_exemplars);
  } else {
    collect(index.images);
  }
  return out;
}

std::optional<Vector> EmbeddingStore::text_vector(const std::string& model_id,
                                                  const ExemplarKey& key) const {
  const auto& index = index_of(model_id);
  auto it = index.text_exemplars.find(key);
  if (it == index.text_exemplars.end()) return std::nullopt;
  return records_[it->second].vector;
}

std::optional<Vector> EmbeddingStore::label_vector(const std::string& model_id,
                                                   const std::string& category) const {
  const auto& index = index_of(model_id);
  auto it = index.labels.find(category);
  if (it == index.labels.end()) return std::nullopt;
  return records_[it->second].vector;
}

std::map<std::string, Vector> EmbeddingStore::text_vectors(const std::string& model_id,
                                                           const std::string& category) const {
  const auto& index = index_of(model_id);
  std::map<std::string, Vector> out;
  for (auto it = index.text_exemplars.lower_bound(ExemplarKey{category, ""});
       it != index.text_exemplars.end() && it->first.category == category; ++it) {
    out.emplace(it->first.exemplar, records_[it->second].vector);
  }
  return out;
}

std::map<std::string, std::vector<Vector>> EmbeddingStore::image_vectors(
    const std::string& model_id, const std::string& category) const {
  const auto& index = index_of(model_id);
  std::map<std::string, std::vector<Vector>> out;
  for (auto it = index.images.lower_bound(ExemplarKey{category, ""});
       it != index.images.end() && it->first.category == category; ++it) {
    auto& vectors = out[it->first.exemplar];
    for (const auto& [image_id, record] : it->second) vectors.push_back(records_[record].vector);
  }
  return out;
}

std::vector<Vector> EmbeddingStore::images_of(const std::string& model_id,
                                              const ExemplarKey& key) const {
  const auto& index = index_of(model_id);
  std::vector<Vector> out;
  auto it = index.images.find(key);
  if (it == index.images.end()) return out;
  for (const auto& [image_id, record] : it->second) out.push_back(records_[record].vector);
  return out;
}

std::vector<Vector> exemplar_image_vectors(const EmbeddingStore& store,
                                           const std::string& model_id, const ExemplarKey& key) {
  return store.images_of(model_id, key);
}

std::vector<EmbeddingRecord> parse_embeddings(std::istream& in) {
  std::vector<EmbeddingRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_line_end(line);
    if (line_no == 1) strip_bom(line);
    if (trim(line).empty()) continue;
    records.push_back(parse_record(line, line_no));
  }
  return records;
}

std::vector<EmbeddingRecord> parse_embeddings(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_embeddings(in);
}

EmbeddingStore load_embeddings(const std::filesystem::path& path) {
  return EmbeddingStore::from_records(parse_embeddings(path));
}

void write_embeddings(const std::vector<EmbeddingRecord>& records, std::ostream& out) {
  for (const auto& r : records) {
    json obj;
    obj["model"] = r.model_id;
    obj["modality"] = to_string(r.modality);
    obj["kind"] = to_string(r.kind);
    obj["category"] = r.key.category;
    obj["exemplar"] = r.kind == RecordKind::CategoryLabel ? json(nullptr) : json(r.key.exemplar);
    obj["image_id"] = r.image_id ? json(*r.image_id) : json(nullptr);
    obj["vector"] = std::vector<double>(r.vector.values().begin(), r.vector.values().end());
    out << obj.dump() << '\n';
  }
}

void write_embeddings(const std::vector<EmbeddingRecord>& records,
                      const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
  write_embeddings(records, out);
  if (!out) throw Error(ErrorCode::Io, "write failed for '" + path.string() + "'");
}

RatingsTable parse_ratings(std::istream& in) {
  const auto rows = read_csv(in, {"category", "exemplar", "typicality"});
  std::vector<std::pair<ExemplarKey, double>> entries;
  entries.reserve(rows.size());
  for (const auto& [line, fields] : rows) {
    const double value = parse_number(fields[2], line, "typicality");
    if (!(value >= 0.0 && value <= 1.0)) {
      throw Error(ErrorCode::Range, "line " + std::to_string(line) + ": typicality " +
                                        trim(fields[2]) + " outside [0, 1]");
    }
    entries.emplace_back(ExemplarKey::make(fields[0], fields[1]), value);
  }
  return RatingsTable::from_entries(entries);
}

RatingsTable load_ratings(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_ratings(in);
}

LogitTable parse_logits(std::istream& in) {
  const auto rows = read_csv(in, {"model", "category", "exemplar", "image_id", "logit"});
  std::vector<std::pair<LogitKey, double>> entries;
  entries.reserve(rows.size());
  for (const auto& [line, fields] : rows) {
    const double logit = parse_number(fields[4], line, "logit");
    entries.emplace_back(LogitKey{fields[0], ExemplarKey::make(fields[1], fields[2]), fields[3]},
                         logit);
  }
  return LogitTable::from_entries(entries);
}

LogitTable load_logits(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_logits(in);
}

}  // namespace typicality

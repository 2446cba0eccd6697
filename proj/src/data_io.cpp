#include "spandiff/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "spandiff/errors.hpp"

namespace spandiff {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kFeatureMagic[8] = {'S', 'D', 'F', 'E', 'A', 'T', '1', '\0'};
constexpr double kTimeTol = 1e-6;
// planted relevance bands
constexpr double kInsideMin = 0.6;
constexpr double kOutsideMax = 0.4;

template <typename T>
T require(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) {
    throw MissingField(std::string("record has no '") + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw MissingField(std::string("field '") + key + "' has the wrong type: " + e.what());
  }
}

std::string id_string(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) {
    throw MissingField(std::string("record has no '") + key + "'");
  }
  const json& v = j.at(key);
  return v.is_string() ? v.get<std::string>() : v.dump();
}

std::string safe_file_name(const std::string& id) {
  std::string out;
  for (char c : id) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
    out += ok ? c : '_';
  }
  return out;
}

}  // namespace

int AnnotationRecord::clip_count(int max_clips) const {
  const int n = static_cast<int>(std::ceil(duration / clip_duration - 1e-9));
  return max_clips > 0 ? std::min(n, max_clips) : n;
}

SpanSet AnnotationRecord::normalized_spans(int max_clips) const {
  const double length = clip_count(max_clips) * clip_duration;
  SpanSet out;
  for (const auto& w : windows) {
    if (w[0] >= length) continue;
    const double s = std::clamp(w[0] / length, 0.0, 1.0);
    const double e = std::clamp(w[1] / length, 0.0, 1.0);
    out.push_back(se_to_cw(s, e));
  }
  return out;
}

Eigen::VectorXd AnnotationRecord::saliency_labels(int max_clips) const {
  if (!saliency_scores) return Eigen::VectorXd();
  const int n = clip_count(max_clips);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  auto mean = [](const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  if (relevant_clip_ids.empty()) {
    for (int i = 0; i < n && i < static_cast<int>(saliency_scores->size()); ++i) {
      out(i) = mean((*saliency_scores)[static_cast<size_t>(i)]);
    }
  } else {
    for (size_t k = 0; k < relevant_clip_ids.size(); ++k) {
      const int id = relevant_clip_ids[k];
      if (id < n) out(id) = mean((*saliency_scores)[k]);
    }
  }
  return out;
}

json AnnotationRecord::to_json() const {
  json j;
  j["qid"] = qid;
  j["query"] = query;
  j["vid"] = vid;
  j["duration"] = duration;
  j["clip_duration"] = clip_duration;
  json w = json::array();
  for (const auto& x : windows) w.push_back({x[0], x[1]});
  j["relevant_windows"] = w;
  if (saliency_scores) j["saliency_scores"] = *saliency_scores;
  if (!relevant_clip_ids.empty()) j["relevant_clip_ids"] = relevant_clip_ids;
  if (!domain.empty()) j["domain"] = domain;
  return j;
}

AnnotationRecord AnnotationRecord::from_json(const json& j) {
  if (!j.is_object()) throw MissingField("record is not a JSON object");
  AnnotationRecord r;
  r.qid = id_string(j, "qid");
  r.vid = id_string(j, "vid");
  r.query = j.contains("query") && j["query"].is_string() ? j["query"].get<std::string>() : "";
  r.duration = require<double>(j, "duration");
  if (j.contains("clip_duration")) r.clip_duration = j["clip_duration"].get<double>();
  const json& windows = j.contains("relevant_windows") ? j["relevant_windows"] : json();
  if (!windows.is_array()) throw MissingField("record has no 'relevant_windows'");
  for (const auto& w : windows) {
    if (!w.is_array() || w.size() != 2 || !w[0].is_number() || !w[1].is_number()) {
      throw MalformedInterval("window " + w.dump() + " is not a [start, end] pair");
    }
    r.windows.push_back({w[0].get<double>(), w[1].get<double>()});
  }
  if (j.contains("saliency_scores") && !j["saliency_scores"].is_null()) {
    std::vector<std::vector<double>> scores;
    for (const auto& row : j["saliency_scores"]) {
      if (row.is_number()) {
        scores.push_back({row.get<double>()});
      } else {
        scores.push_back(row.get<std::vector<double>>());
      }
    }
    r.saliency_scores = std::move(scores);
  }
  if (j.contains("relevant_clip_ids")) {
    r.relevant_clip_ids = j["relevant_clip_ids"].get<std::vector<int>>();
  }
  if (j.contains("domain") && j["domain"].is_string()) r.domain = j["domain"].get<std::string>();
  r.validate();
  return r;
}

void AnnotationRecord::validate() const {
  if (!(clip_duration > 0.0)) throw MalformedInterval("clip_duration must be positive");
  if (!(duration > 0.0)) throw MalformedInterval("duration must be positive");
  for (const auto& w : windows) {
    if (!(w[0] >= -kTimeTol && w[0] <= w[1] && w[1] <= duration + kTimeTol)) {
      std::ostringstream os;
      os << "window [" << w[0] << ", " << w[1] << "] outside 0 <= start <= end <= " << duration;
      throw MalformedInterval(os.str());
    }
  }
  if (saliency_scores) {
    const size_t expected =
        relevant_clip_ids.empty() ? static_cast<size_t>(clip_count()) : relevant_clip_ids.size();
    if (saliency_scores->size() != expected) {
      throw SaliencyLengthMismatch(std::to_string(saliency_scores->size()) +
                                   " saliency rows for " + std::to_string(expected) + " clips");
    }
  }
  for (int id : relevant_clip_ids) {
    if (id < 0 || id >= clip_count()) {
      throw SaliencyLengthMismatch("relevant clip id " + std::to_string(id) + " out of range");
    }
  }
}

std::vector<AnnotationRecord> load_annotations(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingFeatureFile("cannot open annotations " + path);
  std::vector<AnnotationRecord> out;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path + ":" + std::to_string(number) + ": ";
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw MissingField(where + "unparsable line (" + e.what() + ")");
    }
    try {
      out.push_back(AnnotationRecord::from_json(j));
    } catch (const MissingField& e) {
      throw MissingField(where + e.detail());
    } catch (const MalformedInterval& e) {
      throw MalformedInterval(where + e.detail());
    } catch (const SaliencyLengthMismatch& e) {
      throw SaliencyLengthMismatch(where + e.detail());
    } catch (const json::exception& e) {
      throw MissingField(where + e.what());
    }
  }
  return out;
}

void write_annotations(const std::string& path, const std::vector<AnnotationRecord>& records) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  for (const auto& r : records) out << r.to_json().dump() << '\n';
}

std::map<std::string, std::vector<std::string>> load_split(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingFeatureFile("cannot open split file " + path);
  const json j = json::parse(in);
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& [name, ids] : j.items()) {
    for (const auto& id : ids) out[name].push_back(id.is_string() ? id.get<std::string>() : id.dump());
  }
  return out;
}

std::vector<AnnotationRecord> select_records(const std::vector<AnnotationRecord>& records,
                                             const std::vector<std::string>& qids) {
  const std::set<std::string> keep(qids.begin(), qids.end());
  std::vector<AnnotationRecord> out;
  for (const auto& r : records) {
    if (keep.count(r.qid) > 0) out.push_back(r);
  }
  return out;
}

void write_feature_file(const std::string& path, const Eigen::MatrixXd& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw MissingFeatureFile("cannot write feature file " + path);
  const auto rows = static_cast<std::uint32_t>(data.rows());
  const auto cols = static_cast<std::uint32_t>(data.cols());
  out.write(kFeatureMagic, sizeof(kFeatureMagic));
  out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
  out.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
  const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> f =
      data.cast<float>();
  out.write(reinterpret_cast<const char*>(f.data()),
            static_cast<std::streamsize>(sizeof(float) * f.size()));
}

Eigen::MatrixXd read_feature_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFeatureFile("missing feature file " + path);
  char magic[8];
  std::uint32_t rows = 0, cols = 0;
  in.read(magic, sizeof(magic));
  in.read(reinterpret_cast<char*>(&rows), sizeof(rows));
  in.read(reinterpret_cast<char*>(&cols), sizeof(cols));
  if (!in || std::memcmp(magic, kFeatureMagic, sizeof(magic)) != 0) {
    throw MissingFeatureFile(path + " is not a feature file");
  }
  Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> f(rows, cols);
  in.read(reinterpret_cast<char*>(f.data()),
          static_cast<std::streamsize>(sizeof(float) * f.size()));
  if (!in) throw MissingFeatureFile(path + " is truncated");
  return f.cast<double>();
}

FeatureStore FeatureStore::open(const std::string& dir) {
  const fs::path manifest = fs::path(dir) / "manifest.json";
  std::ifstream in(manifest);
  if (!in) throw MissingFeatureFile("missing feature manifest " + manifest.string());
  const json j = json::parse(in);
  FeatureStore store;
  store.dir_ = dir;
  if (j.contains("video")) {
    for (const auto& [k, v] : j["video"].items()) store.video_[k] = v.get<std::string>();
  }
  if (j.contains("text")) {
    for (const auto& [k, v] : j["text"].items()) store.text_[k] = v.get<std::string>();
  }
  return store;
}

FeatureStore FeatureStore::create(const std::string& dir) {
  fs::create_directories(fs::path(dir) / "video");
  fs::create_directories(fs::path(dir) / "text");
  FeatureStore store;
  store.dir_ = dir;
  return store;
}

Eigen::MatrixXd FeatureStore::video(const std::string& vid) const {
  const auto it = video_.find(vid);
  if (it == video_.end()) throw MissingFeatureFile("no video features for '" + vid + "'");
  return read_feature_file((fs::path(dir_) / it->second).string());
}

Eigen::MatrixXd FeatureStore::text(const std::string& qid) const {
  const auto it = text_.find(qid);
  if (it == text_.end()) throw MissingFeatureFile("no text features for query '" + qid + "'");
  return read_feature_file((fs::path(dir_) / it->second).string());
}

void FeatureStore::put_video(const std::string& vid, const Eigen::MatrixXd& data) {
  const std::string rel = "video/" + safe_file_name(vid) + ".bin";
  write_feature_file((fs::path(dir_) / rel).string(), data);
  video_[vid] = rel;
}

void FeatureStore::put_text(const std::string& qid, const Eigen::MatrixXd& data) {
  const std::string rel = "text/" + safe_file_name(qid) + ".bin";
  write_feature_file((fs::path(dir_) / rel).string(), data);
  text_[qid] = rel;
}

void FeatureStore::save_manifest() const {
  json j;
  j["video"] = video_;
  j["text"] = text_;
  std::ofstream out(fs::path(dir_) / "manifest.json");
  out << j.dump(1) << '\n';
}

FeatureSequence pad_sequence(const Eigen::MatrixXd& rows, int length, Modality kind) {
  const int keep = std::min(static_cast<int>(rows.rows()), length);
  ag::Matrix padded = ag::Matrix::Zero(length, rows.cols());
  padded.topRows(keep) = rows.topRows(keep);
  FeatureSequence seq;
  seq.tokens = ag::Var(padded);
  seq.mask.assign(static_cast<size_t>(length), false);
  std::fill(seq.mask.begin(), seq.mask.begin() + keep, true);
  seq.kind = kind;
  return seq;
}

namespace {

void check_width(const Eigen::MatrixXd& m, int expected, const std::string& what) {
  if (m.rows() == 0) throw EmptyInput(what + " has no rows");
  if (expected > 0 && m.cols() != expected) {
    throw DimMismatch(what + " has width " + std::to_string(m.cols()) + ", expected " +
                      std::to_string(expected));
  }
}

}  // namespace

std::pair<FeatureSequence, FeatureSequence> load_features(const AnnotationRecord& record,
                                                          const FeatureStore& store,
                                                          const FeatureLimits& limits) {
  const Eigen::MatrixXd video = store.video(record.vid);
  const Eigen::MatrixXd text = store.text(record.qid);
  check_width(video, limits.video_dim, "video '" + record.vid + "'");
  check_width(text, limits.text_dim, "query '" + record.qid + "'");
  return {pad_sequence(video, limits.max_clips, Modality::kVideo),
          pad_sequence(text, limits.max_text, Modality::kText)};
}

std::vector<bool> clips_inside(const AnnotationRecord& record, int n_clips) {
  std::vector<bool> out(static_cast<size_t>(n_clips), false);
  for (int i = 0; i < n_clips; ++i) {
    const double mid = (i + 0.5) * record.clip_duration;
    for (const auto& w : record.windows) {
      if (mid >= w[0] && mid <= w[1]) out[static_cast<size_t>(i)] = true;
    }
  }
  return out;
}

Example make_example(AnnotationRecord record, Eigen::MatrixXd video, Eigen::MatrixXd text,
                     const FeatureLimits& limits) {
  check_width(video, limits.video_dim, "video '" + record.vid + "'");
  check_width(text, limits.text_dim, "query '" + record.qid + "'");
  Example ex;
  const int n = std::min(static_cast<int>(video.rows()), limits.max_clips);
  ex.video = video.topRows(n);
  ex.text = text.topRows(std::min(static_cast<int>(text.rows()), limits.max_text));
  ex.spans = record.normalized_spans(limits.max_clips);
  if (record.has_saliency()) {
    const Eigen::VectorXd labels = record.saliency_labels(limits.max_clips);
    ex.saliency = Eigen::VectorXd::Zero(n);
    const int m = std::min(n, static_cast<int>(labels.size()));
    ex.saliency.head(m) = labels.head(m);
  }
  ex.inside = clips_inside(record, n);
  ex.record = std::move(record);
  return ex;
}

Dataset load_dataset(const std::string& annotations, const std::string& feature_dir,
                     const FeatureLimits& limits) {
  const auto records = load_annotations(annotations);
  const FeatureStore store = FeatureStore::open(feature_dir);
  Dataset data;
  for (const auto& r : records) {
    Eigen::MatrixXd video = store.video(r.vid);
    Eigen::MatrixXd text = store.text(r.qid);
    FeatureLimits lim = limits;
    if (lim.video_dim == 0) lim.video_dim = data.video_dim;
    if (lim.text_dim == 0) lim.text_dim = data.text_dim;
    data.examples.push_back(make_example(r, std::move(video), std::move(text), lim));
    data.video_dim = static_cast<int>(data.examples.back().video.cols());
    data.text_dim = static_cast<int>(data.examples.back().text.cols());
  }
  return data;
}

void save_dataset(const Dataset& data, const std::string& dir, const std::string& name) {
  fs::create_directories(dir);
  const std::string feature_dir = (fs::path(dir) / "features").string();
  FeatureStore store = fs::exists(fs::path(feature_dir) / "manifest.json")
                           ? FeatureStore::open(feature_dir)
                           : FeatureStore::create(feature_dir);
  fs::create_directories(fs::path(feature_dir) / "video");
  fs::create_directories(fs::path(feature_dir) / "text");
  std::vector<AnnotationRecord> records;
  for (const auto& ex : data.examples) {
    store.put_video(ex.record.vid, ex.video);
    store.put_text(ex.record.qid, ex.text);
    records.push_back(ex.record);
  }
  store.save_manifest();
  write_annotations((fs::path(dir) / (name + ".jsonl")).string(), records);
}

json SyntheticConfig::to_json() const {
  return {{"n_examples", n_examples}, {"min_clips", min_clips},     {"max_clips", max_clips},
          {"video_dim", video_dim},   {"text_dim", text_dim},       {"min_tokens", min_tokens},
          {"max_tokens", max_tokens}, {"min_targets", min_targets}, {"max_targets", max_targets},
          {"snr", snr},               {"clip_duration", clip_duration},
          {"annotators", annotators}, {"label_noise", label_noise}, {"seed", seed}};
}

SyntheticConfig SyntheticConfig::from_json(const json& j) {
  SyntheticConfig c;
  const json defaults = c.to_json();
  for (const auto& [k, v] : j.items()) {
    if (!defaults.contains(k)) throw ConfigError("unknown synthetic key '" + k + "'");
  }
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("n_examples", c.n_examples);
  get("min_clips", c.min_clips);
  get("max_clips", c.max_clips);
  get("video_dim", c.video_dim);
  get("text_dim", c.text_dim);
  get("min_tokens", c.min_tokens);
  get("max_tokens", c.max_tokens);
  get("min_targets", c.min_targets);
  get("max_targets", c.max_targets);
  get("snr", c.snr);
  get("clip_duration", c.clip_duration);
  get("annotators", c.annotators);
  get("label_noise", c.label_noise);
  get("seed", c.seed);
  c.validate();
  return c;
}

void SyntheticConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("synthetic config: " + m); };
  if (n_examples < 1) fail("n_examples must be positive");
  if (min_clips < 1 || max_clips < min_clips) fail("clip range is empty");
  if (video_dim < 1 || text_dim < 1) fail("feature widths must be positive");
  if (min_tokens < 1 || max_tokens < min_tokens) fail("token range is empty");
  if (min_targets < 1 || max_targets < min_targets) fail("target range is empty");
  // every target needs 2 clips plus a 1-clip gap to its neighbour
  if (3 * max_targets - 1 > min_clips) fail("too many targets for the shortest video");
  if (snr < 0.0) fail("snr must be non-negative");
  if (!(clip_duration > 0.0)) fail("clip_duration must be positive");
  if (annotators < 1) fail("annotators must be positive");
  if (label_noise < 0.0) fail("label_noise must be non-negative");
}

namespace {

/// Disjoint [start, end] clip segments separated by at least one clip.
std::vector<std::pair<int, int>> place_targets(int n_clips, int k, std::mt19937_64& rng) {
  const int max_len = std::max(2, (n_clips - (k - 1)) / (k + 1));
  std::uniform_int_distribution<int> len_dist(2, max_len);
  std::vector<int> lens(static_cast<size_t>(k));
  int total = k - 1;
  for (int& l : lens) {
    l = len_dist(rng);
    total += l;
  }
  const int slack = n_clips - total;
  // split the slack into k + 1 gaps with sorted cut points
  std::uniform_int_distribution<int> cut_dist(0, slack);
  std::vector<int> cuts(static_cast<size_t>(k));
  for (int& c : cuts) c = cut_dist(rng);
  std::sort(cuts.begin(), cuts.end());
  std::vector<std::pair<int, int>> out;
  int pos = 0;
  int prev_cut = 0;
  for (int i = 0; i < k; ++i) {
    pos += cuts[static_cast<size_t>(i)] - prev_cut + (i > 0 ? 1 : 0);
    prev_cut = cuts[static_cast<size_t>(i)];
    out.emplace_back(pos, pos + lens[static_cast<size_t>(i)] - 1);
    pos += lens[static_cast<size_t>(i)];
  }
  return out;
}

}  // namespace

Dataset generate_synthetic(const SyntheticConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double noise_std = cfg.snr > 0.0 ? 1.0 / cfg.snr : 0.0;

  // fixed map from the latent space to the text width
  Eigen::MatrixXd to_text(cfg.video_dim, cfg.text_dim);
  for (Eigen::Index i = 0; i < to_text.size(); ++i) {
    to_text(i) = normal(rng) / std::sqrt(static_cast<double>(cfg.video_dim));
  }
  if (cfg.text_dim == cfg.video_dim) to_text.setIdentity();

  Dataset data;
  data.video_dim = cfg.video_dim;
  data.text_dim = cfg.text_dim;
  const FeatureLimits limits{cfg.max_clips, std::max(cfg.max_tokens, 1), cfg.video_dim,
                             cfg.text_dim};
  for (int e = 0; e < cfg.n_examples; ++e) {
    const int n = std::uniform_int_distribution<int>(cfg.min_clips, cfg.max_clips)(rng);
    const int k = std::uniform_int_distribution<int>(cfg.min_targets, cfg.max_targets)(rng);
    const int tokens = std::uniform_int_distribution<int>(cfg.min_tokens, cfg.max_tokens)(rng);
    const auto targets = place_targets(n, k, rng);

    Eigen::VectorXd relevance(n);
    for (int i = 0; i < n; ++i) relevance(i) = kOutsideMax * unit(rng);
    for (const auto& [s, t] : targets) {
      const double mid = 0.5 * (s + t);
      const double half = 0.5 * (t - s) + 0.5;
      for (int i = s; i <= t; ++i) relevance(i) = 1.0 - (1.0 - kInsideMin) * std::abs(i - mid) / half;
    }

    Eigen::RowVectorXd latent(cfg.video_dim), background(cfg.video_dim);
    for (int d = 0; d < cfg.video_dim; ++d) latent(d) = normal(rng);
    for (int d = 0; d < cfg.video_dim; ++d) background(d) = normal(rng);
    Eigen::MatrixXd video(n, cfg.video_dim);
    for (int i = 0; i < n; ++i) {
      for (int d = 0; d < cfg.video_dim; ++d) {
        video(i, d) = background(d) + relevance(i) * latent(d) + noise_std * normal(rng);
      }
    }
    const Eigen::RowVectorXd query = latent * to_text;
    Eigen::MatrixXd text(tokens, cfg.text_dim);
    for (int i = 0; i < tokens; ++i) {
      for (int d = 0; d < cfg.text_dim; ++d) text(i, d) = query(d) + noise_std * normal(rng);
    }

    AnnotationRecord r;
    r.qid = "q" + std::to_string(e);
    r.vid = "v" + std::to_string(e);
    r.query = "synthetic query " + std::to_string(e);
    r.clip_duration = cfg.clip_duration;
    r.duration = n * cfg.clip_duration;
    for (const auto& [s, t] : targets) {
      r.windows.push_back({s * cfg.clip_duration, (t + 1) * cfg.clip_duration});
    }
    std::vector<std::vector<double>> scores(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      for (int a = 0; a < cfg.annotators; ++a) {
        const double s = 4.0 * relevance(i) + cfg.label_noise * normal(rng);
        scores[static_cast<size_t>(i)].push_back(std::clamp(s, 0.0, 4.0));
      }
    }
    r.saliency_scores = std::move(scores);
    r.validate();
    data.examples.push_back(make_example(std::move(r), std::move(video), std::move(text), limits));
  }
  return data;
}

std::uint64_t dataset_fingerprint(const Dataset& data) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* p, size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ULL;
    }
  };
  for (const auto& ex : data.examples) {
    const std::string rec = ex.record.to_json().dump();
    mix(rec.data(), rec.size());
    mix(ex.video.data(), sizeof(double) * static_cast<size_t>(ex.video.size()));
    mix(ex.text.data(), sizeof(double) * static_cast<size_t>(ex.text.size()));
  }
  return h;
}

}  // namespace spandiff

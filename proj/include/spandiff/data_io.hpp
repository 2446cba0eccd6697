#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "spandiff/encoder.hpp"
#include "spandiff/span_geometry.hpp"

namespace spandiff {

/// One query/video pair in the JSON-lines layout used by QVHighlights:
/// {qid, query, vid, duration, clip_duration, relevant_windows,
///  saliency_scores, [relevant_clip_ids], [domain]}.
struct AnnotationRecord {
  std::string qid;
  std::string query;
  std::string vid;
  double duration = 0.0;
  double clip_duration = 2.0;
  std::vector<std::array<double, 2>> windows;  // seconds
  /// Annotator scores per clip. Without `relevant_clip_ids` there is one entry
  /// per clip; with it, entries align with those ids and other clips score 0.
  std::optional<std::vector<std::vector<double>>> saliency_scores;
  std::vector<int> relevant_clip_ids;
  std::string domain;

  /// ceil(duration / clip_duration), capped at `max_clips` when positive.
  int clip_count(int max_clips = 0) const;
  /// Windows as spans normalized by clip_count * clip_duration, clamped to
  /// [0, 1]; windows starting past the retained clips are dropped.
  SpanSet normalized_spans(int max_clips = 0) const;
  bool has_saliency() const { return saliency_scores.has_value(); }
  /// Mean annotator score per clip, truncated to `max_clips` when positive.
  Eigen::VectorXd saliency_labels(int max_clips = 0) const;

  nlohmann::json to_json() const;
  /// Validates and throws MissingField / MalformedInterval /
  /// SaliencyLengthMismatch.
  static AnnotationRecord from_json(const nlohmann::json& j);
  void validate() const;
};

/// Errors carry "path:line: " prefixes.
std::vector<AnnotationRecord> load_annotations(const std::string& path);
void write_annotations(const std::string& path, const std::vector<AnnotationRecord>& records);

/// {"train": [qid, ...], "val": [...], ...}
std::map<std::string, std::vector<std::string>> load_split(const std::string& path);
std::vector<AnnotationRecord> select_records(const std::vector<AnnotationRecord>& records,
                                             const std::vector<std::string>& qids);

/// Binary feature array: "SDFEAT1\0", u32 rows, u32 cols, float32 row-major.
void write_feature_file(const std::string& path, const Eigen::MatrixXd& data);
Eigen::MatrixXd read_feature_file(const std::string& path);

/// Directory of feature files indexed by manifest.json
/// {"video": {vid: file}, "text": {qid: file}}.
class FeatureStore {
 public:
  static FeatureStore open(const std::string& dir);
  static FeatureStore create(const std::string& dir);

  Eigen::MatrixXd video(const std::string& vid) const;
  Eigen::MatrixXd text(const std::string& qid) const;
  bool has_video(const std::string& vid) const { return video_.count(vid) > 0; }
  bool has_text(const std::string& qid) const { return text_.count(qid) > 0; }

  void put_video(const std::string& vid, const Eigen::MatrixXd& data);
  void put_text(const std::string& qid, const Eigen::MatrixXd& data);
  void save_manifest() const;
  const std::string& dir() const { return dir_; }

 private:
  std::string dir_;
  std::map<std::string, std::string> video_;
  std::map<std::string, std::string> text_;
};

struct FeatureLimits {
  int max_clips = 75;
  int max_text = 32;
  int video_dim = 0;  // 0 accepts any width
  int text_dim = 0;
};

/// Pads with zero rows to the limits; masks mark the true (truncated) lengths.
FeatureSequence pad_sequence(const Eigen::MatrixXd& rows, int length, Modality kind);

/// Throws MissingFeatureFile / DimMismatch.
std::pair<FeatureSequence, FeatureSequence> load_features(const AnnotationRecord& record,
                                                          const FeatureStore& store,
                                                          const FeatureLimits& limits);

/// Training/evaluation view of one record with unpadded features.
struct Example {
  AnnotationRecord record;
  Eigen::MatrixXd video;  // n_clips x D_v
  Eigen::MatrixXd text;   // n_tokens x D_q
  SpanSet spans;
  Eigen::VectorXd saliency;   // n_clips labels, empty when absent
  std::vector<bool> inside;   // clip overlaps a ground-truth window

  int n_clips() const { return static_cast<int>(video.rows()); }
};

struct Dataset {
  std::vector<Example> examples;
  int video_dim = 0;
  int text_dim = 0;

  size_t size() const { return examples.size(); }
  bool empty() const { return examples.empty(); }
};

/// Clip i is inside when its midpoint lies in some window.
std::vector<bool> clips_inside(const AnnotationRecord& record, int n_clips);

Example make_example(AnnotationRecord record, Eigen::MatrixXd video, Eigen::MatrixXd text,
                     const FeatureLimits& limits);

Dataset load_dataset(const std::string& annotations, const std::string& feature_dir,
                     const FeatureLimits& limits);
/// Writes <dir>/<name>.jsonl plus feature files under <dir>/features.
void save_dataset(const Dataset& data, const std::string& dir, const std::string& name);

struct SyntheticConfig {
  int n_examples = 64;
  int min_clips = 20;
  int max_clips = 30;
  int video_dim = 32;
  int text_dim = 32;
  int min_tokens = 4;
  int max_tokens = 8;
  int min_targets = 1;
  int max_targets = 2;
  double snr = 4.0;  // latent amplitude over noise std; 0 means noiseless
  double clip_duration = 2.0;
  int annotators = 3;
  double label_noise = 0.1;
  std::uint64_t seed = 7;

  nlohmann::json to_json() const;
  static SyntheticConfig from_json(const nlohmann::json& j);
  void validate() const;
};

/// Plants 1..k disjoint target segments per video. Clip relevance is 0.6..1
/// inside targets (peaking at the segment center) and 0..0.4 outside; a clip
/// feature is video background + relevance * query latent + noise, tokens are
/// the query latent mapped to the text width + noise. Annotator scores are
/// 4 * relevance plus label noise, clamped to [0, 4]. The config fully
/// determines the output.
Dataset generate_synthetic(const SyntheticConfig& cfg);

/// FNV-1a hash over every record field and feature value.
std::uint64_t dataset_fingerprint(const Dataset& data);

}  // namespace spandiff

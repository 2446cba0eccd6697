#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "spandiff/data_io.hpp"
#include "spandiff/errors.hpp"

using namespace spandiff;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("spandiff_io_" + std::to_string(std::random_device{}()) + "_" +
            std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

json base_record() {
  return {{"qid", 7},
          {"query", "a man talks"},
          {"vid", "abc_60_210"},
          {"duration", 150},
          {"relevant_windows", {{26, 42}}},
          {"relevant_clip_ids", {13, 14, 15, 16, 17, 18, 19, 20}},
          {"saliency_scores",
           {{4, 3, 2}, {2, 2, 2}, {1, 1, 1}, {3, 3, 3}, {4, 4, 4}, {0, 0, 0}, {2, 2, 2}, {1, 2, 3}}}};
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream out(path);
  for (const auto& l : lines) out << l << '\n';
}

Eigen::MatrixXd ramp(int rows, int cols) {
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = r + 0.25 * c;
  }
  return m;
}

}  // namespace

TEST_CASE("annotation windows normalize by the clip grid") {
  const AnnotationRecord r = AnnotationRecord::from_json(base_record());
  CHECK(r.qid == "7");
  CHECK(r.clip_count() == 75);
  const SpanSet spans = r.normalized_spans(75);
  REQUIRE(spans.size() == 1);
  CHECK(spans[0].center == doctest::Approx(34.0 / 150).epsilon(1e-12));
  CHECK(spans[0].width == doctest::Approx(16.0 / 150).epsilon(1e-12));

  const Eigen::VectorXd labels = r.saliency_labels();
  REQUIRE(labels.size() == 75);
  CHECK(labels(13) == doctest::Approx(3.0));
  CHECK(labels(20) == doctest::Approx(2.0));
  CHECK(labels(0) == 0.0);

  const std::vector<bool> inside = clips_inside(r, 75);
  CHECK_FALSE(inside[12]);  // midpoint 25 s
  CHECK(inside[13]);
  CHECK(inside[20]);        // midpoint 41 s
  CHECK_FALSE(inside[21]);
}

TEST_CASE("truncated clip grids drop or clip windows") {
  json j = base_record();
  j["relevant_windows"] = {{26, 42}, {120, 150}};
  const AnnotationRecord r = AnnotationRecord::from_json(j);
  CHECK(r.clip_count(50) == 50);
  const SpanSet spans = r.normalized_spans(50);
  REQUIRE(spans.size() == 1);  // the second window starts past 100 s
  CHECK(spans[0].center == doctest::Approx(34.0 / 100));
  const SpanSet edge = AnnotationRecord::from_json(j).normalized_spans(70);
  REQUIRE(edge.size() == 2);
  CHECK(edge[1].end() == doctest::Approx(1.0));
}

TEST_CASE("record validation errors") {
  json missing = base_record();
  missing.erase("duration");
  CHECK_THROWS_AS(AnnotationRecord::from_json(missing), MissingField);
  json backwards = base_record();
  backwards["relevant_windows"] = {{42, 26}};
  CHECK_THROWS_AS(AnnotationRecord::from_json(backwards), MalformedInterval);
  json past_end = base_record();
  past_end["relevant_windows"] = {{140, 160}};
  CHECK_THROWS_AS(AnnotationRecord::from_json(past_end), MalformedInterval);
  json lengths = base_record();
  lengths["saliency_scores"] = {{1}, {2}};
  CHECK_THROWS_AS(AnnotationRecord::from_json(lengths), SaliencyLengthMismatch);
  json dense = base_record();
  dense.erase("relevant_clip_ids");
  CHECK_THROWS_AS(AnnotationRecord::from_json(dense), SaliencyLengthMismatch);
  json no_labels = base_record();
  no_labels.erase("saliency_scores");
  no_labels.erase("relevant_clip_ids");
  const AnnotationRecord r = AnnotationRecord::from_json(no_labels);
  CHECK_FALSE(r.has_saliency());
  CHECK(r.saliency_labels().size() == 0);
}

TEST_CASE("jsonl loading reports the failing line") {
  TempDir tmp;
  json bad = base_record();
  bad["relevant_windows"] = {{42, 26}};
  write_lines(tmp.file("a.jsonl"), {base_record().dump(), "", bad.dump()});
  try {
    load_annotations(tmp.file("a.jsonl"));
    FAIL("expected MalformedInterval");
  } catch (const MalformedInterval& e) {
    const std::string msg = e.what();
    CHECK(msg.find("a.jsonl:3:") != std::string::npos);
    CHECK(msg.find("MalformedInterval: MalformedInterval") == std::string::npos);
  }
  write_lines(tmp.file("b.jsonl"), {"{not json"});
  CHECK_THROWS_AS(load_annotations(tmp.file("b.jsonl")), MissingField);
}

TEST_CASE("annotation round trip") {
  TempDir tmp;
  json other = base_record();
  other["qid"] = "q2";
  other["domain"] = "VLOG";
  other.erase("saliency_scores");
  other.erase("relevant_clip_ids");
  write_lines(tmp.file("in.jsonl"), {base_record().dump(), other.dump()});
  const auto records = load_annotations(tmp.file("in.jsonl"));
  write_annotations(tmp.file("out.jsonl"), records);
  const auto again = load_annotations(tmp.file("out.jsonl"));
  REQUIRE(again.size() == 2);
  for (size_t i = 0; i < 2; ++i) CHECK(again[i].to_json() == records[i].to_json());
  CHECK(again[1].domain == "VLOG");

  std::ofstream(tmp.file("split.json")) << R"({"train": ["q2"], "val": [7]})";
  const auto split = load_split(tmp.file("split.json"));
  CHECK(select_records(records, split.at("train")).at(0).qid == "q2");
  CHECK(select_records(records, split.at("val")).at(0).qid == "7");
}

TEST_CASE("feature files round trip through float32") {
  TempDir tmp;
  const Eigen::MatrixXd m = ramp(5, 3);
  write_feature_file(tmp.file("f.bin"), m);
  const Eigen::MatrixXd back = read_feature_file(tmp.file("f.bin"));
  CHECK(back.rows() == 5);
  CHECK(back.cols() == 3);
  CHECK((back - m).cwiseAbs().maxCoeff() < 1e-6);
  std::ofstream(tmp.file("junk.bin")) << "nope";
  CHECK_THROWS_AS(read_feature_file(tmp.file("junk.bin")), MissingFeatureFile);
  CHECK_THROWS_AS(read_feature_file(tmp.file("absent.bin")), MissingFeatureFile);
}

TEST_CASE("feature limits truncate and pad") {
  TempDir tmp;
  FeatureStore store = FeatureStore::create(tmp.file("feat"));
  store.put_video("long", ramp(100, 4));
  store.put_video("short", ramp(40, 4));
  store.put_text("q", ramp(50, 3));
  store.save_manifest();
  const FeatureStore opened = FeatureStore::open(tmp.file("feat"));

  AnnotationRecord r;
  r.qid = "q";
  r.vid = "long";
  r.duration = 200;
  auto [v, t] = load_features(r, opened, FeatureLimits{75, 32, 4, 3});
  CHECK(v.length() == 75);
  CHECK(v.valid_count() == 75);
  CHECK(t.length() == 32);
  CHECK(t.valid_count() == 32);
  CHECK(v.tokens.value()(74, 0) == doctest::Approx(74.0));

  r.vid = "short";
  auto [v2, t2] = load_features(r, opened, FeatureLimits{});
  CHECK(v2.length() == 75);
  CHECK(v2.valid_count() == 40);
  CHECK(v2.mask[39]);
  CHECK_FALSE(v2.mask[40]);
  CHECK(v2.tokens.value().bottomRows(35).isZero());

  CHECK_THROWS_AS(load_features(r, opened, FeatureLimits{75, 32, 8, 0}), DimMismatch);
  r.vid = "absent";
  CHECK_THROWS_AS(load_features(r, opened, FeatureLimits{}), MissingFeatureFile);
  CHECK_THROWS_AS(FeatureStore::open(tmp.file("nowhere")), MissingFeatureFile);
}

TEST_CASE("synthetic data is determined by its config") {
  SyntheticConfig cfg;
  cfg.n_examples = 12;
  const Dataset a = generate_synthetic(cfg);
  const Dataset b = generate_synthetic(cfg);
  CHECK(dataset_fingerprint(a) == dataset_fingerprint(b));
  cfg.seed = 8;
  CHECK(dataset_fingerprint(generate_synthetic(cfg)) != dataset_fingerprint(a));

  for (const auto& ex : a.examples) {
    CHECK(ex.n_clips() >= cfg.min_clips);
    CHECK(ex.n_clips() <= cfg.max_clips);
    CHECK(ex.video.cols() == cfg.video_dim);
    CHECK(ex.saliency.size() == ex.n_clips());
    for (const auto& s : ex.spans) {
      CHECK(s.width > 0.0);
      CHECK(s.start() >= 0.0);
      CHECK(s.end() <= 1.0 + 1e-12);
    }
  }
  CHECK(SyntheticConfig::from_json(cfg.to_json()).to_json() == cfg.to_json());
  CHECK_THROWS_AS(SyntheticConfig::from_json({{"colour", 3}}), ConfigError);
  json tight = cfg.to_json();
  tight["max_targets"] = 9;
  CHECK_THROWS_AS(SyntheticConfig::from_json(tight), ConfigError);
}

TEST_CASE("two planted targets are disjoint") {
  SyntheticConfig cfg;
  cfg.n_examples = 20;
  cfg.min_targets = cfg.max_targets = 2;
  for (const auto& ex : generate_synthetic(cfg).examples) {
    REQUIRE(ex.record.windows.size() == 2);
    const auto& w = ex.record.windows;
    CHECK((w[0][1] < w[1][0] || w[1][1] < w[0][0]));
  }
}

TEST_CASE("noiseless plant is separable by nearest centroid") {
  SyntheticConfig cfg;
  cfg.n_examples = 30;
  cfg.snr = 0.0;
  long correct = 0, total = 0;
  for (const auto& ex : generate_synthetic(cfg).examples) {
    Eigen::RowVectorXd in = Eigen::RowVectorXd::Zero(ex.video.cols());
    Eigen::RowVectorXd out = in;
    int nin = 0, nout = 0;
    for (int i = 0; i < ex.n_clips(); ++i) {
      if (ex.inside[static_cast<size_t>(i)]) {
        in += ex.video.row(i);
        ++nin;
      } else {
        out += ex.video.row(i);
        ++nout;
      }
    }
    REQUIRE(nin > 0);
    REQUIRE(nout > 0);
    in /= nin;
    out /= nout;
    for (int i = 0; i < ex.n_clips(); ++i) {
      const bool predicted = (ex.video.row(i) - in).norm() < (ex.video.row(i) - out).norm();
      correct += predicted == ex.inside[static_cast<size_t>(i)] ? 1 : 0;
      ++total;
    }
  }
  CHECK(correct == total);
}

TEST_CASE("saved datasets load back identically") {
  TempDir tmp;
  SyntheticConfig cfg;
  cfg.n_examples = 5;
  const Dataset a = generate_synthetic(cfg);
  save_dataset(a, tmp.path.string(), "train");
  const Dataset b = load_dataset(tmp.file("train.jsonl"), tmp.file("features"), FeatureLimits{});
  REQUIRE(b.size() == a.size());
  CHECK(b.video_dim == a.video_dim);
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(b.examples[i].record.to_json() == a.examples[i].record.to_json());
    CHECK((b.examples[i].video - a.examples[i].video).cwiseAbs().maxCoeff() < 1e-5);
    CHECK(b.examples[i].inside == a.examples[i].inside);
  }
}

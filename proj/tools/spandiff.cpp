// spandiff: synth / train / eval / sample / report.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "spandiff/errors.hpp"
#include "spandiff/trainer.hpp"
#include "svg.hpp"

using namespace spandiff;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Where examples come from: jsonl + feature directory, or a synthetic config.
struct DataArgs {
  std::string annotations;
  std::string feature_dir;
  std::string synthetic_config;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--annotations", annotations, "JSON-lines annotation file");
    cmd->add_option("--feature-dir", feature_dir, "Directory with manifest.json and feature files");
    cmd->add_option("--synthetic-config", synthetic_config,
                    "Generate examples in memory from this synthetic config JSON");
  }

  Dataset load(const FeatureLimits& limits) const {
    if (!synthetic_config.empty()) {
      std::ifstream f(synthetic_config);
      if (!f) throw ConfigError("cannot open synthetic config '" + synthetic_config + "'");
      return generate_synthetic(SyntheticConfig::from_json(json::parse(f)));
    }
    if (annotations.empty() || feature_dir.empty()) {
      throw ConfigError("give --annotations with --feature-dir, or --synthetic-config");
    }
    return load_dataset(annotations, feature_dir, limits);
  }
};

struct ConfigArgs {
  std::string path;
  std::vector<std::string> overrides;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--config", path, "Config JSON; missing keys take the full-scale defaults");
    cmd->add_option("--set", overrides, "Override one key, e.g. --set train.lr=1e-3")
        ->allow_extra_args(false);
  }

  // Without --config the compact desk model is the base.
  Config build() const {
    Config cfg = path.empty() ? desk_config() : Config::load(path);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    cfg.validate();
    return cfg;
  }
};

// "1..6", "1,3,5" or "5".
std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  const auto dots = text.find("..");
  try {
    if (dots != std::string::npos) {
      const int lo = std::stoi(text.substr(0, dots)), hi = std::stoi(text.substr(dots + 2));
      if (lo > hi) throw ConfigError("empty range '" + text + "'");
      for (int v = lo; v <= hi; ++v) out.push_back(v);
      return out;
    }
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
  } catch (const std::logic_error&) {
    throw ConfigError("cannot parse integer list '" + text + "'");
  }
  if (out.empty()) throw ConfigError("empty integer list");
  for (int v : out) {
    if (v < 1) throw ConfigError("list values must be >= 1, got " + std::to_string(v));
  }
  return out;
}

FeatureLimits limits_for(const GroundingModel& model) {
  const Config& c = model.config();
  return {c.model.max_clips, c.model.max_text, model.video_dim(), model.text_dim()};
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::string out;
  std::string synthetic_config;
  std::uint64_t seed = 7;
  int n_train = 512;
  int n_val = 256;
};

// Train and validation share the generator settings but not the seed; ids
// carry the split name so both can live in one feature directory.
int run_synth(const SynthArgs& a) {
  SyntheticConfig sc;
  if (!a.synthetic_config.empty()) {
    std::ifstream f(a.synthetic_config);
    if (!f) throw ConfigError("cannot open synthetic config '" + a.synthetic_config + "'");
    sc = SyntheticConfig::from_json(json::parse(f));
  }
  fs::create_directories(a.out);
  auto emit = [&](const std::string& split, int n, std::uint64_t seed) {
    SyntheticConfig c = sc;
    c.n_examples = n;
    c.seed = seed;
    c.validate();
    Dataset d = generate_synthetic(c);
    for (auto& ex : d.examples) {
      ex.record.qid = split + "_" + ex.record.qid;
      ex.record.vid = split + "_" + ex.record.vid;
    }
    save_dataset(d, a.out, split);
    std::ofstream((fs::path(a.out) / (split + "_synthetic.json")).string()) << c.to_json().dump(2)
                                                                             << '\n';
    std::printf("%s: %d examples (seed %llu)\n", split.c_str(), n,
                static_cast<unsigned long long>(seed));
  };
  emit("train", a.n_train, a.seed);
  emit("val", a.n_val, a.seed + 1);

  // annotator means live in [0, 4]; a mean of 2 marks a highlight clip
  Config cfg = desk_config();
  cfg.saliency.positive_threshold = 2.0;
  cfg.save((fs::path(a.out) / "config.json").string());
  std::printf("wrote %s/{train,val}.jsonl, features/, config.json\n", a.out.c_str());
  return 0;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  DataArgs data;
  ConfigArgs config;
  std::string val_annotations;
  std::string out;
  std::string log_csv;
};

int run_train(const TrainArgs& a) {
  const Config cfg = a.config.build();
  const FeatureLimits limits{cfg.model.max_clips, cfg.model.max_text, 0, 0};
  const Dataset train_set = a.data.load(limits);
  if (train_set.empty()) throw EmptyInput("training set is empty");
  Dataset val;
  if (!a.val_annotations.empty()) {
    if (a.data.feature_dir.empty()) throw ConfigError("--val-annotations needs --feature-dir");
    val = load_dataset(a.val_annotations, a.data.feature_dir,
                       {cfg.model.max_clips, cfg.model.max_text, train_set.video_dim,
                        train_set.text_dim});
  }
  std::printf("train %zu examples, val %zu, D_v=%d D_q=%d\n", train_set.size(), val.size(),
              train_set.video_dim, train_set.text_dim);

  GroundingModel model(cfg, train_set.video_dim, train_set.text_dim);
  std::printf("%zu parameters\n", model.params().scalar_count());
  std::ofstream log;
  if (!a.log_csv.empty()) {
    log.open(a.log_csv);
    if (!log) throw ConfigError("cannot write '" + a.log_csv + "'");
    log << "iteration,epoch,n_proposals,loss,cls,span,hinge,kl,seconds\n";
  }
  TrainHooks hooks;
  hooks.on_log = [&](const TrainLogEntry& e) {
    if (log.is_open()) {
      log << e.iteration << ',' << e.epoch << ',' << e.n_proposals << ',' << e.loss << ',' << e.cls
          << ',' << e.span << ',' << e.hinge << ',' << e.kl << ',' << e.seconds << '\n';
    }
    if (cfg.train.log_every > 0 && e.iteration % cfg.train.log_every == 0) {
      std::printf("it %6d  ep %4d  N %2d  loss %.4f  (cls %.3f span %.3f hinge %.3f kl %.3f)  %.1fs\n",
                  e.iteration, e.epoch, e.n_proposals, e.loss, e.cls, e.span, e.hinge, e.kl,
                  e.seconds);
      std::fflush(stdout);
    }
  };
  hooks.on_validation = [](const ValidationPoint& v) {
    std::printf("validation it %d  mAP@Avg %.2f\n", v.iteration, 100.0 * v.map_avg);
    std::fflush(stdout);
  };
  const TrainResult r = train(model, train_set, val.empty() ? nullptr : &val, a.out, hooks);
  std::printf("done: %d iterations in %.1fs", r.state.iteration, r.seconds);
  if (r.state.best_iteration >= 0) {
    std::printf(", best val mAP@Avg %.2f at it %d", 100.0 * r.state.best_validation,
                r.state.best_iteration);
  }
  std::printf("\ncheckpoint: %s\n", a.out.c_str());
  return 0;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  DataArgs data;
  std::string checkpoint;
  std::string steps = "5";
  std::string proposals = "20";
  std::uint64_t seed = 7;
  std::string out_dir;
};

const std::vector<std::string> kEvalColumns{"N",        "steps",   "R1@0.5", "R1@0.7",
                                            "mAP@0.5",  "mAP@0.75", "mAP@Avg", "HL-mAP",
                                            "HIT@1",    "Spearman", "seconds"};

std::string render_table(const std::vector<std::string>& header,
                         const std::vector<std::vector<std::string>>& rows) {
  std::vector<size_t> w(header.size());
  for (size_t c = 0; c < header.size(); ++c) w[c] = header[c].size();
  for (const auto& r : rows) {
    for (size_t c = 0; c < r.size() && c < w.size(); ++c) w[c] = std::max(w[c], r[c].size());
  }
  std::ostringstream o;
  auto line = [&](const std::vector<std::string>& cells) {
    for (size_t c = 0; c < w.size(); ++c) {
      const std::string& s = c < cells.size() ? cells[c] : "";
      o << (c ? "  " : "") << std::string(w[c] - s.size(), ' ') << s;
    }
    o << '\n';
  };
  line(header);
  size_t total = 0;
  for (size_t x : w) total += x;
  o << std::string(total + 2 * (w.size() - 1), '-') << '\n';
  for (const auto& r : rows) line(r);
  return o.str();
}

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

double threshold_value(const std::vector<ThresholdValue>& v, double thr) {
  for (const auto& t : v) {
    if (std::abs(t.threshold - thr) < 1e-9) return t.value;
  }
  return std::nan("");
}

int run_eval(const EvalArgs& a) {
  const LoadedCheckpoint ck = load_checkpoint(a.checkpoint);
  const Dataset data = a.data.load(limits_for(ck.model));
  if (data.empty()) throw EmptyInput("evaluation set is empty");
  const std::vector<int> steps = parse_int_list(a.steps);
  const std::vector<int> proposals = parse_int_list(a.proposals);
  std::printf("checkpoint %s (trained %d iterations at N<=%d), %zu queries\n",
              a.checkpoint.c_str(), ck.state.iteration, ck.model.config().moment.N_train_max,
              data.size());

  std::vector<std::vector<std::string>> rows;
  for (int n : proposals) {
    for (int s : steps) {
      InferenceOptions opts = InferenceOptions::from_config(ck.model.config());
      opts.n_proposals = n;
      opts.moment_steps = opts.saliency_steps = s;
      const EvaluationResult ev = evaluate(ck.model, data, opts, a.seed);
      rows.push_back({std::to_string(n), std::to_string(s),
                      fixed2(100 * threshold_value(ev.moments.r1, 0.5)),
                      fixed2(100 * threshold_value(ev.moments.r1, 0.7)),
                      fixed2(100 * threshold_value(ev.moments.map, 0.5)),
                      fixed2(100 * threshold_value(ev.moments.map, 0.75)),
                      fixed2(100 * ev.moments.map_avg), fixed2(100 * ev.highlights.map),
                      fixed2(100 * ev.highlights.hit1), fixed2(100 * ev.saliency_spearman),
                      fixed2(ev.seconds)});
      std::fflush(stdout);
    }
  }
  const std::string table = render_table(kEvalColumns, rows);
  std::cout << table;
  if (!a.out_dir.empty()) {
    fs::create_directories(a.out_dir);
    std::ofstream csv(fs::path(a.out_dir) / "eval.csv");
    for (size_t c = 0; c < kEvalColumns.size(); ++c) csv << (c ? "," : "") << kEvalColumns[c];
    csv << '\n';
    for (const auto& r : rows) {
      for (size_t c = 0; c < r.size(); ++c) csv << (c ? "," : "") << r[c];
      csv << '\n';
    }
    std::ofstream(fs::path(a.out_dir) / "eval.txt") << table;
    std::printf("wrote %s/eval.csv and eval.txt\n", a.out_dir.c_str());
  }
  return 0;
}

// ---------------------------------------------------------------- sample

struct SampleArgs {
  DataArgs data;
  std::string checkpoint;
  std::string qid;
  int index = 0;
  int steps = 5;
  int proposals = 20;
  std::uint64_t seed = 7;
  std::string out;
};

json spans_json(const SpanSet& spans) {
  json arr = json::array();
  for (const auto& s : spans) arr.push_back({s.start(), s.end()});
  return arr;
}

int run_sample(const SampleArgs& a) {
  const LoadedCheckpoint ck = load_checkpoint(a.checkpoint);
  const Dataset data = a.data.load(limits_for(ck.model));
  size_t index = static_cast<size_t>(a.index);
  if (!a.qid.empty()) {
    index = data.size();
    for (size_t i = 0; i < data.size(); ++i) {
      if (data.examples[i].record.qid == a.qid) index = i;
    }
    if (index == data.size()) throw ConfigError("no query with id '" + a.qid + "'");
  }
  if (index >= data.size()) throw ConfigError("example index out of range");
  const Example& ex = data.examples[index];

  InferenceOptions opts = InferenceOptions::from_config(ck.model.config());
  opts.n_proposals = a.proposals;
  opts.moment_steps = opts.saliency_steps = a.steps;
  std::mt19937_64 rng(a.seed);
  const InferenceResult r = ck.model.infer(ex, opts, rng, true);
  const double scale = ck.model.config().diffusion.scale;
  const SaliencyRange range = ck.model.saliency_range();

  json steps = json::array();
  for (size_t k = 0; k < r.moment_trace.predictions.size(); ++k) {
    const ProposalSet& in = r.moment_trace.inputs[k];
    const ProposalSet& pred = r.moment_trace.predictions[k];
    const Eigen::VectorXd fg = pred.foreground_prob();
    json step{{"t", in.step},
              {"inputs", spans_json(working_to_spans(in.spans, scale))},
              {"predictions", spans_json(working_to_spans(pred.spans, scale))},
              {"foreground", std::vector<double>(fg.data(), fg.data() + fg.size())}};
    if (k < r.saliency_trace.predictions.size()) {
      const Eigen::VectorXd s = range.to_labels(r.saliency_trace.predictions[k]);
      step["saliency"] = std::vector<double>(s.data(), s.data() + s.size());
    }
    steps.push_back(step);
  }
  json final_moments = json::array();
  for (const auto& m : r.moments) final_moments.push_back({m.span.start(), m.span.end(), m.score});
  const json out{
      {"qid", ex.record.qid},
      {"query", ex.record.query},
      {"ground_truth", spans_json(ex.spans)},
      {"labels", std::vector<double>(ex.saliency.data(), ex.saliency.data() + ex.saliency.size())},
      {"steps", steps},
      {"moments", final_moments},
      {"saliency", std::vector<double>(r.saliency.data(), r.saliency.data() + r.saliency.size())}};
  if (a.out.empty()) {
    std::cout << out.dump(2) << '\n';
  } else {
    std::ofstream(a.out) << out.dump(2) << '\n';
    std::printf("wrote trajectory of '%s' (%zu steps) to %s\n", ex.record.qid.c_str(),
                steps.size(), a.out.c_str());
  }
  return 0;
}

// ---------------------------------------------------------------- report

struct ReportArgs {
  std::string eval_csv;
  std::string trajectory;
  std::string train_log;
  std::string out_dir = ".";
};

std::vector<std::map<std::string, std::string>> read_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open '" + path + "'");
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    return cells;
  };
  std::string line;
  if (!std::getline(f, line)) throw ConfigError("'" + path + "' is empty");
  const std::vector<std::string> header = split(line);
  std::vector<std::map<std::string, std::string>> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    std::map<std::string, std::string> row;
    for (size_t c = 0; c < header.size() && c < cells.size(); ++c) row[header[c]] = cells[c];
    rows.push_back(std::move(row));
  }
  return rows;
}

void report_eval(const std::string& path, const fs::path& out) {
  const auto rows = read_csv(path);
  std::vector<std::vector<std::string>> table;
  std::map<int, svg::Series> map_by_n, hit_by_n;
  std::map<int, svg::Series> map_by_steps;
  for (const auto& r : rows) {
    std::vector<std::string> cells;
    for (const auto& c : kEvalColumns) cells.push_back(r.count(c) ? r.at(c) : "");
    table.push_back(cells);
    const int n = std::stoi(r.at("N")), s = std::stoi(r.at("steps"));
    map_by_n[n].label = hit_by_n[n].label = "N=" + std::to_string(n);
    map_by_n[n].x.push_back(s);
    map_by_n[n].y.push_back(std::stod(r.at("mAP@Avg")));
    hit_by_n[n].x.push_back(s);
    hit_by_n[n].y.push_back(std::stod(r.at("HIT@1")));
    map_by_steps[s].label = std::to_string(s) + " steps";
    map_by_steps[s].x.push_back(n);
    map_by_steps[s].y.push_back(std::stod(r.at("mAP@Avg")));
  }
  const std::string text = render_table(kEvalColumns, table);
  std::ofstream(out / "metrics.txt") << text;
  std::cout << text;
  auto values = [](const std::map<int, svg::Series>& m) {
    std::vector<svg::Series> v;
    for (const auto& [k, s] : m) v.push_back(s);
    return v;
  };
  svg::write((out / "step_sweep_map.svg").string(),
             svg::line_chart("Moment retrieval vs sampling steps", "sampling steps", "mAP@Avg",
                             values(map_by_n)));
  svg::write((out / "step_sweep_hit1.svg").string(),
             svg::line_chart("Highlight detection vs sampling steps", "sampling steps", "HIT@1",
                             values(hit_by_n)));
  svg::write((out / "proposal_sweep_map.svg").string(),
             svg::line_chart("Moment retrieval vs inference proposals", "proposals N", "mAP@Avg",
                             values(map_by_steps)));
}

void report_trajectory(const std::string& path, const fs::path& out) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open '" + path + "'");
  const json j = json::parse(f);
  std::vector<svg::Lane> lanes;
  svg::Lane gt{"ground truth", {}};
  for (const auto& s : j.at("ground_truth")) gt.bars.push_back({s[0], s[1], 1.0});
  lanes.push_back(gt);
  for (const auto& step : j.at("steps")) {
    svg::Lane lane{"x0 @ t=" + std::to_string(step.at("t").get<int>()), {}};
    const auto& preds = step.at("predictions");
    const auto& fg = step.at("foreground");
    for (size_t i = 0; i < preds.size(); ++i) {
      lane.bars.push_back({preds[i][0], preds[i][1], fg[i].get<double>()});
    }
    lanes.push_back(lane);
  }
  svg::Lane final_lane{"final top-5", {}};
  for (size_t i = 0; i < j.at("moments").size() && i < 5; ++i) {
    const auto& m = j.at("moments")[i];
    final_lane.bars.push_back({m[0], m[1], m[2]});
  }
  lanes.push_back(final_lane);
  svg::write((out / "trajectory_spans.svg").string(),
             svg::span_lanes("Span refinement for " + j.at("qid").get<std::string>(), lanes));

  std::vector<svg::Series> series;
  const auto& labels = j.at("labels");
  if (!labels.empty()) {
    svg::Series s{"labels", {}, {}};
    for (size_t i = 0; i < labels.size(); ++i) s.x.push_back(i), s.y.push_back(labels[i]);
    series.push_back(s);
  }
  for (const auto& step : j.at("steps")) {
    if (!step.contains("saliency")) continue;
    svg::Series s{"t=" + std::to_string(step.at("t").get<int>()), {}, {}};
    const auto& sal = step.at("saliency");
    for (size_t i = 0; i < sal.size(); ++i) s.x.push_back(i), s.y.push_back(sal[i]);
    series.push_back(s);
  }
  svg::write((out / "trajectory_saliency.svg").string(),
             svg::line_chart("Generated saliency per step", "clip", "score", series));
}

void report_train_log(const std::string& path, const fs::path& out) {
  const auto rows = read_csv(path);
  std::map<std::string, svg::Series> series;
  for (const char* k : {"loss", "cls", "span", "hinge", "kl"}) series[k].label = k;
  // thin long logs to about 400 points
  const size_t stride = std::max<size_t>(1, rows.size() / 400);
  for (size_t i = 0; i < rows.size(); i += stride) {
    const double it = std::stod(rows[i].at("iteration"));
    for (auto& [k, s] : series) {
      s.x.push_back(it);
      s.y.push_back(std::stod(rows[i].at(k)));
    }
  }
  std::vector<svg::Series> v;
  for (const auto& [k, s] : series) v.push_back(s);
  svg::write((out / "training_loss.svg").string(),
             svg::line_chart("Training loss", "iteration", "loss", v));
}

int run_report(const ReportArgs& a) {
  if (a.eval_csv.empty() && a.trajectory.empty() && a.train_log.empty()) {
    throw ConfigError("report needs at least one of --eval, --trajectory, --train-log");
  }
  const fs::path out(a.out_dir);
  fs::create_directories(out);
  if (!a.eval_csv.empty()) report_eval(a.eval_csv, out);
  if (!a.trajectory.empty()) report_trajectory(a.trajectory, out);
  if (!a.train_log.empty()) report_train_log(a.train_log, out);
  std::printf("report written to %s\n", out.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Diffusion-based moment retrieval and highlight detection at desk scale."};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic train/val dataset");
  synth_cmd->add_option("--out", synth.out, "Output directory")->required();
  synth_cmd->add_option("--seed", synth.seed, "Train seed; val uses seed + 1");
  synth_cmd->add_option("--synthetic-config", synth.synthetic_config, "Generator settings JSON");
  synth_cmd->add_option("--train", synth.n_train, "Training examples")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--val", synth.n_val, "Validation examples")->check(CLI::PositiveNumber);

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train a model and write a checkpoint");
  tr.data.add_to(train_cmd);
  tr.config.add_to(train_cmd);
  train_cmd->add_option("--val-annotations", tr.val_annotations,
                        "Validation annotations (features from --feature-dir)");
  train_cmd->add_option("--out", tr.out, "Checkpoint path")->required();
  train_cmd->add_option("--log", tr.log_csv, "Per-iteration loss CSV");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint over steps x proposals");
  ev.data.add_to(eval_cmd);
  eval_cmd->add_option("--checkpoint", ev.checkpoint, "Checkpoint path")->required();
  eval_cmd->add_option("--steps", ev.steps, "Sampling steps: 5, 1,3,5 or 1..6");
  eval_cmd->add_option("--proposals", ev.proposals, "Inference proposals: 20 or 5,20,100");
  eval_cmd->add_option("--seed", ev.seed, "Evaluation seed");
  eval_cmd->add_option("--out-dir", ev.out_dir, "Write eval.csv and eval.txt here");

  SampleArgs sa;
  auto* sample_cmd = app.add_subcommand("sample", "Dump the refinement trajectory of one query");
  sa.data.add_to(sample_cmd);
  sample_cmd->add_option("--checkpoint", sa.checkpoint, "Checkpoint path")->required();
  sample_cmd->add_option("--qid", sa.qid, "Query id (overrides --index)");
  sample_cmd->add_option("--index", sa.index, "Example index")->check(CLI::NonNegativeNumber);
  sample_cmd->add_option("--steps", sa.steps, "Sampling steps")->check(CLI::PositiveNumber);
  sample_cmd->add_option("--proposals", sa.proposals, "Inference proposals")
      ->check(CLI::PositiveNumber);
  sample_cmd->add_option("--seed", sa.seed, "Sampling seed");
  sample_cmd->add_option("--out", sa.out, "Trajectory JSON (stdout when omitted)");

  ReportArgs rep;
  auto* report_cmd = app.add_subcommand("report", "Render tables and SVG plots");
  report_cmd->add_option("--eval", rep.eval_csv, "eval.csv from the eval command");
  report_cmd->add_option("--trajectory", rep.trajectory, "JSON from the sample command");
  report_cmd->add_option("--train-log", rep.train_log, "CSV from train --log");
  report_cmd->add_option("--out-dir", rep.out_dir, "Output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth_cmd) return run_synth(synth);
    if (*train_cmd) return run_train(tr);
    if (*eval_cmd) return run_eval(ev);
    if (*sample_cmd) return run_sample(sa);
    if (*report_cmd) return run_report(rep);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}

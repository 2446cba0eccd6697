#include "spandiff/config.hpp"

#include <fstream>
#include <sstream>

#include "spandiff/errors.hpp"

namespace spandiff {

using nlohmann::json;

json Config::to_json() const {
  json j;
  j["diffusion"] = {{"T", diffusion.T},
                    {"schedule", to_string(diffusion.schedule)},
                    {"scale", diffusion.scale},
                    {"eta", diffusion.eta}};
  j["model"] = {{"dim", model.dim}, {"max_clips", model.max_clips}, {"max_text", model.max_text}};
  j["encoder"] = {{"layers", encoder.layers},
                  {"heads", encoder.heads},
                  {"ffn_dim", encoder.ffn_dim},
                  {"dropout", encoder.dropout}};
  j["moment"] = {{"N_train_max", moment.N_train_max},
                 {"N_infer", moment.N_infer},
                 {"steps", moment.steps},
                 {"renewal_threshold", moment.renewal_threshold},
                 {"decoder_layers", moment.decoder_layers},
                 {"heads", moment.heads},
                 {"ffn_dim", moment.ffn_dim},
                 {"dynamic_dim", moment.dynamic_dim},
                 {"aux_loss", moment.aux_loss},
                 {"nms", moment.nms},
                 {"nms_iou", moment.nms_iou}};
  j["saliency"] = {{"steps", saliency.steps},
                   {"label_range", {saliency.label_min, saliency.label_max}},
                   {"positive_threshold", saliency.positive_threshold}};
  j["loss"] = {{"lambda_l1", loss.lambda_l1},
               {"lambda_iou", loss.lambda_iou},
               {"lambda_class", loss.lambda_class},
               {"lambda_saliency", loss.lambda_saliency},
               {"margin", loss.margin},
               {"hinge_pairs", loss.hinge_pairs}};
  j["train"] = {{"epochs", train.epochs},
                {"optimizer", train.optimizer},
                {"lr", train.lr},
                {"weight_decay", train.weight_decay},
                {"batch_size", train.batch_size},
                {"seed", train.seed},
                {"N_start", train.N_start},
                {"ramp_fraction", train.ramp_fraction},
                {"grad_clip", train.grad_clip},
                {"max_iterations", train.max_iterations},
                {"eval_every", train.eval_every},
                {"log_every", train.log_every}};
  j["eval"] = {{"r1_thresholds", eval.r1_thresholds},
               {"map_thresholds", eval.map_thresholds},
               {"max_predictions", eval.max_predictions},
               {"seed", eval.seed}};
  return j;
}

Config Config::from_json(const json& in) {
  json merged = Config{}.to_json();
  if (!in.is_object()) throw ConfigError("config root must be an object");
  for (const auto& [section, body] : in.items()) {
    if (!merged.contains(section)) throw ConfigError("unknown config section '" + section + "'");
    if (!body.is_object()) throw ConfigError("config section '" + section + "' must be an object");
    for (const auto& [key, value] : body.items()) {
      if (!merged[section].contains(key)) {
        throw ConfigError("unknown config key '" + section + "." + key + "'");
      }
      merged[section][key] = value;
    }
  }
  Config c;
  try {
    const auto& d = merged["diffusion"];
    c.diffusion.T = d["T"].get<int>();
    c.diffusion.schedule = parse_schedule_kind(d["schedule"].get<std::string>());
    c.diffusion.scale = d["scale"].get<double>();
    c.diffusion.eta = d["eta"].get<double>();
    const auto& m = merged["model"];
    c.model.dim = m["dim"].get<int>();
    c.model.max_clips = m["max_clips"].get<int>();
    c.model.max_text = m["max_text"].get<int>();
    const auto& e = merged["encoder"];
    c.encoder.layers = e["layers"].get<int>();
    c.encoder.heads = e["heads"].get<int>();
    c.encoder.ffn_dim = e["ffn_dim"].get<int>();
    c.encoder.dropout = e["dropout"].get<double>();
    const auto& mo = merged["moment"];
    c.moment.N_train_max = mo["N_train_max"].get<int>();
    c.moment.N_infer = mo["N_infer"].get<int>();
    c.moment.steps = mo["steps"].get<int>();
    c.moment.renewal_threshold = mo["renewal_threshold"].get<double>();
    c.moment.decoder_layers = mo["decoder_layers"].get<int>();
    c.moment.heads = mo["heads"].get<int>();
    c.moment.ffn_dim = mo["ffn_dim"].get<int>();
    c.moment.dynamic_dim = mo["dynamic_dim"].get<int>();
    c.moment.aux_loss = mo["aux_loss"].get<bool>();
    c.moment.nms = mo["nms"].get<bool>();
    c.moment.nms_iou = mo["nms_iou"].get<double>();
    const auto& s = merged["saliency"];
    c.saliency.steps = s["steps"].get<int>();
    const auto range = s["label_range"].get<std::vector<double>>();
    if (range.size() != 2) throw ConfigError("saliency.label_range needs two numbers");
    c.saliency.label_min = range[0];
    c.saliency.label_max = range[1];
    c.saliency.positive_threshold = s["positive_threshold"].get<double>();
    const auto& l = merged["loss"];
    c.loss.lambda_l1 = l["lambda_l1"].get<double>();
    c.loss.lambda_iou = l["lambda_iou"].get<double>();
    c.loss.lambda_class = l["lambda_class"].get<double>();
    c.loss.lambda_saliency = l["lambda_saliency"].get<double>();
    c.loss.margin = l["margin"].get<double>();
    c.loss.hinge_pairs = l["hinge_pairs"].get<int>();
    const auto& t = merged["train"];
    c.train.epochs = t["epochs"].get<int>();
    c.train.optimizer = t["optimizer"].get<std::string>();
    c.train.lr = t["lr"].get<double>();
    c.train.weight_decay = t["weight_decay"].get<double>();
    c.train.batch_size = t["batch_size"].get<int>();
    c.train.seed = t["seed"].get<std::uint64_t>();
    c.train.N_start = t["N_start"].get<int>();
    c.train.ramp_fraction = t["ramp_fraction"].get<double>();
    c.train.grad_clip = t["grad_clip"].get<double>();
    c.train.max_iterations = t["max_iterations"].get<int>();
    c.train.eval_every = t["eval_every"].get<int>();
    c.train.log_every = t["log_every"].get<int>();
    const auto& ev = merged["eval"];
    c.eval.r1_thresholds = ev["r1_thresholds"].get<std::vector<double>>();
    c.eval.map_thresholds = ev["map_thresholds"].get<std::vector<double>>();
    c.eval.max_predictions = ev["max_predictions"].get<int>();
    c.eval.seed = ev["seed"].get<std::uint64_t>();
  } catch (const json::exception& ex) {
    throw ConfigError(std::string("bad config value: ") + ex.what());
  }
  c.validate();
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config " + path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& ex) {
    throw ConfigError("cannot parse " + path + ": " + ex.what());
  }
  return from_json(j);
}

void Config::save(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write config " + path);
  f << to_json().dump(2) << "\n";
}

void Config::set(const std::string& dotted_key, const std::string& value) {
  const auto dot = dotted_key.find('.');
  if (dot == std::string::npos) throw ConfigError("override key needs a section: " + dotted_key);
  json parsed;
  try {
    parsed = json::parse(value);
  } catch (const json::exception&) {
    parsed = value;
  }
  json patch;
  patch[dotted_key.substr(0, dot)][dotted_key.substr(dot + 1)] = parsed;
  json current = to_json();
  for (const auto& [section, body] : patch.items()) {
    for (const auto& [key, v] : body.items()) {
      if (!current.contains(section) || !current[section].contains(key)) {
        throw ConfigError("unknown config key '" + dotted_key + "'");
      }
      current[section][key] = v;
    }
  }
  *this = from_json(current);
}

void Config::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  require(diffusion.T >= 1, "diffusion.T must be >= 1");
  require(diffusion.scale > 0.0, "diffusion.scale must be positive");
  require(diffusion.eta >= 0.0, "diffusion.eta must be >= 0");
  require(model.dim > 0 && model.dim % 2 == 0, "model.dim must be positive and even");
  require(model.max_clips > 0 && model.max_text > 0, "model.max_clips/max_text must be positive");
  require(encoder.layers >= 0, "encoder.layers must be >= 0");
  require(encoder.heads >= 1 && model.dim % encoder.heads == 0,
          "encoder.heads must divide model.dim");
  require(moment.heads >= 1 && model.dim % moment.heads == 0, "moment.heads must divide model.dim");
  require(encoder.dropout >= 0.0 && encoder.dropout < 1.0, "encoder.dropout must be in [0,1)");
  require(moment.N_train_max >= 1 && moment.N_infer >= 1, "proposal counts must be >= 1");
  require(moment.steps >= 1 && saliency.steps >= 1, "sampling steps must be >= 1");
  require(moment.decoder_layers >= 1, "moment.decoder_layers must be >= 1");
  require(saliency.label_max > saliency.label_min, "saliency.label_range must be increasing");
  require(loss.lambda_l1 >= 0 && loss.lambda_iou >= 0 && loss.lambda_class >= 0 &&
              loss.lambda_saliency >= 0 && loss.margin >= 0,
          "loss weights must be >= 0");
  require(train.lr > 0.0, "train.lr must be positive");
  require(train.weight_decay >= 0.0, "train.weight_decay must be >= 0");
  require(train.batch_size >= 1, "train.batch_size must be >= 1");
  require(train.N_start >= 1 && train.N_start <= moment.N_train_max,
          "train.N_start must lie in [1, moment.N_train_max]");
  require(train.optimizer == "adamw", "only the adamw optimizer is available");
  require(eval.max_predictions >= 1, "eval.max_predictions must be >= 1");
}

Config desk_config() {
  Config c;
  c.model.dim = 32;
  c.encoder.layers = 2;
  c.encoder.heads = 4;
  c.encoder.ffn_dim = 64;
  c.encoder.dropout = 0.0;
  c.moment.heads = 4;
  c.moment.ffn_dim = 64;
  c.train.lr = 1e-3;
  c.train.batch_size = 8;
  c.train.epochs = 100;
  return c;
}

}  // namespace spandiff

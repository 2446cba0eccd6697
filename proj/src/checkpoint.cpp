#include "spandiff/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "spandiff/errors.hpp"

namespace spandiff {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'S', 'P', 'D', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

}  // namespace

json TrainState::to_json() const {
  return {{"iteration", iteration},
          {"epoch", epoch},
          {"n_proposals", n_proposals},
          {"best_validation", best_validation},
          {"best_iteration", best_iteration}};
}

TrainState TrainState::from_json(const json& j) {
  TrainState s;
  s.iteration = j.value("iteration", 0);
  s.epoch = j.value("epoch", 0);
  s.n_proposals = j.value("n_proposals", 0);
  s.best_validation = j.value("best_validation", -1.0);
  s.best_iteration = j.value("best_iteration", -1);
  return s;
}

void save_checkpoint(const std::string& path, const GroundingModel& model,
                     const TrainState& state) {
  json header;
  header["config"] = model.config().to_json();
  header["video_dim"] = model.video_dim();
  header["text_dim"] = model.text_dim();
  header["state"] = state.to_json();
  json params = json::array();
  for (const auto& p : model.params().params()) {
    params.push_back({{"name", p.name}, {"rows", p.var.rows()}, {"cols", p.var.cols()}});
  }
  header["params"] = params;
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write " + path);
  const std::uint64_t size = text.size();
  out.write(kMagic, sizeof(kMagic));
  out.write(reinterpret_cast<const char*>(&kVersion), sizeof(kVersion));
  out.write(reinterpret_cast<const char*>(&size), sizeof(size));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& p : model.params().params()) {
    const ag::Matrix& m = p.var.value();
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(sizeof(double) * static_cast<size_t>(m.size())));
  }
  if (!out) throw CheckpointError("failed while writing " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + path);
  char magic[8];
  std::uint32_t version = 0;
  std::uint64_t size = 0;
  in.read(magic, sizeof(magic));
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  in.read(reinterpret_cast<char*>(&size), sizeof(size));
  if (!in || std::memcmp(magic, kMagic, sizeof(magic)) != 0) {
    throw CheckpointError(path + " is not a checkpoint");
  }
  if (version != kVersion) {
    throw CheckpointError(path + " has version " + std::to_string(version) + ", expected " +
                          std::to_string(kVersion));
  }
  if (size > (std::uint64_t{1} << 32)) throw CheckpointError(path + " has a corrupt header");
  std::string text(size, '\0');
  in.read(text.data(), static_cast<std::streamsize>(size));
  if (!in) throw CheckpointError(path + " is truncated");
  json header;
  try {
    header = json::parse(text);
  } catch (const json::exception& e) {
    throw CheckpointError(path + " header is not JSON: " + e.what());
  }

  GroundingModel model(Config::from_json(header.at("config")), header.at("video_dim").get<int>(),
                       header.at("text_dim").get<int>());
  auto& params = model.params().params();
  const json& layout = header.at("params");
  if (layout.size() != params.size()) {
    throw CheckpointError(path + " stores " + std::to_string(layout.size()) +
                          " parameters, model has " + std::to_string(params.size()));
  }
  for (size_t i = 0; i < params.size(); ++i) {
    const json& entry = layout[i];
    ag::Matrix& m = params[i].var.mutable_value();
    if (entry.at("name").get<std::string>() != params[i].name ||
        entry.at("rows").get<Eigen::Index>() != m.rows() ||
        entry.at("cols").get<Eigen::Index>() != m.cols()) {
      throw CheckpointError(path + ": parameter " + entry.dump() + " does not match '" +
                            params[i].name + "'");
    }
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<size_t>(m.size())));
    if (!in) throw CheckpointError(path + " is truncated at '" + params[i].name + "'");
  }
  return {std::move(model), TrainState::from_json(header.value("state", json::object()))};
}

}  // namespace spandiff

#pragma once

#include <cstdint>

#include "spandiff/trainer.hpp"

// Shared recipes for the slow end-to-end checks on synthetic data.
namespace runs {

inline spandiff::Dataset synthetic(int n, std::uint64_t seed) {
  spandiff::SyntheticConfig sc;
  sc.n_examples = n;
  sc.max_clips = 30;
  sc.video_dim = 32;
  sc.seed = seed;
  return spandiff::generate_synthetic(sc);
}

// Small model trained with the full-scale optimizer settings except the
// learning rate, which is raised for the short budget. Planted labels are
// annotator means in [0, 4], so "highlight" means a mean of at least 2.
inline spandiff::Config small_model(int dim, int iterations) {
  spandiff::Config cfg = spandiff::desk_config();
  cfg.model.dim = dim;
  cfg.encoder.ffn_dim = 2 * dim;
  cfg.moment.ffn_dim = 2 * dim;
  cfg.saliency.positive_threshold = 2.0;
  cfg.train.batch_size = 32;
  cfg.train.lr = 1e-3;
  cfg.train.max_iterations = iterations;
  cfg.train.log_every = 0;
  return cfg;
}

// Corpus for the generalization checks: disjoint seeds for train and val.
inline spandiff::Dataset sweep_train() { return synthetic(512, 101); }
inline spandiff::Dataset sweep_validation() { return synthetic(256, 202); }
inline spandiff::Config sweep_config() { return small_model(32, 4000); }

// Mean metric over several evaluation seeds.
template <typename Metric>
double seed_average(const spandiff::GroundingModel& model, const spandiff::Dataset& data,
                    const spandiff::InferenceOptions& opts, int seeds, Metric metric) {
  double total = 0.0;
  for (int s = 0; s < seeds; ++s) {
    total += metric(spandiff::evaluate(model, data, opts, 100 + static_cast<std::uint64_t>(s)));
  }
  return total / seeds;
}

}  // namespace runs

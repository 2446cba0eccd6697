#pragma once

#include <utility>
#include <vector>

#include "spandiff/config.hpp"
#include "spandiff/nn.hpp"

namespace spandiff {

enum class Modality { kVideo, kText };

/// Token matrix (length x dim) plus a validity mask. Padding is expected at
/// the tail; at least one position must be valid.
struct FeatureSequence {
  ag::Var tokens;
  std::vector<bool> mask;
  Modality kind = Modality::kVideo;

  static FeatureSequence dense(ag::Matrix tokens, Modality kind);

  Eigen::Index length() const { return tokens.rows(); }
  Eigen::Index dim() const { return tokens.cols(); }
  int valid_count() const;
  /// Drops masked tail positions. Results are unchanged for every consumer in
  /// this library because masked positions are never attended to.
  FeatureSequence trimmed() const;
  /// Throws ShapeError / EmptyInput on a broken mask.
  void validate() const;
};

/// Query-conditioned encoder output, split back into the two modalities.
struct Memory {
  ag::Var video;  // N_v x D
  ag::Var text;   // N_q x D
  std::vector<bool> video_mask;
  std::vector<bool> text_mask;

  int valid_clips() const;
};

/// Per-modality linear projection to the model width followed by a pre-norm
/// Transformer over the concatenated [video; text] sequence.
class CrossModalEncoder {
 public:
  CrossModalEncoder() = default;
  CrossModalEncoder(nn::Initializer& init, const Config& cfg, int video_dim, int text_dim);

  std::pair<FeatureSequence, FeatureSequence> project_features(const FeatureSequence& video,
                                                               const FeatureSequence& text) const;
  /// Takes already-projected sequences.
  Memory encode(const FeatureSequence& video, const FeatureSequence& text,
                const nn::Context& ctx) const;

  int dim() const { return dim_; }
  nn::Linear& video_projection() { return video_proj_; }
  nn::Linear& text_projection() { return text_proj_; }

 private:
  struct Layer {
    nn::LayerNorm norm1;
    nn::MultiHeadAttention attn;
    nn::LayerNorm norm2;
    nn::Linear ff1;
    nn::Linear ff2;
  };

  int dim_ = 0;
  int max_text_ = 0;
  nn::Linear video_proj_;
  nn::Linear text_proj_;
  nn::LayerNorm video_norm_;
  nn::LayerNorm text_norm_;
  ag::Var text_pos_;
  ag::Var type_embed_;
  std::vector<Layer> layers_;
  nn::LayerNorm final_norm_;
};

/// Fixed sinusoidal position table, one row per clip.
ag::Matrix sinusoidal_positions(int length, int dim);

}  // namespace spandiff

#include "spandiff/encoder.hpp"

#include <string>

#include "spandiff/diffusion.hpp"
#include "spandiff/errors.hpp"

namespace spandiff {

FeatureSequence FeatureSequence::dense(ag::Matrix tokens, Modality kind) {
  FeatureSequence s;
  s.mask.assign(static_cast<size_t>(tokens.rows()), true);
  s.tokens = ag::Var(std::move(tokens));
  s.kind = kind;
  return s;
}

int FeatureSequence::valid_count() const {
  int n = 0;
  for (bool m : mask) n += m ? 1 : 0;
  return n;
}

FeatureSequence FeatureSequence::trimmed() const {
  Eigen::Index last = length();
  while (last > 0 && !mask[static_cast<size_t>(last - 1)]) --last;
  if (last == length()) return *this;
  FeatureSequence out;
  out.tokens = ag::slice_rows(tokens, 0, last);
  out.mask.assign(mask.begin(), mask.begin() + last);
  out.kind = kind;
  return out;
}

void FeatureSequence::validate() const {
  if (!tokens.defined() || length() == 0) throw EmptyInput("empty feature sequence");
  if (static_cast<Eigen::Index>(mask.size()) != length()) {
    throw ShapeError("mask length " + std::to_string(mask.size()) + " != token count " +
                     std::to_string(length()));
  }
  if (valid_count() == 0) throw EmptyInput("every position of the sequence is masked");
}

int Memory::valid_clips() const {
  int n = 0;
  for (bool m : video_mask) n += m ? 1 : 0;
  return n;
}

ag::Matrix sinusoidal_positions(int length, int dim) {
  ag::Matrix out(length, dim);
  for (int i = 0; i < length; ++i) out.row(i) = timestep_embedding(i, dim);
  return out;
}

CrossModalEncoder::CrossModalEncoder(nn::Initializer& init, const Config& cfg, int video_dim,
                                     int text_dim)
    : dim_(cfg.model.dim),
      max_text_(cfg.model.max_text),
      video_proj_(init, "encoder.video_proj", video_dim, cfg.model.dim),
      text_proj_(init, "encoder.text_proj", text_dim, cfg.model.dim),
      video_norm_(init, "encoder.video_norm", cfg.model.dim),
      text_norm_(init, "encoder.text_norm", cfg.model.dim),
      text_pos_(init.normal("encoder.text_pos", cfg.model.max_text, cfg.model.dim, 0.02)),
      type_embed_(init.normal("encoder.type_embed", 2, cfg.model.dim, 0.02)) {
  for (int l = 0; l < cfg.encoder.layers; ++l) {
    const std::string p = "encoder.layers." + std::to_string(l);
    layers_.push_back(Layer{nn::LayerNorm(init, p + ".norm1", dim_),
                            nn::MultiHeadAttention(init, p + ".attn", dim_, cfg.encoder.heads),
                            nn::LayerNorm(init, p + ".norm2", dim_),
                            nn::Linear(init, p + ".ff1", dim_, cfg.encoder.ffn_dim),
                            nn::Linear(init, p + ".ff2", cfg.encoder.ffn_dim, dim_)});
  }
  final_norm_ = nn::LayerNorm(init, "encoder.final_norm", dim_);
}

std::pair<FeatureSequence, FeatureSequence> CrossModalEncoder::project_features(
    const FeatureSequence& video, const FeatureSequence& text) const {
  if (!video.tokens.defined() || video.length() == 0) throw EmptyInput("empty video sequence");
  if (!text.tokens.defined() || text.length() == 0) throw EmptyInput("empty text sequence");
  if (video.dim() != video_proj_.in_dim()) {
    throw DimMismatch("video features have dim " + std::to_string(video.dim()) + ", expected " +
                      std::to_string(video_proj_.in_dim()));
  }
  if (text.dim() != text_proj_.in_dim()) {
    throw DimMismatch("text features have dim " + std::to_string(text.dim()) + ", expected " +
                      std::to_string(text_proj_.in_dim()));
  }
  FeatureSequence v{video_proj_(video.tokens), video.mask, Modality::kVideo};
  FeatureSequence q{text_proj_(text.tokens), text.mask, Modality::kText};
  return {std::move(v), std::move(q)};
}

Memory CrossModalEncoder::encode(const FeatureSequence& video, const FeatureSequence& text,
                                 const nn::Context& ctx) const {
  video.validate();
  text.validate();
  if (video.dim() != dim_ || text.dim() != dim_) {
    throw DimMismatch("encode expects projected features of width " + std::to_string(dim_));
  }
  if (text.length() > max_text_) {
    throw ShapeError("text has " + std::to_string(text.length()) + " tokens, limit is " +
                     std::to_string(max_text_));
  }
  const auto nv = static_cast<int>(video.length());
  const auto nq = static_cast<int>(text.length());

  ag::Var v = ag::add(video_norm_(video.tokens), ag::Var(sinusoidal_positions(nv, dim_)));
  v = ag::add_row(v, ag::slice_rows(type_embed_, 0, 1));
  ag::Var q = ag::add(text_norm_(text.tokens), ag::slice_rows(text_pos_, 0, nq));
  q = ag::add_row(q, ag::slice_rows(type_embed_, 1, 1));

  std::vector<bool> mask = video.mask;
  mask.insert(mask.end(), text.mask.begin(), text.mask.end());

  ag::Var x = ag::concat_rows({v, q});
  for (const auto& layer : layers_) {
    ag::Var h = layer.norm1(x);
    x = ag::add(x, ctx.maybe_dropout(layer.attn(h, h, &mask, ctx)));
    h = layer.norm2(x);
    h = layer.ff2(ctx.maybe_dropout(ag::relu(layer.ff1(h))));
    x = ag::add(x, ctx.maybe_dropout(h));
  }
  x = final_norm_(x);

  Memory m;
  m.video = ag::slice_rows(x, 0, nv);
  m.text = ag::slice_rows(x, nv, nq);
  m.video_mask = video.mask;
  m.text_mask = text.mask;
  return m;
}

}  // namespace spandiff

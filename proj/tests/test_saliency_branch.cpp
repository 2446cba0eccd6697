#include <doctest.h>

#include <random>

#include "spandiff/errors.hpp"
#include "spandiff/saliency_branch.hpp"

using namespace spandiff;
using ag::Matrix;

namespace {

Matrix random_matrix(int r, int c, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = n(rng);
  return m;
}

Eigen::VectorXd random_vector(int n, std::mt19937_64& rng) {
  return random_matrix(n, 1, rng).col(0);
}

struct Fixture {
  Config cfg;
  nn::ParamSet params;
  std::mt19937_64 rng{31};
  SaliencyDecoder dec;
  DiscriminativeSaliency dis;

  explicit Fixture(int dim = 8) {
    cfg = desk_config();
    cfg.model.dim = dim;
    nn::Initializer init(params, rng);
    dec = SaliencyDecoder(init, cfg);
    dis = DiscriminativeSaliency(init, cfg);
  }
};

Eigen::RowVectorXd softmax(const Eigen::RowVectorXd& x) {
  const Eigen::RowVectorXd e = (x.array() - x.maxCoeff()).exp();
  return e / e.sum();
}

}  // namespace

TEST_CASE("attentive pooling is a convex combination") {
  Fixture f;
  std::mt19937_64 rng(1);
  const Matrix one = random_matrix(1, 8, rng);
  CHECK((f.dec.attentive_pool(FeatureSequence::dense(one, Modality::kText)).value() - one)
            .cwiseAbs()
            .maxCoeff() < 1e-12);

  Matrix twin(2, 8);
  twin.row(0) = one.row(0);
  twin.row(1) = one.row(0);
  CHECK((f.dec.attentive_pool(FeatureSequence::dense(twin, Modality::kText)).value() - one)
            .cwiseAbs()
            .maxCoeff() < 1e-12);

  const Matrix five = random_matrix(5, 8, rng);
  const Matrix pooled = f.dec.attentive_pool(FeatureSequence::dense(five, Modality::kText)).value();
  const Eigen::RowVectorXd w = softmax((five * f.dec.pool_projection().weight.value()).transpose());
  CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK((pooled - w * five).cwiseAbs().maxCoeff() < 1e-12);
  for (int c = 0; c < 8; ++c) {
    CHECK(pooled(0, c) >= five.col(c).minCoeff() - 1e-12);
    CHECK(pooled(0, c) <= five.col(c).maxCoeff() + 1e-12);
  }

  FeatureSequence masked = FeatureSequence::dense(five, Modality::kText);
  masked.mask.assign(5, false);
  CHECK_THROWS_AS(f.dec.attentive_pool(masked), EmptyInput);
}

TEST_CASE("zero bias reduces to plain cross-attention") {
  Fixture f;
  f.dec.time_projection().zero();
  std::mt19937_64 rng(2);
  const Matrix clips = random_matrix(6, 8, rng);
  const ag::Var sentence(random_matrix(1, 8, rng));
  const FeatureSequence video = FeatureSequence::dense(clips, Modality::kVideo);
  const Matrix out =
      f.dec.noised_cross_attention(sentence, video, Eigen::VectorXd::Zero(6), 400).value();

  const Matrix q = sentence.value() * f.dec.query_projection().weight.value();
  const Matrix k = clips * f.dec.key_projection().weight.value();
  const Matrix v = clips * f.dec.value_projection().weight.value();
  const Eigen::RowVectorXd w = softmax(q * k.transpose() / std::sqrt(8.0));
  CHECK((out.colwise().sum() - w * v).cwiseAbs().maxCoeff() < 1e-12);
  for (int i = 0; i < 6; ++i) CHECK((out.row(i) - w(i) * v.row(i)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("constant bias shifts leave the attention unchanged") {
  Fixture f;
  std::mt19937_64 rng(3);
  const FeatureSequence video = FeatureSequence::dense(random_matrix(9, 8, rng), Modality::kVideo);
  const ag::Var sentence(random_matrix(1, 8, rng));
  const Eigen::VectorXd x = random_vector(9, rng);
  const Matrix a = f.dec.noised_cross_attention(sentence, video, x, 100).value();
  for (double c : {-3.0, 0.5, 7.0}) {
    const Eigen::VectorXd shifted = (x.array() + c).matrix();
    const Matrix b = f.dec.noised_cross_attention(sentence, video, shifted, 100).value();
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("a large bias on one clip concentrates the attention") {
  Fixture f;
  f.dec.query_projection().zero();
  std::mt19937_64 rng(4);
  const FeatureSequence video = FeatureSequence::dense(random_matrix(10, 8, rng), Modality::kVideo);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(10);
  x(6) = 5.0;
  const Eigen::RowVectorXd w =
      f.dec.attention_weights(ag::Var(random_matrix(1, 8, rng)), video, x, 250);
  CHECK(w(6) == doctest::Approx(std::exp(5.0) / (std::exp(5.0) + 9.0)).epsilon(1e-12));
  CHECK(w(6) > 0.9);
}

TEST_CASE("masked clips get zero weight") {
  Fixture f;
  std::mt19937_64 rng(5);
  FeatureSequence video = FeatureSequence::dense(random_matrix(7, 8, rng), Modality::kVideo);
  video.mask[5] = video.mask[6] = false;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(7);
  x(6) = 50.0;
  const Eigen::RowVectorXd w = f.dec.attention_weights(ag::Var(random_matrix(1, 8, rng)), video, x, 3);
  CHECK(w(5) == 0.0);
  CHECK(w(6) == 0.0);
  CHECK(w.sum() == doctest::Approx(1.0));
  CHECK_THROWS_AS(f.dec.attention_weights(ag::Var(random_matrix(1, 8, rng)), video,
                                          Eigen::VectorXd::Zero(3), 3),
                  ShapeError);
}

TEST_CASE("decode shape and purity") {
  Fixture f(16);
  std::mt19937_64 rng(6);
  const FeatureSequence video = FeatureSequence::dense(random_matrix(75, 16, rng), Modality::kVideo);
  const FeatureSequence text = FeatureSequence::dense(random_matrix(4, 16, rng), Modality::kText);
  const Eigen::VectorXd x = random_vector(75, rng);
  const Matrix a = f.dec.decode(x, 600, video, text, {}).value();
  CHECK(a.rows() == 75);
  CHECK(a.cols() == 1);
  CHECK(a.allFinite());
  const FeatureSequence video2 = FeatureSequence::dense(video.tokens.value(), Modality::kVideo);
  const FeatureSequence text2 = FeatureSequence::dense(text.tokens.value(), Modality::kText);
  CHECK(f.dec.decode(x, 600, video2, text2, {}).value() == a);
}

TEST_CASE("discriminative head is linear in the memory") {
  Fixture f;
  std::mt19937_64 rng(7);
  Memory m;
  m.video = ag::Var(random_matrix(75, 8, rng));
  m.video_mask.assign(75, true);
  const Matrix s = f.dis(m).value();
  CHECK(s.rows() == 75);
  CHECK(s.cols() == 1);
  f.dis.linear().bias.mutable_value().setZero();
  const Matrix base = f.dis(m).value();
  Memory doubled = m;
  doubled.video = ag::Var(m.video.value() * 2.0);
  CHECK((f.dis(doubled).value() - 2.0 * base).cwiseAbs().maxCoeff() < 1e-12);
  f.dis.linear().zero();
  CHECK(f.dis(m).value().isZero());
}

TEST_CASE("fuse_saliency adds elementwise") {
  std::mt19937_64 rng(8);
  const SaliencyVector g{random_vector(10, rng)};
  const SaliencyVector zero{Eigen::VectorXd::Zero(10)};
  CHECK(fuse_saliency(g, zero).scores == g.scores);
  CHECK(fuse_saliency(zero, zero).scores.isZero());
  const SaliencyVector d{random_vector(10, rng)};
  const Eigen::VectorXd sum = fuse_saliency(g, d).scores;
  for (int i = 0; i < 10; ++i) CHECK(sum(i) == g.scores(i) + d.scores(i));
  CHECK_THROWS_AS(fuse_saliency(g, SaliencyVector{random_vector(9, rng)}), ShapeError);
}

TEST_CASE("saliency range round trip") {
  const SaliencyRange r;
  Eigen::VectorXd labels(3);
  labels << 0.0, 2.0, 4.0;
  const Eigen::VectorXd w = r.to_working(labels);
  CHECK(w(0) == -2.0);
  CHECK(w(1) == 0.0);
  CHECK(w(2) == 2.0);
  CHECK((r.to_labels(w) - labels).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("sampler with a perfect denoiser returns the planted labels") {
  const NoiseSchedule sched = NoiseSchedule::build(1000, ScheduleKind::kCosine);
  const SaliencyRange range;
  std::mt19937_64 prng(9);
  Eigen::VectorXd planted(12);
  std::uniform_real_distribution<double> u(0.0, 4.0);
  for (int i = 0; i < 12; ++i) planted(i) = u(prng);
  const Eigen::VectorXd planted_w = range.to_working(planted);
  for (int steps : {1, 3, 5, 6}) {
    int calls = 0;
    std::vector<int> seen;
    SaliencyDenoiser oracle_denoiser = [&](const Eigen::VectorXd&, int t) {
      ++calls;
      seen.push_back(t);
      return planted_w;
    };
    std::mt19937_64 rng(10);
    const SaliencyVector out = sample_saliency(oracle_denoiser, 12, steps, sched, range, 0.0, rng);
    CHECK(calls == steps);
    CHECK(seen.front() == 1000);
    CHECK(out.space == SaliencySpace::kLabel);
    CHECK((out.scores - planted).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("sample_saliency is reproducible given a seed") {
  const NoiseSchedule sched = NoiseSchedule::build(1000, ScheduleKind::kCosine);
  // a denoiser that depends on its input exposes the initial noise
  SaliencyDenoiser echo = [](const Eigen::VectorXd& x, int) { return (0.5 * x).eval(); };
  std::mt19937_64 a(11), b(11), c(12);
  const auto ra = sample_saliency(echo, 8, 4, sched, {}, 0.0, a).scores;
  CHECK(sample_saliency(echo, 8, 4, sched, {}, 0.0, b).scores == ra);
  CHECK(sample_saliency(echo, 8, 4, sched, {}, 0.0, c).scores != ra);
  CHECK_THROWS_AS(sample_saliency(echo, 0, 4, sched, {}, 0.0, a), EmptyInput);
}

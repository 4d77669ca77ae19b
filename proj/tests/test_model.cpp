#include "dftrig/model.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "dftrig/corpus.hpp"
#include "testutil.hpp"

namespace dftrig {
namespace {

ClassifierConfig small_config(bool pair_mode = false) {
  ClassifierConfig cfg;
  cfg.vocab_size = 12;
  cfg.embed_dim = 5;
  cfg.hidden_dim = 7;
  cfg.num_classes = 3;
  cfg.pair_mode = pair_mode;
  return cfg;
}

TokenSeq random_seq(Rng& rng, const ClassifierConfig& cfg, int len) {
  std::vector<int> ids;
  std::vector<int> segments;
  for (int i = 0; i < len; ++i) {
    ids.push_back(2 + rng.uniform_int(cfg.vocab_size - 2));  // skip PAD/SEP
    segments.push_back(0);
  }
  if (cfg.pair_mode) {
    ids.push_back(1);  // SEP
    segments.push_back(0);
    for (int i = 0; i < len; ++i) {
      ids.push_back(2 + rng.uniform_int(cfg.vocab_size - 2));
      segments.push_back(1);
    }
  }
  return TokenSeq(std::move(ids), std::move(segments));
}

TEST(Forward, ZeroWeightsGiveUniformDistribution) {
  const TextClassifier model(small_config(), 0, /*init_scale=*/0.0);
  const auto probs = model.forward(TokenSeq::single({3, 4, 5}));
  for (int k = 0; k < 3; ++k) EXPECT_DOUBLE_EQ(probs(k), 1.0 / 3.0);
}

TEST(Forward, PermutingTokensWithinSegmentIsInvariant) {
  const TextClassifier model(small_config(), 17);
  const auto a = model.forward(TokenSeq::single({3, 4, 5, 6}));
  const auto b = model.forward(TokenSeq::single({6, 4, 3, 5}));
  EXPECT_TRUE(a.isApprox(b));
}

TEST(Forward, SoftmaxNormalizedOnRandomModels) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const TextClassifier model(small_config(), 100 + trial, 0.5);
    const auto probs = model.forward(random_seq(rng, small_config(), 4));
    EXPECT_GE(probs.minCoeff(), 0.0);
    EXPECT_NEAR(probs.sum(), 1.0, 1e-9);
  }
}

TEST(Forward, PadExcludedFromPooling) {
  const TextClassifier model(small_config(), 17);
  const auto without = model.forward(TokenSeq::single({3, 4}));
  const auto with_pad = model.forward(TokenSeq::single({3, 0, 4, 0}));
  EXPECT_TRUE(without.isApprox(with_pad));
}

TEST(Forward, EmptyPooledSegmentThrows) {
  const TextClassifier model(small_config(), 17);
  EXPECT_THROW(model.forward(TokenSeq::single({})), EmptySegmentError);
  EXPECT_THROW(model.forward(TokenSeq::single({0, 0})), EmptySegmentError);

  const TextClassifier pair_model(small_config(true), 17);
  // premise present, hypothesis empty
  EXPECT_THROW(pair_model.forward(TokenSeq({3, 4, 1}, {0, 0, 0})),
               EmptySegmentError);
}

TEST(TaskLoss, MatchesNegativeLogProb) {
  const TextClassifier model(small_config(), 23, 0.3);
  const TokenSeq seq = TokenSeq::single({4, 7, 9});
  const auto probs = model.forward(seq);
  for (int k = 0; k < 3; ++k) {
    EXPECT_NEAR(model.task_loss(seq, k), -std::log(probs(k)), 1e-12);
  }
}

TEST(TaskLoss, UniformBinaryLossIsLogTwo) {
  ClassifierConfig cfg = small_config();
  cfg.num_classes = 2;
  const TextClassifier model(cfg, 0, 0.0);
  EXPECT_NEAR(model.task_loss(TokenSeq::single({3}), 0), std::log(2.0), 1e-12);
}

TEST(EmbeddingGradient, MatchesCentralFiniteDifferences) {
  constexpr double kEps = 1e-4;
  constexpr double kRelTol = 1e-5;
  Rng rng(99);
  int probes = 0;
  for (int trial = 0; trial < 20 && probes < 100; ++trial) {
    const bool pair = trial % 2 == 1;
    const ClassifierConfig cfg = small_config(pair);
    const TextClassifier model(cfg, 500 + trial, 0.4);
    const TokenSeq seq = random_seq(rng, cfg, 3 + rng.uniform_int(3));
    const int target = rng.uniform_int(cfg.num_classes);
    for (int rep = 0; rep < 3 && probes < 100; ++rep) {
      int position = rng.uniform_int(static_cast<int>(seq.size()));
      if (seq.ids[static_cast<std::size_t>(position)] == 1) continue;  // SEP
      const int pos_arr[1] = {position};
      const auto grad =
          model.embedding_gradient(seq, target, pos_arr).position_gradients[0];
      const int component = rng.uniform_int(cfg.embed_dim);
      const double numeric = testutil::finite_difference_component(
          model, seq, target, position, component, kEps);
      const double analytic = grad(component);
      const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-8});
      EXPECT_LE(std::abs(numeric - analytic) / scale, kRelTol)
          << "trial " << trial << " position " << position;
      ++probes;
    }
  }
  EXPECT_GE(probes, 50);
}

TEST(EmbeddingGradient, ZeroNetworkHasZeroGradient) {
  const TextClassifier model(small_config(), 0, 0.0);
  const TokenSeq seq = TokenSeq::single({3, 4, 5});
  const int positions[3] = {0, 1, 2};
  const auto result = model.embedding_gradient(seq, 1, positions);
  for (const auto& g : result.position_gradients) {
    EXPECT_NEAR(g.norm(), 0.0, 1e-15);
  }
}

TEST(EmbeddingGradient, DuplicateTokensShareTheGradient) {
  const TextClassifier model(small_config(), 31, 0.3);
  const TokenSeq seq = TokenSeq::single({5, 7, 5, 9});
  const int positions[2] = {0, 2};
  const auto result = model.embedding_gradient(seq, 2, positions);
  EXPECT_TRUE(result.position_gradients[0].isApprox(result.position_gradients[1]));
}

TEST(EmbeddingGradient, PositionOutOfRangeThrows) {
  const TextClassifier model(small_config(), 31);
  const int positions[1] = {5};
  EXPECT_THROW(
      model.embedding_gradient(TokenSeq::single({3, 4}), 0, positions),
      IndexError);
}

TEST(Train, ZeroLearningRateLeavesWeightsUnchanged) {
  const CorpusSpec spec = testutil::tiny_spec();
  const Vocabulary vocab = build_vocabulary(spec);
  const Corpus corpus = generate_corpus(spec, vocab);
  TextClassifier model(testutil::canonical_model_config(vocab.size(), false), 42);
  const Eigen::MatrixXd embed_before = model.embed_;
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.epochs = 1;
  train_classifier(model, corpus.train, corpus.validation, cfg);
  EXPECT_TRUE(model.embed_.isApprox(embed_before, 0.0));
}

TEST(Train, DeterministicFromSeed) {
  const CorpusSpec spec = testutil::tiny_spec();
  const Vocabulary vocab = build_vocabulary(spec);
  const Corpus corpus = generate_corpus(spec, vocab);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.seed = 9;
  TextClassifier a(testutil::canonical_model_config(vocab.size(), false), 42);
  TextClassifier b(testutil::canonical_model_config(vocab.size(), false), 42);
  const auto ha = train_classifier(a, corpus.train, corpus.validation, cfg);
  const auto hb = train_classifier(b, corpus.train, corpus.validation, cfg);
  EXPECT_TRUE(a.embed_.isApprox(b.embed_, 0.0));
  EXPECT_TRUE(a.hidden_w_.isApprox(b.hidden_w_, 0.0));
  EXPECT_EQ(ha.train_loss, hb.train_loss);
}

TEST(Train, DivergenceIsReported) {
  // A step large enough to overflow the weights makes the softmax emit NaN.
  std::vector<LabeledExample> conflicted = {
      {TokenSeq::single({3, 4}), 0},
      {TokenSeq::single({3, 4}), 1},
  };
  ClassifierConfig cfg2 = small_config();
  cfg2.num_classes = 2;
  TextClassifier model(cfg2, 42, 0.1);
  TrainConfig cfg;
  cfg.learning_rate = 1e308;
  cfg.epochs = 20;
  cfg.batch_size = 1;
  EXPECT_THROW(train_classifier(model, conflicted, {}, cfg),
               TrainingFailureError);
}

TEST(Checkpoint, RoundTripReproducesForwardBitExactly) {
  const TextClassifier model(small_config(true), 77, 0.4);
  const auto dir = testutil::scratch_dir("ckpt");
  save_checkpoint(model, dir / "model.ckpt");
  const TextClassifier loaded = load_checkpoint(dir / "model.ckpt");
  EXPECT_EQ(loaded.config(), model.config());
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const TokenSeq seq = random_seq(rng, small_config(true), 2 + rng.uniform_int(4));
    const auto a = model.forward(seq);
    const auto b = loaded.forward(seq);
    for (int k = 0; k < a.size(); ++k) EXPECT_EQ(a(k), b(k));  // bit-identical
  }
}

TEST(Checkpoint, TruncatedFileIsRejected) {
  const TextClassifier model(small_config(), 77);
  const auto dir = testutil::scratch_dir("ckpt_trunc");
  const auto path = dir / "model.ckpt";
  save_checkpoint(model, path);
  const auto full = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, full - 9);
  EXPECT_THROW(load_checkpoint(path), CheckpointFormatError);
}

TEST(Checkpoint, CorruptedPayloadFailsChecksum) {
  const TextClassifier model(small_config(), 77);
  const auto dir = testutil::scratch_dir("ckpt_corrupt");
  const auto path = dir / "model.ckpt";
  save_checkpoint(model, path);
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(64);
    const char junk = 'x';
    f.write(&junk, 1);
  }
  EXPECT_THROW(load_checkpoint(path), CheckpointFormatError);
}

TEST(Checkpoint, BadMagicIsRejected) {
  const auto dir = testutil::scratch_dir("ckpt_magic");
  const auto path = dir / "model.ckpt";
  {
    std::ofstream f(path, std::ios::binary);
    f << "NOTACKPT garbage";
  }
  EXPECT_THROW(load_checkpoint(path), CheckpointFormatError);
}

}  // namespace
}  // namespace dftrig

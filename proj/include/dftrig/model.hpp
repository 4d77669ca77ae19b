#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <span>
#include <vector>

#include "dftrig/common.hpp"

namespace dftrig {

struct ClassifierConfig {
  int vocab_size = 0;
  int embed_dim = 16;
  int hidden_dim = 32;
  int num_classes = 2;
  bool pair_mode = false;

  int pool_dim() const { return pair_mode ? 2 * embed_dim : embed_dim; }
  bool operator==(const ClassifierConfig&) const = default;
};

// Per-position gradient of the task loss with respect to that position's
// input embedding vector (the embedding row is treated as the variable).
struct GradientResult {
  double loss = 0.0;
  std::vector<Eigen::VectorXd> position_gradients;
};

// f(x): embedding lookup, segment-wise mean pooling (PAD/SEP excluded),
// one tanh hidden layer, softmax. Immutable after training; forward/loss/
// gradient are pure reads.
class TextClassifier {
 public:
  TextClassifier(const ClassifierConfig& config, std::uint64_t init_seed,
                 double init_scale = 0.1);

  const ClassifierConfig& config() const { return config_; }

  Eigen::VectorXd forward(const TokenSeq& seq) const;
  int predict(const TokenSeq& seq) const;  // argmax; ties -> lowest class id
  double task_loss(const TokenSeq& seq, int target_class) const;
  GradientResult embedding_gradient(const TokenSeq& seq, int target_class,
                                    std::span<const int> positions) const;

  const Eigen::MatrixXd& embeddings() const { return embed_; }
  int pad_id() const { return 0; }  // ids 0/1 are PAD/SEP by vocabulary contract
  int sep_id() const { return 1; }

  // Pooled representation; throws EmptySegmentError when a pooled segment has
  // no contributing token.
  Eigen::VectorXd pooled(const TokenSeq& seq) const;

  Eigen::MatrixXd embed_;    // |V| x d
  Eigen::MatrixXd hidden_w_; // h x pool_dim
  Eigen::VectorXd hidden_b_; // h
  Eigen::MatrixXd out_w_;    // K x h
  Eigen::VectorXd out_b_;    // K

 private:
  ClassifierConfig config_;
};

struct TrainConfig {
  double learning_rate = 0.5;
  int epochs = 40;
  int batch_size = 32;
  std::uint64_t seed = 0;
};

struct TrainHistory {
  std::vector<double> train_loss;      // per epoch, mean over examples
  std::vector<double> train_accuracy;  // per epoch
  std::vector<double> val_accuracy;    // per epoch (NaN when no validation set)
};

// Plain mini-batch SGD; deterministic given seed. Throws TrainingFailureError
// when the loss stops being finite.
TrainHistory train_classifier(TextClassifier& classifier,
                              std::span<const LabeledExample> train,
                              std::span<const LabeledExample> validation,
                              const TrainConfig& config);

double accuracy(const TextClassifier& classifier,
                std::span<const LabeledExample> examples);

// Binary checkpoint: magic, version, config record, row-major little-endian
// f64 matrices, trailing checksum.
void save_checkpoint(const TextClassifier& classifier,
                     const std::filesystem::path& path);
TextClassifier load_checkpoint(const std::filesystem::path& path);

}  // namespace dftrig

#include "dftrig/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

namespace dftrig {

namespace {

void fill_uniform(Eigen::MatrixXd& m, Rng& rng, double scale) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      m(r, c) = rng.uniform(-scale, scale);
    }
  }
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const double mx = logits.maxCoeff();
  Eigen::VectorXd e = (logits.array() - mx).exp();
  return e / e.sum();
}

}  // namespace

TextClassifier::TextClassifier(const ClassifierConfig& config,
                               std::uint64_t init_seed, double init_scale)
    : config_(config) {
  if (config.vocab_size < 3 || config.embed_dim < 2 || config.hidden_dim < 1 ||
      config.num_classes < 2) {
    throw InvalidConfigError("bad classifier config");
  }
  Rng rng(init_seed);
  embed_.resize(config.vocab_size, config.embed_dim);
  hidden_w_.resize(config.hidden_dim, config.pool_dim());
  hidden_b_ = Eigen::VectorXd::Zero(config.hidden_dim);
  out_w_.resize(config.num_classes, config.hidden_dim);
  out_b_ = Eigen::VectorXd::Zero(config.num_classes);
  fill_uniform(embed_, rng, init_scale);
  fill_uniform(hidden_w_, rng, init_scale);
  fill_uniform(out_w_, rng, init_scale);
}

Eigen::VectorXd TextClassifier::pooled(const TokenSeq& seq) const {
  if (seq.ids.size() != seq.segments.size()) {
    throw ShapeError("ids/segments length mismatch");
  }
  const int n_segments = config_.pair_mode ? 2 : 1;
  const int d = config_.embed_dim;
  Eigen::VectorXd pool = Eigen::VectorXd::Zero(config_.pool_dim());
  std::vector<int> counts(static_cast<std::size_t>(n_segments), 0);
  for (std::size_t i = 0; i < seq.ids.size(); ++i) {
    const int id = seq.ids[i];
    if (id < 0 || id >= config_.vocab_size) throw IndexError("token id out of range");
    if (id == pad_id() || id == sep_id()) continue;
    const int s = seq.segments[i];
    if (s < 0 || s >= n_segments) throw ShapeError("segment tag out of range");
    pool.segment(s * d, d) += embed_.row(id).transpose();
    ++counts[static_cast<std::size_t>(s)];
  }
  for (int s = 0; s < n_segments; ++s) {
    if (counts[static_cast<std::size_t>(s)] == 0) {
      throw EmptySegmentError("segment " + std::to_string(s) +
                              " has no pooled tokens");
    }
    pool.segment(s * d, d) /= counts[static_cast<std::size_t>(s)];
  }
  return pool;
}

Eigen::VectorXd TextClassifier::forward(const TokenSeq& seq) const {
  const Eigen::VectorXd pool = pooled(seq);
  const Eigen::VectorXd a1 = (hidden_w_ * pool + hidden_b_).array().tanh();
  return softmax(out_w_ * a1 + out_b_);
}

int TextClassifier::predict(const TokenSeq& seq) const {
  Eigen::Index best = 0;
  forward(seq).maxCoeff(&best);  // first maximum -> lowest class id on ties
  return static_cast<int>(best);
}

double TextClassifier::task_loss(const TokenSeq& seq, int target_class) const {
  if (target_class < 0 || target_class >= config_.num_classes) {
    throw IndexError("target class out of range");
  }
  return -std::log(forward(seq)(target_class));
}

GradientResult TextClassifier::embedding_gradient(
    const TokenSeq& seq, int target_class, std::span<const int> positions) const {
  if (target_class < 0 || target_class >= config_.num_classes) {
    throw IndexError("target class out of range");
  }
  const int d = config_.embed_dim;
  const int n_segments = config_.pair_mode ? 2 : 1;

  const Eigen::VectorXd pool = pooled(seq);
  std::vector<int> counts(static_cast<std::size_t>(n_segments), 0);
  for (std::size_t i = 0; i < seq.ids.size(); ++i) {
    if (seq.ids[i] == pad_id() || seq.ids[i] == sep_id()) continue;
    ++counts[static_cast<std::size_t>(seq.segments[i])];
  }

  const Eigen::VectorXd a1 = (hidden_w_ * pool + hidden_b_).array().tanh();
  const Eigen::VectorXd probs = softmax(out_w_ * a1 + out_b_);

  Eigen::VectorXd dlogits = probs;
  dlogits(target_class) -= 1.0;
  const Eigen::VectorXd da1 = out_w_.transpose() * dlogits;
  const Eigen::VectorXd dz1 = da1.array() * (1.0 - a1.array().square());
  const Eigen::VectorXd dpool = hidden_w_.transpose() * dz1;

  GradientResult result;
  result.loss = -std::log(probs(target_class));
  result.position_gradients.reserve(positions.size());
  for (int pos : positions) {
    if (pos < 0 || pos >= static_cast<int>(seq.ids.size())) {
      throw IndexError("gradient position out of range");
    }
    const int id = seq.ids[static_cast<std::size_t>(pos)];
    if (id == pad_id() || id == sep_id()) {
      throw IndexError("gradient requested at PAD/SEP position");
    }
    const int s = seq.segments[static_cast<std::size_t>(pos)];
    result.position_gradients.push_back(
        dpool.segment(s * d, d) / counts[static_cast<std::size_t>(s)]);
  }
  return result;
}

TrainHistory train_classifier(TextClassifier& classifier,
                              std::span<const LabeledExample> train,
                              std::span<const LabeledExample> validation,
                              const TrainConfig& config) {
  if (train.empty()) throw InvalidConfigError("empty training set");
  if (config.batch_size < 1 || config.epochs < 0) {
    throw InvalidConfigError("bad training hyperparameters");
  }
  const int d = classifier.config().embed_dim;
  const int n_segments = classifier.config().pair_mode ? 2 : 1;

  Rng rng(config.seed);
  TrainHistory history;
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  Eigen::MatrixXd g_embed = Eigen::MatrixXd::Zero(classifier.embed_.rows(),
                                                  classifier.embed_.cols());
  Eigen::MatrixXd g_w1(classifier.hidden_w_.rows(), classifier.hidden_w_.cols());
  Eigen::VectorXd g_b1(classifier.hidden_b_.size());
  Eigen::MatrixXd g_w2(classifier.out_w_.rows(), classifier.out_w_.cols());
  Eigen::VectorXd g_b2(classifier.out_b_.size());
  std::vector<int> touched;  // embedding rows written this batch
  std::vector<char> is_touched(static_cast<std::size_t>(classifier.embed_.rows()), 0);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      for (int row : touched) {
        g_embed.row(row).setZero();
        is_touched[static_cast<std::size_t>(row)] = 0;
      }
      touched.clear();
      g_w1.setZero();
      g_b1.setZero();
      g_w2.setZero();
      g_b2.setZero();

      for (std::size_t bi = start; bi < stop; ++bi) {
        const LabeledExample& ex = train[order[bi]];
        const Eigen::VectorXd pool = classifier.pooled(ex.seq);
        const Eigen::VectorXd z1 = classifier.hidden_w_ * pool + classifier.hidden_b_;
        const Eigen::VectorXd a1 = z1.array().tanh();
        const Eigen::VectorXd probs =
            softmax(classifier.out_w_ * a1 + classifier.out_b_);
        epoch_loss += -std::log(probs(ex.label));

        Eigen::VectorXd dlogits = probs;
        dlogits(ex.label) -= 1.0;
        g_w2 += dlogits * a1.transpose();
        g_b2 += dlogits;
        const Eigen::VectorXd da1 = classifier.out_w_.transpose() * dlogits;
        const Eigen::VectorXd dz1 = da1.array() * (1.0 - a1.array().square());
        g_w1 += dz1 * pool.transpose();
        g_b1 += dz1;
        const Eigen::VectorXd dpool = classifier.hidden_w_.transpose() * dz1;

        std::vector<int> counts(static_cast<std::size_t>(n_segments), 0);
        for (std::size_t i = 0; i < ex.seq.ids.size(); ++i) {
          const int id = ex.seq.ids[i];
          if (id == classifier.pad_id() || id == classifier.sep_id()) continue;
          ++counts[static_cast<std::size_t>(ex.seq.segments[i])];
        }
        for (std::size_t i = 0; i < ex.seq.ids.size(); ++i) {
          const int id = ex.seq.ids[i];
          if (id == classifier.pad_id() || id == classifier.sep_id()) continue;
          const int s = ex.seq.segments[i];
          if (!is_touched[static_cast<std::size_t>(id)]) {
            is_touched[static_cast<std::size_t>(id)] = 1;
            touched.push_back(id);
          }
          g_embed.row(id) +=
              (dpool.segment(s * d, d) / counts[static_cast<std::size_t>(s)])
                  .transpose();
        }
      }

      const double scale = config.learning_rate / static_cast<double>(stop - start);
      for (int row : touched) {
        classifier.embed_.row(row) -= scale * g_embed.row(row);
      }
      classifier.hidden_w_ -= scale * g_w1;
      classifier.hidden_b_ -= scale * g_b1;
      classifier.out_w_ -= scale * g_w2;
      classifier.out_b_ -= scale * g_b2;
    }
    epoch_loss /= static_cast<double>(train.size());
    if (!std::isfinite(epoch_loss)) {
      throw TrainingFailureError("training diverged (non-finite loss) at epoch " +
                                 std::to_string(epoch));
    }
    history.train_loss.push_back(epoch_loss);
    history.train_accuracy.push_back(accuracy(classifier, train));
    history.val_accuracy.push_back(
        validation.empty() ? std::numeric_limits<double>::quiet_NaN()
                           : accuracy(classifier, validation));
  }
  return history;
}

double accuracy(const TextClassifier& classifier,
                std::span<const LabeledExample> examples) {
  if (examples.empty()) return 0.0;
  std::vector<char> hits(examples.size(), 0);
  parallel_for(examples.size(), [&](std::size_t i) {
    hits[i] = classifier.predict(examples[i].seq) == examples[i].label;
  });
  long correct = std::count(hits.begin(), hits.end(), char(1));
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

// ---- checkpoint io ----

namespace {

constexpr char kMagic[8] = {'D', 'F', 'T', 'R', 'I', 'G', 'C', 'K'};
constexpr std::uint32_t kFormatVersion = 1;

class Fnv1a64 {
 public:
  void update(const void* data, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      hash_ ^= bytes[i];
      hash_ *= 0x100000001b3ull;
    }
  }
  std::uint64_t value() const { return hash_; }

 private:
  std::uint64_t hash_ = 0xcbf29ce484222325ull;
};

void put_u64_le(std::uint64_t v, unsigned char out[8]) {
  for (int i = 0; i < 8; ++i) out[i] = static_cast<unsigned char>(v >> (8 * i));
}

std::uint64_t get_u64_le(const unsigned char in[8]) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in[i]) << (8 * i);
  return v;
}

struct Writer {
  std::ofstream out;
  Fnv1a64 sum;

  void raw(const void* data, std::size_t n) {
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  }
  void payload(const void* data, std::size_t n) {
    raw(data, n);
    sum.update(data, n);
  }
  void u32(std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    payload(b, 4);
  }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    unsigned char b[8];
    put_u64_le(bits, b);
    payload(b, 8);
  }
  void matrix(const Eigen::MatrixXd& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) f64(m(r, c));
    }
  }
};

struct Reader {
  std::ifstream in;
  Fnv1a64 sum;
  std::string path;

  void raw(void* data, std::size_t n) {
    in.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (in.gcount() != static_cast<std::streamsize>(n)) {
      throw CheckpointFormatError("truncated checkpoint: " + path);
    }
  }
  void payload(void* data, std::size_t n) {
    raw(data, n);
    sum.update(data, n);
  }
  std::uint32_t u32() {
    unsigned char b[4];
    payload(b, 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
  }
  double f64() {
    unsigned char b[8];
    payload(b, 8);
    const std::uint64_t bits = get_u64_le(b);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  void matrix(Eigen::MatrixXd& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = f64();
    }
  }
};

}  // namespace

void save_checkpoint(const TextClassifier& classifier,
                     const std::filesystem::path& path) {
  Writer w;
  w.out.open(path, std::ios::binary);
  if (!w.out) throw IoError("cannot open for writing: " + path.string());
  w.raw(kMagic, sizeof kMagic);
  const ClassifierConfig& cfg = classifier.config();
  w.u32(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(cfg.vocab_size));
  w.u32(static_cast<std::uint32_t>(cfg.embed_dim));
  w.u32(static_cast<std::uint32_t>(cfg.hidden_dim));
  w.u32(static_cast<std::uint32_t>(cfg.num_classes));
  w.u32(cfg.pair_mode ? 1 : 0);
  w.matrix(classifier.embed_);
  w.matrix(classifier.hidden_w_);
  Eigen::MatrixXd b1 = classifier.hidden_b_;
  w.matrix(b1);
  w.matrix(classifier.out_w_);
  Eigen::MatrixXd b2 = classifier.out_b_;
  w.matrix(b2);
  unsigned char digest[8];
  put_u64_le(w.sum.value(), digest);
  w.raw(digest, 8);
  if (!w.out) throw IoError("write failed: " + path.string());
}

TextClassifier load_checkpoint(const std::filesystem::path& path) {
  Reader r;
  r.path = path.string();
  r.in.open(path, std::ios::binary);
  if (!r.in) throw IoError("cannot open checkpoint: " + path.string());
  char magic[8];
  r.raw(magic, 8);
  if (std::memcmp(magic, kMagic, 8) != 0) {
    throw CheckpointFormatError("bad magic in " + path.string());
  }
  if (r.u32() != kFormatVersion) {
    throw CheckpointFormatError("unsupported checkpoint version in " + path.string());
  }
  ClassifierConfig cfg;
  cfg.vocab_size = static_cast<int>(r.u32());
  cfg.embed_dim = static_cast<int>(r.u32());
  cfg.hidden_dim = static_cast<int>(r.u32());
  cfg.num_classes = static_cast<int>(r.u32());
  const std::uint32_t pair = r.u32();
  if (pair > 1 || cfg.vocab_size < 3 || cfg.embed_dim < 2 || cfg.hidden_dim < 1 ||
      cfg.num_classes < 2 || cfg.vocab_size > (1 << 24) || cfg.embed_dim > (1 << 16) ||
      cfg.hidden_dim > (1 << 16) || cfg.num_classes > (1 << 16)) {
    throw CheckpointFormatError("implausible config record in " + path.string());
  }
  cfg.pair_mode = pair == 1;
  TextClassifier classifier(cfg, 0, 0.0);
  r.matrix(classifier.embed_);
  r.matrix(classifier.hidden_w_);
  Eigen::MatrixXd b1(cfg.hidden_dim, 1);
  r.matrix(b1);
  classifier.hidden_b_ = b1.col(0);
  r.matrix(classifier.out_w_);
  Eigen::MatrixXd b2(cfg.num_classes, 1);
  r.matrix(b2);
  classifier.out_b_ = b2.col(0);
  unsigned char digest[8];
  r.raw(digest, 8);
  if (get_u64_le(digest) != r.sum.value()) {
    throw CheckpointFormatError("checksum mismatch in " + path.string());
  }
  char extra;
  if (r.in.read(&extra, 1).gcount() != 0) {
    throw CheckpointFormatError("trailing bytes in " + path.string());
  }
  return classifier;
}

}  // namespace dftrig

// dftrig: mines universal adversarial triggers from a text classifier without
// training data, via class impressions, and evaluates/analyzes the attacks.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "dftrig/analysis.hpp"
#include "dftrig/corpus.hpp"
#include "dftrig/evalharness.hpp"
#include "dftrig/impressions.hpp"
#include "dftrig/model.hpp"
#include "dftrig/triggers.hpp"
#include "dftrig/vocab.hpp"

namespace fs = std::filesystem;
using namespace dftrig;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitInputValidation = 3;
constexpr int kExitRuntime = 4;

// Every command records its fully resolved configuration.
void write_manifest(const fs::path& out_dir, const std::string& command,
                    const std::map<std::string, std::string>& entries) {
  fs::create_directories(out_dir);
  std::ofstream out(out_dir / (command + ".manifest"));
  if (!out) throw IoError("cannot write manifest in " + out_dir.string());
  out << "command=" << command << '\n';
  out << "version=" << kVersion << '\n';
  for (const auto& [key, value] : entries) out << key << '=' << value << '\n';
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_words(const std::string& s) {
  std::vector<std::string> words;
  std::istringstream in(s);
  std::string w;
  while (in >> w) words.push_back(w);
  return words;
}

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

std::vector<std::string> numbered(const std::string& prefix, int n, int width) {
  std::vector<std::string> out;
  char buf[64];
  for (int i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof buf, "%s%0*d", prefix.c_str(), width, i);
    out.emplace_back(buf);
  }
  return out;
}

void require_file(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("input file does not exist: " + path.string());
}

BeamConfig beam_from_flags(int width, int candidates, int top_n, int max_sweeps,
                           std::uint64_t seed) {
  BeamConfig beam;
  beam.width = width;
  beam.candidates_per_position = candidates;
  beam.sample_top_n = top_n;
  beam.max_sweeps = max_sweeps;
  beam.rng_seed = seed;
  return beam;
}

// ---- gen-corpus ----

struct GenCorpusArgs {
  int classes = 2;
  std::vector<int> lexicon_sizes = {8, 20};
  int artifacts_per_class = 5;
  std::vector<double> artifact_rates = {0.15, 0.40};
  int balanced = 163;
  int min_len = 4;
  int max_len = 5;
  double planted_rate = 0.25;
  bool pair_mode = false;
  std::vector<int> sizes = {2000, 200, 200};
  std::uint64_t seed = 11;
  std::string out_dir = "out";
};

int run_gen_corpus(const GenCorpusArgs& args) {
  CorpusSpec spec;
  spec.num_classes = args.classes;
  if (static_cast<int>(args.lexicon_sizes.size()) != args.classes ||
      static_cast<int>(args.artifact_rates.size()) != args.classes) {
    throw InvalidSpecError("per-class flag lists must have one entry per class");
  }
  if (args.sizes.size() != 3) throw InvalidSpecError("--sizes needs train,val,test");
  for (int c = 0; c < args.classes; ++c) {
    spec.planted_lexicon.push_back(numbered(
        "lex" + std::to_string(c) + "_", args.lexicon_sizes[static_cast<std::size_t>(c)], 2));
    spec.artifact_tokens.push_back(
        numbered("art" + std::to_string(c) + "_", args.artifacts_per_class, 2));
  }
  spec.artifact_rate = args.artifact_rates;
  for (const auto& slice : spec.artifact_tokens) {
    spec.neutral_tokens.insert(spec.neutral_tokens.end(), slice.begin(), slice.end());
  }
  const auto balanced = numbered("w", args.balanced, 3);
  spec.neutral_tokens.insert(spec.neutral_tokens.end(), balanced.begin(),
                             balanced.end());
  spec.min_length = args.min_len;
  spec.max_length = args.max_len;
  spec.planted_rate = args.planted_rate;
  spec.pair_mode = args.pair_mode;
  spec.train_size = args.sizes[0];
  spec.validation_size = args.sizes[1];
  spec.test_size = args.sizes[2];
  spec.seed = args.seed;

  const Vocabulary vocab = build_vocabulary(spec);
  const Corpus corpus = generate_corpus(spec, vocab);

  const fs::path out(args.out_dir);
  fs::create_directories(out);
  save_vocabulary(vocab, out / "vocab.txt");
  save_examples(corpus.train, vocab, out / "corpus.train.tsv");
  save_examples(corpus.validation, vocab, out / "corpus.validation.tsv");
  save_examples(corpus.test, vocab, out / "corpus.test.tsv");
  std::vector<std::string> construct_words;
  for (const auto& lex : spec.planted_lexicon) {
    construct_words.insert(construct_words.end(), lex.begin(), lex.end());
  }
  save_token_list(construct_words, out / "lexicon.txt");

  std::map<std::string, std::string> manifest;
  manifest["classes"] = std::to_string(args.classes);
  manifest["balanced"] = std::to_string(args.balanced);
  manifest["artifacts_per_class"] = std::to_string(args.artifacts_per_class);
  for (int c = 0; c < args.classes; ++c) {
    manifest["lexicon_size_" + std::to_string(c)] =
        std::to_string(args.lexicon_sizes[static_cast<std::size_t>(c)]);
    manifest["artifact_rate_" + std::to_string(c)] =
        format_double(args.artifact_rates[static_cast<std::size_t>(c)]);
  }
  manifest["min_length"] = std::to_string(args.min_len);
  manifest["max_length"] = std::to_string(args.max_len);
  manifest["planted_rate"] = format_double(args.planted_rate);
  manifest["pair_mode"] = args.pair_mode ? "1" : "0";
  manifest["sizes"] = std::to_string(args.sizes[0]) + "," +
                      std::to_string(args.sizes[1]) + "," +
                      std::to_string(args.sizes[2]);
  manifest["seed"] = std::to_string(args.seed);
  manifest["vocab_size"] = std::to_string(vocab.size());
  write_manifest(out, "gen-corpus", manifest);

  std::cout << "vocabulary " << vocab.size() << " tokens; corpus "
            << corpus.train.size() << "/" << corpus.validation.size() << "/"
            << corpus.test.size() << " examples -> " << out.string() << '\n';
  return 0;
}

// ---- train ----

struct TrainArgs {
  std::string vocab_path;
  std::string train_path;
  std::string validation_path;
  int embed_dim = 16;
  int hidden_dim = 32;
  bool pair_mode = false;
  double learning_rate = 0.5;
  int epochs = 40;
  int batch = 32;
  std::uint64_t seed = 7;
  std::uint64_t init_seed = 42;
  double init_scale = 0.1;
  std::string out_dir = "out";
  std::string model_name = "model.ckpt";
};

int run_train(const TrainArgs& args) {
  require_file(args.vocab_path);
  require_file(args.train_path);
  const Vocabulary vocab = load_vocabulary(args.vocab_path);
  const auto train_set = load_examples(vocab, args.train_path);
  std::vector<LabeledExample> validation;
  if (!args.validation_path.empty()) {
    require_file(args.validation_path);
    validation = load_examples(vocab, args.validation_path);
  }
  int num_classes = 0;
  for (const auto& ex : train_set) num_classes = std::max(num_classes, ex.label + 1);
  num_classes = std::max(num_classes, 2);

  ClassifierConfig cfg;
  cfg.vocab_size = vocab.size();
  cfg.embed_dim = args.embed_dim;
  cfg.hidden_dim = args.hidden_dim;
  cfg.num_classes = num_classes;
  cfg.pair_mode = args.pair_mode;
  TextClassifier model(cfg, args.init_seed, args.init_scale);

  TrainConfig tc;
  tc.learning_rate = args.learning_rate;
  tc.epochs = args.epochs;
  tc.batch_size = args.batch;
  tc.seed = args.seed;
  const TrainHistory history = train_classifier(model, train_set, validation, tc);

  const fs::path out(args.out_dir);
  fs::create_directories(out);
  save_checkpoint(model, out / args.model_name);
  {
    std::ofstream hist(out / "train_history.tsv");
    hist << "epoch\ttrain_loss\ttrain_accuracy\tval_accuracy\n";
    for (std::size_t e = 0; e < history.train_loss.size(); ++e) {
      hist << e << '\t' << format_double(history.train_loss[e]) << '\t'
           << format_double(history.train_accuracy[e]) << '\t'
           << format_double(history.val_accuracy[e]) << '\n';
    }
  }

  std::map<std::string, std::string> manifest;
  manifest["vocab"] = args.vocab_path;
  manifest["train"] = args.train_path;
  manifest["validation"] = args.validation_path;
  manifest["embed_dim"] = std::to_string(args.embed_dim);
  manifest["hidden_dim"] = std::to_string(args.hidden_dim);
  manifest["num_classes"] = std::to_string(num_classes);
  manifest["pair_mode"] = args.pair_mode ? "1" : "0";
  manifest["learning_rate"] = format_double(args.learning_rate);
  manifest["epochs"] = std::to_string(args.epochs);
  manifest["batch"] = std::to_string(args.batch);
  manifest["seed"] = std::to_string(args.seed);
  manifest["init_seed"] = std::to_string(args.init_seed);
  manifest["init_scale"] = format_double(args.init_scale);
  manifest["model"] = args.model_name;
  write_manifest(out, "train", manifest);

  std::cout << "trained " << args.epochs << " epochs; final train acc "
            << history.train_accuracy.back();
  if (!validation.empty()) {
    std::cout << ", validation acc " << history.val_accuracy.back();
  }
  std::cout << " -> " << (out / args.model_name).string() << '\n';
  return 0;
}

// ---- impress ----

struct ImpressArgs {
  std::string checkpoint;
  std::string vocab_path;
  int target_class = 0;
  std::vector<int> lengths = {4, 6, 8, 10};
  std::vector<std::string> inits = {kInitToken};
  int seeds_per_combo = 3;
  int beam_width = 3;
  int candidates = 10;
  int sample_top_n = 3;
  int max_sweeps = 10;
  std::uint64_t seed = 100;
  std::string exclude_file;
  std::string pair_target = "both";
  std::string out_dir = "out";
  std::string out_name;
};

int run_impress(const ImpressArgs& args) {
  require_file(args.checkpoint);
  require_file(args.vocab_path);
  const Vocabulary vocab = load_vocabulary(args.vocab_path);
  const TextClassifier model = load_checkpoint(args.checkpoint);
  if (model.config().vocab_size != vocab.size()) {
    throw VocabMismatchError("checkpoint and vocabulary disagree on |V|");
  }
  std::vector<std::string> excluded;
  if (!args.exclude_file.empty()) {
    require_file(args.exclude_file);
    excluded = load_token_list(args.exclude_file);
  }
  const CandidateMask mask = make_candidate_mask(vocab, excluded);

  ImpressionConfig cfg;
  cfg.target_class = args.target_class;
  cfg.lengths = args.lengths;
  cfg.init_tokens = args.inits;
  cfg.seeds_per_combo = args.seeds_per_combo;
  cfg.beam = beam_from_flags(args.beam_width, args.candidates, args.sample_top_n,
                             args.max_sweeps, args.seed);
  if (args.pair_target == "both") {
    cfg.pair_target = PairTarget::kBothSegments;
  } else if (args.pair_target == "segment1") {
    cfg.pair_target = PairTarget::kSegmentOneOnly;
  } else {
    throw InvalidConfigError("--pair-target must be 'both' or 'segment1'");
  }

  const auto set = generate_impression_set(model, vocab, mask, cfg);
  const fs::path out(args.out_dir);
  fs::create_directories(out);
  const std::string name =
      args.out_name.empty()
          ? "impressions_c" + std::to_string(args.target_class) + ".tsv"
          : args.out_name;
  save_impressions(set, vocab, out / name);

  double min_conf = 1.0;
  for (const auto& imp : set) min_conf = std::min(min_conf, imp.confidence);

  std::map<std::string, std::string> manifest;
  manifest["checkpoint"] = args.checkpoint;
  manifest["vocab"] = args.vocab_path;
  manifest["class"] = std::to_string(args.target_class);
  manifest["lengths"] = [&] {
    std::string s;
    for (std::size_t i = 0; i < args.lengths.size(); ++i) {
      if (i) s += ',';
      s += std::to_string(args.lengths[i]);
    }
    return s;
  }();
  manifest["inits"] = join(args.inits);
  manifest["seeds_per_combo"] = std::to_string(args.seeds_per_combo);
  manifest["beam_width"] = std::to_string(args.beam_width);
  manifest["candidates"] = std::to_string(args.candidates);
  manifest["sample_top_n"] = std::to_string(args.sample_top_n);
  manifest["max_sweeps"] = std::to_string(args.max_sweeps);
  manifest["seed"] = std::to_string(args.seed);
  manifest["exclude_file"] = args.exclude_file;
  manifest["pair_target"] = args.pair_target;
  manifest["out"] = name;
  write_manifest(out, "impress", manifest);

  std::cout << set.size() << " impressions for class " << args.target_class
            << ", min confidence " << min_conf << " -> " << (out / name).string()
            << '\n';
  return 0;
}

// ---- mine / mine-baseline ----

struct MineArgs {
  std::string checkpoint;
  std::string vocab_path;
  std::string impressions;  // mine
  std::string corpus;       // mine-baseline
  int source_class = 0;
  int target_class = 1;
  int trigger_length = 3;
  int prepend_segment = 0;
  int beam_width = 3;
  int candidates = 10;
  int sample_top_n = 1;
  int max_sweeps = 10;
  std::uint64_t seed = 0;
  std::string exclude_file;
  std::string out_dir = "out";
  std::string out_name;
};

int run_mine(const MineArgs& args, bool data_free) {
  require_file(args.checkpoint);
  require_file(args.vocab_path);
  const Vocabulary vocab = load_vocabulary(args.vocab_path);
  const TextClassifier model = load_checkpoint(args.checkpoint);
  if (model.config().vocab_size != vocab.size()) {
    throw VocabMismatchError("checkpoint and vocabulary disagree on |V|");
  }
  std::vector<std::string> excluded;
  if (!args.exclude_file.empty()) {
    require_file(args.exclude_file);
    excluded = load_token_list(args.exclude_file);
  }
  const CandidateMask mask = make_candidate_mask(vocab, excluded);

  std::vector<TokenSeq> batch;
  if (data_free) {
    require_file(args.impressions);
    for (const auto& imp : load_impressions(vocab, args.impressions)) {
      if (imp.target_class == args.source_class) batch.push_back(imp.seq);
    }
    if (batch.empty()) {
      throw InvalidConfigError("no impressions of class " +
                               std::to_string(args.source_class) + " in " +
                               args.impressions);
    }
  } else {
    require_file(args.corpus);
    for (const auto& ex : load_examples(vocab, args.corpus)) {
      if (ex.label == args.source_class) batch.push_back(ex.seq);
    }
    if (batch.empty()) {
      throw InvalidConfigError("no examples of class " +
                               std::to_string(args.source_class) + " in " +
                               args.corpus);
    }
  }

  TriggerConfig cfg;
  cfg.source_class = args.source_class;
  cfg.target_class = args.target_class;
  cfg.trigger_length = args.trigger_length;
  cfg.prepend_segment = args.prepend_segment;
  cfg.beam = beam_from_flags(args.beam_width, args.candidates, args.sample_top_n,
                             args.max_sweeps, args.seed);

  TriggerReport report;
  report.config = cfg;
  report.batch_size = static_cast<int>(batch.size());
  report.candidates = mine_trigger(model, vocab, batch, cfg, mask);

  const fs::path out(args.out_dir);
  fs::create_directories(out);
  const std::string command = data_free ? "mine" : "mine-baseline";
  const std::string name =
      args.out_name.empty()
          ? (data_free ? "trigger_" : "trigger_baseline_") +
                std::to_string(args.source_class) + "to" +
                std::to_string(args.target_class) + ".txt"
          : args.out_name;
  save_trigger_report(report, vocab, out / name);

  std::map<std::string, std::string> manifest;
  manifest["checkpoint"] = args.checkpoint;
  manifest["vocab"] = args.vocab_path;
  manifest[data_free ? "impressions" : "corpus"] =
      data_free ? args.impressions : args.corpus;
  manifest["source_class"] = std::to_string(args.source_class);
  manifest["target_class"] = std::to_string(args.target_class);
  manifest["trigger_length"] = std::to_string(args.trigger_length);
  manifest["prepend_segment"] = std::to_string(args.prepend_segment);
  manifest["beam_width"] = std::to_string(args.beam_width);
  manifest["candidates"] = std::to_string(args.candidates);
  manifest["sample_top_n"] = std::to_string(args.sample_top_n);
  manifest["max_sweeps"] = std::to_string(args.max_sweeps);
  manifest["seed"] = std::to_string(args.seed);
  manifest["exclude_file"] = args.exclude_file;
  manifest["batch_size"] = std::to_string(report.batch_size);
  manifest["out"] = name;
  write_manifest(out, command, manifest);

  const auto& best = report.candidates.front();
  std::cout << "mined trigger [" << join(detokenize(vocab, best.tokens))
            << "] batch_loss " << best.batch_loss << " flip_rate "
            << best.flip_rate << " -> " << (out / name).string() << '\n';
  return 0;
}

// ---- attack / transfer ----

struct AttackArgs {
  std::string checkpoint;
  std::string vocab_path;
  std::string corpus;
  std::string trigger_report;
  std::string trigger_literal;
  int candidate_rank = 1;
  int source_class = 0;
  int target_class = 1;
  int prepend_segment = 0;
  std::string out_dir = "out";
  std::string out_name;
};

int run_attack(const AttackArgs& args, bool transfer) {
  require_file(args.checkpoint);
  require_file(args.vocab_path);
  require_file(args.corpus);
  const Vocabulary vocab = load_vocabulary(args.vocab_path);
  const TextClassifier model = load_checkpoint(args.checkpoint);
  const auto examples = load_examples(vocab, args.corpus);

  std::vector<int> trigger;
  if (!args.trigger_literal.empty()) {
    trigger = tokenize(vocab, split_words(args.trigger_literal));
  } else {
    require_file(args.trigger_report);
    const TriggerReport report = load_trigger_report(vocab, args.trigger_report);
    if (args.candidate_rank < 1 ||
        args.candidate_rank > static_cast<int>(report.candidates.size())) {
      throw InvalidConfigError("candidate rank out of range for report");
    }
    trigger =
        report.candidates[static_cast<std::size_t>(args.candidate_rank - 1)].tokens;
  }

  const std::string command = transfer ? "transfer" : "attack";
  const AttackReport report =
      transfer ? transfer_evaluate(model, examples, trigger, args.source_class,
                                   args.target_class, args.prepend_segment)
               : evaluate_attack(model, examples, trigger, args.source_class,
                                 args.target_class, args.prepend_segment);

  const fs::path out(args.out_dir);
  fs::create_directories(out);
  const std::string base =
      args.out_name.empty()
          ? command + "_" + std::to_string(args.source_class) + "to" +
                std::to_string(args.target_class)
          : args.out_name;
  write_reports_csv({report}, vocab, out / (base + ".csv"));
  {
    std::ofstream text(out / (base + ".txt"));
    text << format_reports_text({report}, vocab);
  }

  std::map<std::string, std::string> manifest;
  manifest["checkpoint"] = args.checkpoint;
  manifest["vocab"] = args.vocab_path;
  manifest["corpus"] = args.corpus;
  manifest["trigger_report"] = args.trigger_report;
  manifest["trigger_literal"] = args.trigger_literal;
  manifest["candidate_rank"] = std::to_string(args.candidate_rank);
  manifest["source_class"] = std::to_string(args.source_class);
  manifest["target_class"] = std::to_string(args.target_class);
  manifest["prepend_segment"] = std::to_string(args.prepend_segment);
  manifest["out"] = base;
  write_manifest(out, command, manifest);

  std::cout << command << " " << args.source_class << "->" << args.target_class
            << " [" << join(detokenize(vocab, trigger)) << "] accuracy "
            << report.accuracy_before << " -> " << report.accuracy_after
            << " (drop " << report.drop() << ")\n";
  return 0;
}

// ---- analyze ----

struct AnalyzeArgs {
  std::string vocab_path;
  std::string corpus;
  std::string checkpoint;
  std::vector<std::string> impressions;
  int random_words = 350;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
};

int run_analyze(const AnalyzeArgs& args) {
  require_file(args.vocab_path);
  require_file(args.corpus);
  require_file(args.checkpoint);
  const Vocabulary vocab = load_vocabulary(args.vocab_path);
  const TextClassifier model = load_checkpoint(args.checkpoint);
  const auto examples = load_examples(vocab, args.corpus);
  int num_classes = model.config().num_classes;
  const CorpusIndex index(examples, vocab.size(), num_classes);

  // Distinct non-special impression words, labeled by impression class.
  std::vector<std::pair<int, int>> impression_words;  // (word, class)
  std::set<std::pair<int, int>> seen;
  for (const auto& path : args.impressions) {
    require_file(path);
    for (const auto& imp : load_impressions(vocab, path)) {
      for (int id : imp.seq.ids) {
        if (vocab.is_special(id)) continue;
        if (seen.insert({id, imp.target_class}).second) {
          impression_words.emplace_back(id, imp.target_class);
        }
      }
    }
  }
  if (impression_words.empty()) {
    throw InvalidConfigError("no impression words to analyze");
  }

  const fs::path out(args.out_dir);
  fs::create_directories(out);

  auto write_stats = [&](const std::vector<std::pair<int, int>>& words,
                         const fs::path& path) {
    std::ofstream csv(path);
    if (!csv) throw IoError("cannot open for writing: " + path.string());
    csv << "word,class,entropy_bits,own_pmi,own_pmi_percentile\n";
    double entropy_sum = 0.0;
    double pct_sum = 0.0;
    for (const auto& [word, cls] : words) {
      const double h = conditional_entropy(index, word);
      const double own_pmi = pmi(index, word, cls);
      const double pct = pmi_percentile(index, word, cls);
      entropy_sum += h;
      pct_sum += pct;
      csv << vocab.token(word) << ',' << cls << ',' << format_double(h) << ','
          << format_double(own_pmi) << ',' << format_double(pct) << '\n';
    }
    return std::pair<double, double>{entropy_sum / static_cast<double>(words.size()),
                                     pct_sum / static_cast<double>(words.size())};
  };

  const auto [imp_entropy, imp_pct] =
      write_stats(impression_words, out / "impression_word_stats.csv");

  // Uniform random vocabulary words (non-special), class = their best PMI class.
  Rng rng(args.seed);
  std::vector<std::pair<int, int>> random_words;
  for (int i = 0; i < args.random_words; ++i) {
    const int word = 3 + rng.uniform_int(vocab.size() - 3);
    int best_class = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < num_classes; ++k) {
      const double v = pmi(index, word, k);
      if (v > best) {
        best = v;
        best_class = k;
      }
    }
    random_words.emplace_back(word, best_class);
  }
  const auto [rand_entropy, rand_pct] =
      write_stats(random_words, out / "random_word_stats.csv");

  export_word_vectors(model, vocab, impression_words, out / "vectors.csv");

  {
    std::ofstream summary(out / "summary.txt");
    summary << "impression_words\t" << impression_words.size() << '\n';
    summary << "random_words\t" << random_words.size() << '\n';
    summary << "mean_entropy_impressions\t" << format_double(imp_entropy) << '\n';
    summary << "mean_entropy_random\t" << format_double(rand_entropy) << '\n';
    summary << "mean_own_pmi_percentile_impressions\t" << format_double(imp_pct)
            << '\n';
    summary << "mean_own_pmi_percentile_random\t" << format_double(rand_pct) << '\n';
  }

  std::map<std::string, std::string> manifest;
  manifest["vocab"] = args.vocab_path;
  manifest["corpus"] = args.corpus;
  manifest["checkpoint"] = args.checkpoint;
  manifest["impressions"] = [&] {
    std::string s;
    for (std::size_t i = 0; i < args.impressions.size(); ++i) {
      if (i) s += ',';
      s += args.impressions[i];
    }
    return s;
  }();
  manifest["random_words"] = std::to_string(args.random_words);
  manifest["seed"] = std::to_string(args.seed);
  write_manifest(out, "analyze", manifest);

  std::cout << "mean H(Y|X): impressions " << imp_entropy << " vs random "
            << rand_entropy << "; mean own-class PMI percentile " << imp_pct
            << " vs " << rand_pct << '\n';
  return 0;
}

int error_exit_code(const std::exception& e) {
  if (dynamic_cast<const InvalidSpecError*>(&e) ||
      dynamic_cast<const UnknownTokenError*>(&e) ||
      dynamic_cast<const CheckpointFormatError*>(&e) ||
      dynamic_cast<const VocabMismatchError*>(&e) ||
      dynamic_cast<const InvalidConfigError*>(&e) ||
      dynamic_cast<const IoError*>(&e)) {
    return kExitInputValidation;
  }
  return kExitRuntime;
}

const char* error_kind(const std::exception& e) {
  if (dynamic_cast<const InvalidSpecError*>(&e)) return "invalid-spec";
  if (dynamic_cast<const UnknownTokenError*>(&e)) return "unknown-token";
  if (dynamic_cast<const CheckpointFormatError*>(&e)) return "checkpoint-format";
  if (dynamic_cast<const VocabMismatchError*>(&e)) return "vocab-mismatch";
  if (dynamic_cast<const InvalidConfigError*>(&e)) return "invalid-config";
  if (dynamic_cast<const IoError*>(&e)) return "io";
  if (dynamic_cast<const TrainingFailureError*>(&e)) return "training-failure";
  if (dynamic_cast<const EmptyClassError*>(&e)) return "empty-class";
  if (dynamic_cast<const EmptyCandidateError*>(&e)) return "empty-candidate";
  if (dynamic_cast<const EmptySegmentError*>(&e)) return "empty-segment";
  return "runtime";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"data-free universal adversarial trigger mining toolkit"};
  app.set_version_flag("--version", kVersion);
  app.set_config("--config");
  app.require_subcommand(1);

  int threads = 0;
  app.add_option("--threads", threads, "worker threads (0 = hardware)");

  GenCorpusArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-corpus", "generate a planted-lexicon corpus");
  gen_cmd->add_option("--classes", gen.classes);
  gen_cmd->add_option("--lexicon-sizes", gen.lexicon_sizes)->delimiter(',');
  gen_cmd->add_option("--artifacts-per-class", gen.artifacts_per_class);
  gen_cmd->add_option("--artifact-rates", gen.artifact_rates)->delimiter(',');
  gen_cmd->add_option("--balanced", gen.balanced);
  gen_cmd->add_option("--min-len", gen.min_len);
  gen_cmd->add_option("--max-len", gen.max_len);
  gen_cmd->add_option("--planted-rate", gen.planted_rate);
  gen_cmd->add_flag("--pair-mode", gen.pair_mode);
  gen_cmd->add_option("--sizes", gen.sizes)->delimiter(',');
  gen_cmd->add_option("--seed", gen.seed);
  gen_cmd->add_option("--out-dir", gen.out_dir);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "train the classifier");
  train_cmd->add_option("--vocab", train.vocab_path)->required();
  train_cmd->add_option("--train", train.train_path)->required();
  train_cmd->add_option("--validation", train.validation_path);
  train_cmd->add_option("--embed-dim", train.embed_dim);
  train_cmd->add_option("--hidden-dim", train.hidden_dim);
  train_cmd->add_flag("--pair-mode", train.pair_mode);
  train_cmd->add_option("--lr", train.learning_rate);
  train_cmd->add_option("--epochs", train.epochs);
  train_cmd->add_option("--batch", train.batch);
  train_cmd->add_option("--seed", train.seed);
  train_cmd->add_option("--init-seed", train.init_seed);
  train_cmd->add_option("--init-scale", train.init_scale);
  train_cmd->add_option("--out-dir", train.out_dir);
  train_cmd->add_option("--model-name", train.model_name);

  ImpressArgs impress;
  auto* impress_cmd =
      app.add_subcommand("impress", "generate class impressions from a checkpoint");
  impress_cmd->add_option("--checkpoint", impress.checkpoint)->required();
  impress_cmd->add_option("--vocab", impress.vocab_path)->required();
  impress_cmd->add_option("--class", impress.target_class)->required();
  impress_cmd->add_option("--lengths", impress.lengths)->delimiter(',');
  impress_cmd->add_option("--inits", impress.inits)->delimiter(',');
  impress_cmd->add_option("--seeds-per-combo", impress.seeds_per_combo);
  impress_cmd->add_option("--beam-width", impress.beam_width);
  impress_cmd->add_option("--candidates", impress.candidates);
  impress_cmd->add_option("--sample-top-n", impress.sample_top_n);
  impress_cmd->add_option("--max-sweeps", impress.max_sweeps);
  impress_cmd->add_option("--seed", impress.seed);
  impress_cmd->add_option("--exclude-file", impress.exclude_file);
  impress_cmd->add_option("--pair-target", impress.pair_target);
  impress_cmd->add_option("--out-dir", impress.out_dir);
  impress_cmd->add_option("--out-name", impress.out_name);

  MineArgs mine;
  auto* mine_cmd =
      app.add_subcommand("mine", "mine a trigger over class impressions");
  mine_cmd->add_option("--checkpoint", mine.checkpoint)->required();
  mine_cmd->add_option("--vocab", mine.vocab_path)->required();
  mine_cmd->add_option("--impressions", mine.impressions)->required();
  mine_cmd->add_option("--source", mine.source_class)->required();
  mine_cmd->add_option("--target", mine.target_class)->required();
  mine_cmd->add_option("--trigger-length", mine.trigger_length);
  mine_cmd->add_option("--prepend-segment", mine.prepend_segment);
  mine_cmd->add_option("--beam-width", mine.beam_width);
  mine_cmd->add_option("--candidates", mine.candidates);
  mine_cmd->add_option("--sample-top-n", mine.sample_top_n);
  mine_cmd->add_option("--max-sweeps", mine.max_sweeps);
  mine_cmd->add_option("--seed", mine.seed);
  mine_cmd->add_option("--exclude-file", mine.exclude_file);
  mine_cmd->add_option("--out-dir", mine.out_dir);
  mine_cmd->add_option("--out-name", mine.out_name);

  MineArgs baseline;
  auto* baseline_cmd = app.add_subcommand(
      "mine-baseline", "mine a trigger over real validation examples");
  baseline_cmd->add_option("--checkpoint", baseline.checkpoint)->required();
  baseline_cmd->add_option("--vocab", baseline.vocab_path)->required();
  baseline_cmd->add_option("--corpus", baseline.corpus)->required();
  baseline_cmd->add_option("--source", baseline.source_class)->required();
  baseline_cmd->add_option("--target", baseline.target_class)->required();
  baseline_cmd->add_option("--trigger-length", baseline.trigger_length);
  baseline_cmd->add_option("--prepend-segment", baseline.prepend_segment);
  baseline_cmd->add_option("--beam-width", baseline.beam_width);
  baseline_cmd->add_option("--candidates", baseline.candidates);
  baseline_cmd->add_option("--sample-top-n", baseline.sample_top_n);
  baseline_cmd->add_option("--max-sweeps", baseline.max_sweeps);
  baseline_cmd->add_option("--seed", baseline.seed);
  baseline_cmd->add_option("--exclude-file", baseline.exclude_file);
  baseline_cmd->add_option("--out-dir", baseline.out_dir);
  baseline_cmd->add_option("--out-name", baseline.out_name);

  AttackArgs attack;
  auto* attack_cmd =
      app.add_subcommand("attack", "evaluate a trigger on held-out data");
  attack_cmd->add_option("--checkpoint", attack.checkpoint)->required();
  attack_cmd->add_option("--vocab", attack.vocab_path)->required();
  attack_cmd->add_option("--corpus", attack.corpus)->required();
  attack_cmd->add_option("--trigger-report", attack.trigger_report);
  attack_cmd->add_option("--trigger", attack.trigger_literal);
  attack_cmd->add_option("--candidate-rank", attack.candidate_rank);
  attack_cmd->add_option("--source", attack.source_class)->required();
  attack_cmd->add_option("--target", attack.target_class)->required();
  attack_cmd->add_option("--prepend-segment", attack.prepend_segment);
  attack_cmd->add_option("--out-dir", attack.out_dir);
  attack_cmd->add_option("--out-name", attack.out_name);

  AttackArgs transfer;
  auto* transfer_cmd = app.add_subcommand(
      "transfer", "evaluate a trigger against an independently trained victim");
  transfer_cmd->add_option("--checkpoint", transfer.checkpoint)->required();
  transfer_cmd->add_option("--vocab", transfer.vocab_path)->required();
  transfer_cmd->add_option("--corpus", transfer.corpus)->required();
  transfer_cmd->add_option("--trigger-report", transfer.trigger_report);
  transfer_cmd->add_option("--trigger", transfer.trigger_literal);
  transfer_cmd->add_option("--candidate-rank", transfer.candidate_rank);
  transfer_cmd->add_option("--source", transfer.source_class)->required();
  transfer_cmd->add_option("--target", transfer.target_class)->required();
  transfer_cmd->add_option("--prepend-segment", transfer.prepend_segment);
  transfer_cmd->add_option("--out-dir", transfer.out_dir);
  transfer_cmd->add_option("--out-name", transfer.out_name);

  AnalyzeArgs analyze;
  auto* analyze_cmd = app.add_subcommand(
      "analyze", "entropy/PMI statistics and vector export for impression words");
  analyze_cmd->add_option("--vocab", analyze.vocab_path)->required();
  analyze_cmd->add_option("--corpus", analyze.corpus)->required();
  analyze_cmd->add_option("--checkpoint", analyze.checkpoint)->required();
  analyze_cmd->add_option("--impressions", analyze.impressions)->required();
  analyze_cmd->add_option("--random-words", analyze.random_words);
  analyze_cmd->add_option("--seed", analyze.seed);
  analyze_cmd->add_option("--out-dir", analyze.out_dir);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }
  set_thread_count(threads);

  try {
    if (*gen_cmd) return run_gen_corpus(gen);
    if (*train_cmd) return run_train(train);
    if (*impress_cmd) return run_impress(impress);
    if (*mine_cmd) return run_mine(mine, /*data_free=*/true);
    if (*baseline_cmd) return run_mine(baseline, /*data_free=*/false);
    if (*attack_cmd) return run_attack(attack, /*transfer=*/false);
    if (*transfer_cmd) return run_attack(transfer, /*transfer=*/true);
    if (*analyze_cmd) return run_analyze(analyze);
  } catch (const std::exception& e) {
    const int code = error_exit_code(e);
    nlohmann::json record = {
        {"error",
         {{"exit_code", code}, {"kind", error_kind(e)}, {"message", e.what()}}}};
    std::cerr << record.dump() << '\n';
    return code;
  }
  return 0;
}

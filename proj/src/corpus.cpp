#include "dftrig/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace dftrig {

namespace {

std::set<std::string> as_set(const std::vector<std::string>& v) {
  return {v.begin(), v.end()};
}

}  // namespace

void validate(const CorpusSpec& spec) {
  if (spec.num_classes < 2) throw InvalidSpecError("num_classes must be >= 2");
  if (static_cast<int>(spec.planted_lexicon.size()) != spec.num_classes) {
    throw InvalidSpecError("planted_lexicon must have one list per class");
  }
  std::set<std::string> seen;
  for (const auto& lex : spec.planted_lexicon) {
    if (lex.empty()) throw InvalidSpecError("empty planted lexicon");
    for (const auto& w : lex) {
      if (!seen.insert(w).second) {
        throw InvalidSpecError("token appears in more than one lexicon: " + w);
      }
    }
  }
  if (spec.neutral_tokens.empty()) throw InvalidSpecError("no neutral tokens");
  for (const auto& w : spec.neutral_tokens) {
    if (seen.count(w)) {
      throw InvalidSpecError("neutral token collides with a lexicon: " + w);
    }
  }
  if (!spec.artifact_tokens.empty()) {
    if (static_cast<int>(spec.artifact_tokens.size()) != spec.num_classes ||
        static_cast<int>(spec.artifact_rate.size()) != spec.num_classes) {
      throw InvalidSpecError("artifact tokens/rates must be per class");
    }
    const auto neutral = as_set(spec.neutral_tokens);
    std::set<std::string> art_seen;
    for (const auto& slice : spec.artifact_tokens) {
      for (const auto& w : slice) {
        if (!neutral.count(w)) {
          throw InvalidSpecError("artifact token not in neutral pool: " + w);
        }
        if (!art_seen.insert(w).second) {
          throw InvalidSpecError("artifact token in more than one class slice: " + w);
        }
      }
    }
    for (double r : spec.artifact_rate) {
      if (r < 0.0 || r >= 1.0) throw InvalidSpecError("artifact_rate must be in [0,1)");
    }
  }
  if (spec.min_length < 1 || spec.max_length < spec.min_length) {
    throw InvalidSpecError("bad sentence_length range");
  }
  if (spec.planted_rate <= 0.0 || spec.planted_rate > 1.0) {
    throw InvalidSpecError("planted_rate must be in (0,1]");
  }
  if (spec.planted_rate * spec.min_length < 1.0 - 1e-12) {
    throw InvalidSpecError("planted_rate * min_length must be >= 1");
  }
  if (spec.train_size < 1 || spec.validation_size < 0 || spec.test_size < 0) {
    throw InvalidSpecError("bad split sizes");
  }
}

Vocabulary build_vocabulary(const CorpusSpec& spec) {
  validate(spec);
  std::vector<std::vector<std::string>> lists = spec.planted_lexicon;
  lists.push_back(spec.neutral_tokens);  // artifact tokens are a subset of neutral
  return make_vocabulary(lists);
}

namespace {

struct IdPools {
  std::vector<std::vector<int>> lexicon;
  std::vector<std::vector<int>> artifact;
  std::vector<int> neutral;
};

IdPools make_pools(const CorpusSpec& spec, const Vocabulary& vocab) {
  IdPools p;
  for (const auto& lex : spec.planted_lexicon) p.lexicon.push_back(tokenize(vocab, lex));
  for (const auto& slice : spec.artifact_tokens) p.artifact.push_back(tokenize(vocab, slice));
  p.neutral = tokenize(vocab, spec.neutral_tokens);
  return p;
}

int planted_count(double rate, int length) {
  return std::max(1, static_cast<int>(std::llround(rate * length)));
}

std::vector<int> content_tokens(Rng& rng, const CorpusSpec& spec, const IdPools& pools,
                                int label, int length) {
  const int k = planted_count(spec.planted_rate, length);
  std::vector<int> order(static_cast<std::size_t>(length));
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  std::vector<char> planted(static_cast<std::size_t>(length), 0);
  for (int i = 0; i < std::min(k, length); ++i) planted[static_cast<std::size_t>(order[i])] = 1;

  const auto& lex = pools.lexicon[static_cast<std::size_t>(label)];
  const double art_rate =
      pools.artifact.empty() ? 0.0 : spec.artifact_rate[static_cast<std::size_t>(label)];
  std::vector<int> ids(static_cast<std::size_t>(length));
  for (int t = 0; t < length; ++t) {
    if (planted[static_cast<std::size_t>(t)]) {
      ids[static_cast<std::size_t>(t)] = lex[static_cast<std::size_t>(rng.uniform_int(
          static_cast<int>(lex.size())))];
    } else if (art_rate > 0.0 && rng.uniform() < art_rate) {
      const auto& slice = pools.artifact[static_cast<std::size_t>(label)];
      ids[static_cast<std::size_t>(t)] = slice[static_cast<std::size_t>(rng.uniform_int(
          static_cast<int>(slice.size())))];
    } else {
      ids[static_cast<std::size_t>(t)] = pools.neutral[static_cast<std::size_t>(
          rng.uniform_int(static_cast<int>(pools.neutral.size())))];
    }
  }
  return ids;
}

LabeledExample make_example(Rng& rng, const CorpusSpec& spec, const IdPools& pools,
                            const Vocabulary& vocab, int label) {
  const int span = spec.max_length - spec.min_length + 1;
  LabeledExample ex;
  ex.label = label;
  if (!spec.pair_mode) {
    const int len = spec.min_length + rng.uniform_int(span);
    ex.seq = TokenSeq::single(content_tokens(rng, spec, pools, label, len));
    return ex;
  }
  // Pair mode: class signal lives in the hypothesis; the premise is uniform
  // neutral fill, uninformative by construction.
  const int prem_len = spec.min_length + rng.uniform_int(span);
  const int hyp_len = spec.min_length + rng.uniform_int(span);
  std::vector<int> ids;
  std::vector<int> segments;
  for (int t = 0; t < prem_len; ++t) {
    ids.push_back(pools.neutral[static_cast<std::size_t>(
        rng.uniform_int(static_cast<int>(pools.neutral.size())))]);
    segments.push_back(0);
  }
  ids.push_back(vocab.sep_id());
  segments.push_back(0);
  for (int id : content_tokens(rng, spec, pools, label, hyp_len)) {
    ids.push_back(id);
    segments.push_back(1);
  }
  ex.seq = TokenSeq(std::move(ids), std::move(segments));
  return ex;
}

std::string sequence_key(const LabeledExample& ex) {
  std::string key;
  for (int id : ex.seq.ids) {
    key += std::to_string(id);
    key += ',';
  }
  return key;
}

}  // namespace

Corpus generate_corpus(const CorpusSpec& spec, const Vocabulary& vocab) {
  validate(spec);
  const IdPools pools = make_pools(spec, vocab);
  Rng rng(spec.seed);
  Corpus corpus;
  std::set<std::string> used;  // splits must stay disjoint
  auto fill = [&](std::vector<LabeledExample>& out, int n) {
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      LabeledExample ex;
      int attempts = 0;
      do {
        if (++attempts > 1000) {
          throw InvalidSpecError(
              "cannot keep splits disjoint: sequence space too small for the "
              "requested corpus size");
        }
        ex = make_example(rng, spec, pools, vocab, i % spec.num_classes);
      } while (!used.insert(sequence_key(ex)).second);
      out.push_back(std::move(ex));
    }
  };
  fill(corpus.train, spec.train_size);
  fill(corpus.validation, spec.validation_size);
  fill(corpus.test, spec.test_size);
  return corpus;
}

void save_examples(const std::vector<LabeledExample>& examples,
                   const Vocabulary& vocab, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  for (const auto& ex : examples) {
    out << ex.label << '\t';
    std::string seg[2];
    for (std::size_t i = 0; i < ex.seq.size(); ++i) {
      const int id = ex.seq.ids[i];
      if (id == vocab.sep_id()) continue;  // implicit at the tab boundary
      std::string& s = seg[static_cast<std::size_t>(ex.seq.segments[i])];
      if (!s.empty()) s += ' ';
      s += vocab.token(id);
    }
    out << seg[0] << '\t' << seg[1] << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

namespace {

std::vector<std::string> split_words(const std::string& s) {
  std::vector<std::string> words;
  std::istringstream in(s);
  std::string w;
  while (in >> w) words.push_back(w);
  return words;
}

}  // namespace

std::vector<LabeledExample> load_examples(const Vocabulary& vocab,
                                          const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus file: " + path.string());
  std::vector<LabeledExample> examples;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tab1 = line.find('\t');
    const auto tab2 = tab1 == std::string::npos ? std::string::npos
                                                : line.find('\t', tab1 + 1);
    if (tab2 == std::string::npos) {
      throw IoError("malformed corpus record at " + path.string() + ":" +
                    std::to_string(lineno));
    }
    LabeledExample ex;
    try {
      ex.label = std::stoi(line.substr(0, tab1));
    } catch (const std::exception&) {
      throw IoError("bad label at " + path.string() + ":" + std::to_string(lineno));
    }
    const auto seg0 = split_words(line.substr(tab1 + 1, tab2 - tab1 - 1));
    const auto seg1 = split_words(line.substr(tab2 + 1));
    std::vector<int> ids;
    std::vector<int> segments;
    for (const auto& w : seg0) {
      ids.push_back(vocab.id(w));
      segments.push_back(0);
    }
    if (!seg1.empty()) {
      ids.push_back(vocab.sep_id());
      segments.push_back(0);
      for (const auto& w : seg1) {
        ids.push_back(vocab.id(w));
        segments.push_back(1);
      }
    }
    ex.seq = TokenSeq(std::move(ids), std::move(segments));
    examples.push_back(std::move(ex));
  }
  return examples;
}

}  // namespace dftrig

#include "dftrig/impressions.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace dftrig {

namespace {

struct Geometry {
  std::vector<int> initial_ids;
  std::vector<int> segments;
  std::vector<int> mutable_positions;
};

Geometry make_geometry(const TextClassifier& classifier, const Vocabulary& vocab,
                       int length, int init_id, PairTarget pair_target) {
  if (length < 1) throw InvalidConfigError("impression length must be >= 1");
  Geometry g;
  if (!classifier.config().pair_mode) {
    g.initial_ids.assign(static_cast<std::size_t>(length), init_id);
    g.segments.assign(static_cast<std::size_t>(length), 0);
    for (int i = 0; i < length; ++i) g.mutable_positions.push_back(i);
    return g;
  }
  // premise INIT^L, fixed SEP, hypothesis INIT^L
  for (int i = 0; i < length; ++i) {
    g.initial_ids.push_back(init_id);
    g.segments.push_back(0);
  }
  g.initial_ids.push_back(vocab.sep_id());
  g.segments.push_back(0);
  for (int i = 0; i < length; ++i) {
    g.initial_ids.push_back(init_id);
    g.segments.push_back(1);
  }
  if (pair_target == PairTarget::kBothSegments) {
    for (int i = 0; i < length; ++i) g.mutable_positions.push_back(i);
  }
  for (int i = 0; i < length; ++i) g.mutable_positions.push_back(length + 1 + i);
  return g;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

ClassImpression generate_class_impression(const TextClassifier& classifier,
                                          const Vocabulary& vocab,
                                          const CandidateMask& mask,
                                          const ImpressionConfig& config) {
  if (config.lengths.empty() || config.init_tokens.empty()) {
    throw InvalidConfigError("impression config needs a length and an init token");
  }
  if (config.target_class < 0 ||
      config.target_class >= classifier.config().num_classes) {
    throw InvalidConfigError("impression target class out of range");
  }
  if (config.pair_target == PairTarget::kSegmentOneOnly &&
      !classifier.config().pair_mode) {
    throw InvalidConfigError("segment-1-only impressions need a pair-mode model");
  }
  const int length = config.lengths.front();
  const std::string& init_token = config.init_tokens.front();
  const int init_id = vocab.id(init_token);
  const Geometry geom =
      make_geometry(classifier, vocab, length, init_id, config.pair_target);

  const int target = config.target_class;
  SequenceObjective objective;
  objective.loss = [&classifier, &geom, target](const std::vector<int>& ids) {
    return classifier.task_loss(TokenSeq(ids, geom.segments), target);
  };
  objective.gradient_at = [&classifier, &geom, target](const std::vector<int>& ids,
                                                       int position) {
    const int pos_arr[1] = {position};
    return classifier
        .embedding_gradient(TokenSeq(ids, geom.segments), target, pos_arr)
        .position_gradients.front();
  };

  const SweepResult swept = sweep_optimize(geom.initial_ids, geom.mutable_positions,
                                           objective, classifier.embeddings(), mask,
                                           config.beam);
  ClassImpression imp;
  imp.target_class = target;
  imp.seq = TokenSeq(swept.best.ids, geom.segments);
  imp.final_loss = swept.best.loss;
  imp.confidence = classifier.forward(imp.seq)(target);
  imp.init_token = init_token;
  imp.length = length;
  imp.seed = config.beam.rng_seed;
  return imp;
}

std::vector<ClassImpression> generate_impression_set(
    const TextClassifier& classifier, const Vocabulary& vocab,
    const CandidateMask& mask, const ImpressionConfig& config) {
  if (config.seeds_per_combo < 1) {
    throw InvalidConfigError("seeds_per_combo must be >= 1");
  }
  std::vector<ClassImpression> out;
  std::uint64_t combo = 0;
  for (int length : config.lengths) {
    for (const std::string& init_token : config.init_tokens) {
      for (int s = 0; s < config.seeds_per_combo; ++s, ++combo) {
        ImpressionConfig one = config;
        one.lengths = {length};
        one.init_tokens = {init_token};
        one.beam.rng_seed = config.beam.rng_seed + combo;
        out.push_back(generate_class_impression(classifier, vocab, mask, one));
      }
    }
  }
  return out;
}

void save_impressions(const std::vector<ClassImpression>& impressions,
                      const Vocabulary& vocab, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  for (const auto& imp : impressions) {
    std::string seg[2];
    for (std::size_t i = 0; i < imp.seq.size(); ++i) {
      const int id = imp.seq.ids[i];
      if (id == vocab.sep_id()) continue;
      std::string& s = seg[static_cast<std::size_t>(imp.seq.segments[i])];
      if (!s.empty()) s += ' ';
      s += vocab.token(id);
    }
    nlohmann::json provenance = {{"init", imp.init_token},
                                 {"length", imp.length},
                                 {"seed", imp.seed},
                                 {"final_loss", imp.final_loss}};
    out << imp.target_class << '\t' << format_double(imp.confidence) << '\t'
        << seg[0] << '\t' << seg[1] << '\t' << provenance.dump() << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<ClassImpression> load_impressions(const Vocabulary& vocab,
                                              const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open impressions file: " + path.string());
  std::vector<ClassImpression> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (int f = 0; f < 4; ++f) {
      const auto tab = line.find('\t', start);
      if (tab == std::string::npos) {
        throw IoError("malformed impression record at " + path.string() + ":" +
                      std::to_string(lineno));
      }
      fields.push_back(line.substr(start, tab - start));
      start = tab + 1;
    }
    fields.push_back(line.substr(start));

    ClassImpression imp;
    try {
      imp.target_class = std::stoi(fields[0]);
      imp.confidence = std::stod(fields[1]);
    } catch (const std::exception&) {
      throw IoError("bad numeric field at " + path.string() + ":" +
                    std::to_string(lineno));
    }
    std::vector<int> ids;
    std::vector<int> segments;
    {
      std::istringstream s0(fields[2]);
      std::string w;
      while (s0 >> w) {
        ids.push_back(vocab.id(w));
        segments.push_back(0);
      }
      std::istringstream s1(fields[3]);
      std::vector<std::string> seg1;
      while (s1 >> w) seg1.push_back(w);
      if (!seg1.empty()) {
        ids.push_back(vocab.sep_id());
        segments.push_back(0);
        for (const auto& t : seg1) {
          ids.push_back(vocab.id(t));
          segments.push_back(1);
        }
      }
    }
    imp.seq = TokenSeq(std::move(ids), std::move(segments));
    try {
      const auto provenance = nlohmann::json::parse(fields[4]);
      imp.init_token = provenance.at("init").get<std::string>();
      imp.length = provenance.at("length").get<int>();
      imp.seed = provenance.at("seed").get<std::uint64_t>();
      imp.final_loss = provenance.at("final_loss").get<double>();
    } catch (const nlohmann::json::exception&) {
      throw IoError("bad provenance blob at " + path.string() + ":" +
                    std::to_string(lineno));
    }
    out.push_back(std::move(imp));
  }
  return out;
}

}  // namespace dftrig

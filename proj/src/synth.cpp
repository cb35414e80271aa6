#include "advdet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "advdet/error.hpp"
#include "advdet/rng.hpp"

namespace advdet {

namespace {

constexpr int kStrongPerClass = 40;
constexpr int kWeakPerClass = 40;
constexpr int kNeutralWords = 80;
constexpr int kRareWords = 240;
constexpr int kMinLength = 10;
constexpr int kMaxLength = 24;

struct Vocab {
  std::vector<std::vector<std::string>> strong;  // [class][i]
  std::vector<std::vector<std::string>> weak;
  std::vector<std::string> neutral;
  // Obscure variant spellings: they never occur in any document, only as
  // substitution candidates, the way typo-style attack candidates fall
  // outside a model's training vocabulary.
  std::vector<std::string> rare;
};

Vocab make_vocab(int num_classes) {
  Vocab vocab;
  vocab.strong.resize(num_classes);
  vocab.weak.resize(num_classes);
  for (int c = 0; c < num_classes; ++c) {
    for (int i = 0; i < kStrongPerClass; ++i) {
      vocab.strong[c].push_back("str" + std::to_string(c) + "w" +
                                std::to_string(i));
    }
    for (int i = 0; i < kWeakPerClass; ++i) {
      vocab.weak[c].push_back("wk" + std::to_string(c) + "w" +
                              std::to_string(i));
    }
  }
  for (int i = 0; i < kNeutralWords; ++i) {
    vocab.neutral.push_back("neu" + std::to_string(i));
  }
  for (int i = 0; i < kRareWords; ++i) {
    vocab.rare.push_back("xq" + std::to_string(i));
  }
  return vocab;
}

const std::string& pick(Rng& rng, const std::vector<std::string>& pool) {
  return pool[rng.uniform_int(pool.size())];
}

int other_class(Rng& rng, int gold, int num_classes) {
  if (num_classes == 2) return 1 - gold;
  return static_cast<int>((gold + 1 + rng.uniform_int(num_classes - 1)) %
                          num_classes);
}

// Documents use a fixed composition per length (word identities and order
// random, category counts deterministic), so natural examples cluster
// tightly in model confidence instead of smearing across it.
LabeledExample make_example(Rng& rng, const Vocab& vocab, int num_classes,
                            const std::string& id) {
  const int gold = static_cast<int>(rng.uniform_int(num_classes));
  const int length =
      kMinLength + static_cast<int>(rng.uniform_int(kMaxLength - kMinLength + 1));
  const int n_strong = std::max(1, static_cast<int>(std::lround(0.24 * length)));
  const int n_weak = static_cast<int>(std::lround(0.16 * length));
  const int n_weak_other = static_cast<int>(std::lround(0.18 * length));
  const int n_strong_other = static_cast<int>(std::lround(0.09 * length));
  const int n_neutral =
      std::max(0, length - n_strong - n_weak - n_weak_other - n_strong_other);

  LabeledExample example;
  example.gold_label = gold;
  example.origin = Origin::kNatural;
  example.source_id = id;
  auto& tokens = example.sequence.tokens;
  tokens.reserve(length);
  for (int i = 0; i < n_strong; ++i) tokens.push_back(pick(rng, vocab.strong[gold]));
  for (int i = 0; i < n_weak; ++i) tokens.push_back(pick(rng, vocab.weak[gold]));
  for (int i = 0; i < n_weak_other; ++i) {
    tokens.push_back(pick(rng, vocab.weak[other_class(rng, gold, num_classes)]));
  }
  for (int i = 0; i < n_strong_other; ++i) {
    tokens.push_back(pick(rng, vocab.strong[other_class(rng, gold, num_classes)]));
  }
  for (int i = 0; i < n_neutral; ++i) tokens.push_back(pick(rng, vocab.neutral));
  rng.shuffle(tokens);
  example.sequence.mask_flags.assign(tokens.size(), false);
  return example;
}

Dataset make_split(Rng& rng, const Vocab& vocab, int num_classes, int size,
                   const std::string& prefix, SplitTag tag) {
  Dataset dataset;
  dataset.num_classes = num_classes;
  dataset.split_tag = tag;
  for (int i = 0; i < size; ++i) {
    dataset.examples.push_back(
        make_example(rng, vocab, num_classes, prefix + std::to_string(i)));
  }
  return dataset;
}

SynonymTable make_synonyms(Rng& rng, const Vocab& vocab, int num_classes) {
  SynonymTable table;
  auto pick_distinct = [&](const std::vector<std::string>& pool,
                           const std::string& avoid) -> const std::string& {
    for (;;) {
      const std::string& candidate = pick(rng, pool);
      if (candidate != avoid) return candidate;
    }
  };
  for (int c = 0; c < num_classes; ++c) {
    for (const std::string& word : vocab.strong[c]) {
      std::vector<std::string> candidates;
      candidates.push_back(pick_distinct(vocab.weak[c], word));
      candidates.push_back(pick(rng, vocab.neutral));
      const int oc = other_class(rng, c, num_classes);
      candidates.push_back(pick(rng, vocab.weak[oc]));
      candidates.push_back(pick(rng, vocab.strong[oc]));
      candidates.push_back(pick(rng, vocab.rare));
      candidates.push_back(pick(rng, vocab.rare));
      candidates.push_back(pick(rng, vocab.rare));
      table.entries[word] = std::move(candidates);
    }
    for (const std::string& word : vocab.weak[c]) {
      std::vector<std::string> candidates;
      candidates.push_back(pick(rng, vocab.neutral));
      const int oc = other_class(rng, c, num_classes);
      candidates.push_back(pick(rng, vocab.weak[oc]));
      candidates.push_back(pick(rng, vocab.rare));
      candidates.push_back(pick(rng, vocab.rare));
      table.entries[word] = std::move(candidates);
    }
  }
  for (const std::string& word : vocab.neutral) {
    std::vector<std::string> candidates;
    for (int i = 0; i < 3; ++i) {
      candidates.push_back(pick_distinct(vocab.neutral, word));
    }
    table.entries[word] = std::move(candidates);
  }
  return table;
}

}  // namespace

ToyCorpus make_toy_corpus(const ToyCorpusConfig& config) {
  if (config.num_classes < 2) {
    throw Error(ErrorCode::kInvalidArgument, "need at least two classes");
  }
  if (config.train_size < 1 || config.test_size < 1 ||
      config.validation_size < 0) {
    throw Error(ErrorCode::kInvalidArgument, "bad corpus sizes");
  }
  const Vocab vocab = make_vocab(config.num_classes);
  ToyCorpus corpus;
  {
    Rng rng(derive_seed(config.seed, "toy-train"));
    corpus.train = make_split(rng, vocab, config.num_classes,
                              config.train_size, "tr", SplitTag::kTrain);
  }
  {
    Rng rng(derive_seed(config.seed, "toy-test"));
    corpus.test = make_split(rng, vocab, config.num_classes, config.test_size,
                             "te", SplitTag::kEvalNat);
  }
  {
    Rng rng(derive_seed(config.seed, "toy-validation"));
    corpus.validation =
        make_split(rng, vocab, config.num_classes, config.validation_size,
                   "va", SplitTag::kValidation);
  }
  {
    Rng rng(derive_seed(config.seed, "toy-synonyms"));
    corpus.synonyms = make_synonyms(rng, vocab, config.num_classes);
  }
  return corpus;
}

}  // namespace advdet

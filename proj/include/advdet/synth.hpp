#pragma once

#include <cstdint>

#include "advdet/corpus.hpp"

namespace advdet {

// Deterministic synthetic text-classification corpus for desk-scale
// experiments. Each class owns pools of strongly and weakly indicative
// words; documents mix gold-class words with neutral and opposite-class
// noise, so a trained classifier is accurate but not saturated. The synonym
// table maps indicative words to same-class, neutral, and opposite-class
// alternatives, which gives a substitution attacker room to work.
struct ToyCorpusConfig {
  int train_size = 2000;
  int test_size = 600;
  int validation_size = 200;
  int num_classes = 2;
  std::uint64_t seed = 0;
};

struct ToyCorpus {
  Dataset train;
  Dataset test;
  Dataset validation;
  SynonymTable synonyms;
};

ToyCorpus make_toy_corpus(const ToyCorpusConfig& config);

}  // namespace advdet

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace advdet {

// Reserved mask symbol. The tokenizer only emits ASCII tokens, so no input
// text can ever produce this string.
inline constexpr std::string_view kMaskToken = "⟨mask⟩";

struct TokenSequence {
  std::vector<std::string> tokens;
  std::vector<bool> mask_flags;  // true = token replaced by the mask symbol

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
  // Surface form with masked positions rendered as the mask symbol.
  std::string text() const;
};

enum class Origin { kNatural, kAdvRegular, kAdvFarBoundary };

const char* origin_name(Origin origin);
Origin origin_from_name(std::string_view name);  // throws on unknown tag

struct LabeledExample {
  TokenSequence sequence;
  int gold_label = 0;
  Origin origin = Origin::kNatural;
  std::string source_id;  // id of the natural example this derives from

  // Unique id within a mixed natural/adversarial dataset: natural examples
  // are identified by their source_id, adversarial ones by source_id plus an
  // origin tag. Used to key per-example seeds and to join score files.
  std::string uid() const;
};

enum class SplitTag { kTrain, kAux, kEvalNat, kEvalAdv, kValidation, kEval };

struct Dataset {
  int num_classes = 0;
  std::vector<LabeledExample> examples;
  SplitTag split_tag = SplitTag::kTrain;
};

struct SynonymTable {
  // Ordered map so iteration (and therefore candidate enumeration) is
  // deterministic.
  std::map<std::string, std::vector<std::string>> entries;

  // nullptr when the token has no candidates.
  const std::vector<std::string>* candidates(const std::string& token) const {
    auto it = entries.find(token);
    return it == entries.end() ? nullptr : &it->second;
  }
};

// Lowercases, splits on whitespace, keeps each ASCII punctuation character as
// a standalone token. Bytes outside ASCII act as separators. Throws
// ErrorCode::kEmptyText when nothing survives.
TokenSequence tokenize(std::string_view raw_text);

// JSONL: line 1 is {"num_classes": int}; each following line is
// {"text", "label", "origin", "source_id"}.
Dataset load_dataset(const std::string& path, SplitTag split_tag);

void save_dataset(const Dataset& dataset, const std::string& path);

// JSONL: each line {"word": string, "candidates": [string, ...]}.
SynonymTable load_synonyms(const std::string& path);

// Builds a balanced detection eval set: all adversarial examples plus an
// equal-sized natural half sampled uniformly (seeded) from `natural` after
// excluding the adversarial sources. Throws kDisjointness when the exclusion
// alone makes the pool too small, kInsufficient when the natural input is
// too small outright. `allow_unequal` keeps whatever naturals remain instead
// of failing.
Dataset assemble_eval_set(const Dataset& natural, const Dataset& adversarial,
                          std::uint64_t seed, bool allow_unequal = false);

// Uniform subset without replacement (input order preserved), tagged as the
// auxiliary calibration split.
Dataset sample_aux(const Dataset& train, std::size_t size, std::uint64_t seed);

}  // namespace advdet

#include "advdet/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

#include "advdet/error.hpp"
#include "advdet/jsonl.hpp"
#include "advdet/rng.hpp"

namespace advdet {

std::string TokenSequence::text() const {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out += ' ';
    out += mask_flags[i] ? std::string(kMaskToken) : tokens[i];
  }
  return out;
}

const char* origin_name(Origin origin) {
  switch (origin) {
    case Origin::kNatural: return "natural";
    case Origin::kAdvRegular: return "adv";
    case Origin::kAdvFarBoundary: return "adv_fb";
  }
  return "natural";
}

Origin origin_from_name(std::string_view name) {
  if (name == "natural") return Origin::kNatural;
  if (name == "adv") return Origin::kAdvRegular;
  if (name == "adv_fb") return Origin::kAdvFarBoundary;
  throw Error(ErrorCode::kSchema, "unknown origin tag: " + std::string(name));
}

std::string LabeledExample::uid() const {
  if (origin == Origin::kNatural) return source_id;
  return source_id + "#" + origin_name(origin);
}

TokenSequence tokenize(std::string_view raw_text) {
  TokenSequence seq;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) {
      seq.tokens.push_back(current);
      current.clear();
    }
  };
  for (unsigned char c : raw_text) {
    if (c < 0x80 && std::isalnum(c)) {
      current += static_cast<char>(std::tolower(c));
    } else if (c < 0x80 && std::ispunct(c)) {
      flush();
      seq.tokens.emplace_back(1, static_cast<char>(c));
    } else {
      flush();  // whitespace, control bytes, and non-ASCII all separate
    }
  }
  flush();
  if (seq.tokens.empty()) {
    throw Error(ErrorCode::kEmptyText, "text tokenizes to nothing");
  }
  seq.mask_flags.assign(seq.tokens.size(), false);
  return seq;
}

Dataset load_dataset(const std::string& path, SplitTag split_tag) {
  std::ifstream in = open_input(path);
  Dataset dataset;
  dataset.split_tag = split_tag;

  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::kSchema, path + ": missing header line");
  }
  ++line_no;
  nlohmann::json header = parse_json_line(line, path, line_no);
  if (!header.contains("num_classes") ||
      !header["num_classes"].is_number_integer() ||
      header["num_classes"].get<int>() < 1) {
    throw Error(ErrorCode::kSchema,
                path + ":1: header must declare a positive num_classes");
  }
  dataset.num_classes = header["num_classes"].get<int>();

  while (std::getline(in, line)) {
    ++line_no;
    nlohmann::json record = parse_json_line(line, path, line_no);
    const std::string where = path + ":" + std::to_string(line_no);
    if (!record.contains("text") || !record["text"].is_string() ||
        !record.contains("label") || !record["label"].is_number_integer() ||
        !record.contains("origin") || !record["origin"].is_string() ||
        !record.contains("source_id") || !record["source_id"].is_string()) {
      throw Error(ErrorCode::kSchema,
                  where + ": record needs text/label/origin/source_id");
    }
    LabeledExample example;
    example.gold_label = record["label"].get<int>();
    if (example.gold_label < 0 || example.gold_label >= dataset.num_classes) {
      throw Error(ErrorCode::kSchema, where + ": label out of range");
    }
    example.origin = origin_from_name(record["origin"].get<std::string>());
    example.source_id = record["source_id"].get<std::string>();
    if (example.source_id.empty()) {
      throw Error(ErrorCode::kSchema, where + ": empty source_id");
    }
    try {
      example.sequence = tokenize(record["text"].get<std::string>());
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kEmptyText) throw;
      throw Error(ErrorCode::kEmptyText, where + ": " + e.what());
    }
    dataset.examples.push_back(std::move(example));
  }
  return dataset;
}

void save_dataset(const Dataset& dataset, const std::string& path) {
  std::ofstream out = open_output(path);
  out << nlohmann::json{{"num_classes", dataset.num_classes}}.dump() << '\n';
  for (const LabeledExample& example : dataset.examples) {
    out << nlohmann::json{{"text", example.sequence.text()},
                          {"label", example.gold_label},
                          {"origin", origin_name(example.origin)},
                          {"source_id", example.source_id}}
               .dump()
        << '\n';
  }
}

SynonymTable load_synonyms(const std::string& path) {
  std::ifstream in = open_input(path);
  SynonymTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    nlohmann::json record = parse_json_line(line, path, line_no);
    if (record.size() == 1 && record.contains("meta")) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    if (!record.contains("word") || !record["word"].is_string() ||
        !record.contains("candidates") || !record["candidates"].is_array()) {
      throw Error(ErrorCode::kSchema, where + ": record needs word/candidates");
    }
    std::string word = record["word"].get<std::string>();
    std::vector<std::string> candidates;
    for (const auto& candidate : record["candidates"]) {
      if (!candidate.is_string()) {
        throw Error(ErrorCode::kSchema, where + ": candidate must be a string");
      }
      std::string c = candidate.get<std::string>();
      if (c == word) {
        throw Error(ErrorCode::kSchema,
                    where + ": candidate list contains the key token");
      }
      candidates.push_back(std::move(c));
    }
    if (candidates.empty()) {
      throw Error(ErrorCode::kSchema, where + ": empty candidate list");
    }
    if (!table.entries.emplace(std::move(word), std::move(candidates)).second) {
      throw Error(ErrorCode::kSchema, where + ": duplicate word entry");
    }
  }
  return table;
}

Dataset assemble_eval_set(const Dataset& natural, const Dataset& adversarial,
                          std::uint64_t seed, bool allow_unequal) {
  if (natural.num_classes != adversarial.num_classes) {
    throw Error(ErrorCode::kInvalidArgument,
                "natural and adversarial sets disagree on num_classes");
  }
  std::unordered_set<std::string> adv_sources;
  for (const LabeledExample& example : adversarial.examples) {
    if (example.origin == Origin::kNatural) {
      throw Error(ErrorCode::kInvalidArgument,
                  "adversarial input contains a natural example");
    }
    adv_sources.insert(example.source_id);
  }

  const std::size_t need = adversarial.examples.size();
  if (natural.examples.size() < need && !allow_unequal) {
    throw Error(ErrorCode::kInsufficient,
                "natural pool smaller than the adversarial half");
  }

  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < natural.examples.size(); ++i) {
    if (natural.examples[i].origin != Origin::kNatural) {
      throw Error(ErrorCode::kInvalidArgument,
                  "natural input contains an adversarial example");
    }
    if (!adv_sources.count(natural.examples[i].source_id)) {
      pool.push_back(i);
    }
  }
  if (pool.size() < need && !allow_unequal) {
    // The raw pool was big enough; the overlap with adversarial sources is
    // what made it too small.
    throw Error(ErrorCode::kDisjointness,
                "source_id overlap between natural pool and adversarial half");
  }

  Rng rng(derive_seed(seed, "eval-natural-half"));
  rng.shuffle(pool);
  const std::size_t take = std::min(pool.size(), need);
  std::vector<std::size_t> chosen(pool.begin(), pool.begin() + take);
  std::sort(chosen.begin(), chosen.end());  // keep input order in the output

  Dataset eval;
  eval.num_classes = natural.num_classes;
  eval.split_tag = SplitTag::kEval;
  for (std::size_t i : chosen) eval.examples.push_back(natural.examples[i]);
  for (const LabeledExample& example : adversarial.examples) {
    eval.examples.push_back(example);
  }
  return eval;
}

Dataset sample_aux(const Dataset& train, std::size_t size, std::uint64_t seed) {
  if (size > train.examples.size()) {
    throw Error(ErrorCode::kInsufficient,
                "aux sample larger than the training set");
  }
  std::vector<std::size_t> indices(train.examples.size());
  for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
  Rng rng(derive_seed(seed, "aux-sample"));
  rng.shuffle(indices);
  indices.resize(size);
  std::sort(indices.begin(), indices.end());

  Dataset aux;
  aux.num_classes = train.num_classes;
  aux.split_tag = SplitTag::kAux;
  for (std::size_t i : indices) aux.examples.push_back(train.examples[i]);
  return aux;
}

}  // namespace advdet

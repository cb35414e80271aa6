#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "advdet/corpus.hpp"
#include "advdet/victim.hpp"

namespace advdet {

enum class GoalKind { kRegular, kFarBoundary };

struct GoalFunction {
  GoalKind kind = GoalKind::kRegular;
  // Far-boundary target: keep substituting after the flip until the new
  // predicted class reaches this probability. Must exceed 1/num_classes.
  double epsilon = 0.9;
};

// Extra boolean constraints on (original, candidate) pairs; a candidate is
// rejected if any predicate returns false. The perturbation-ratio budget is
// always enforced.
using AttackConstraint =
    std::function<bool(const TokenSequence&, const TokenSequence&)>;

struct AttackConfig {
  GoalFunction goal;
  double max_perturb_ratio = 0.3;  // fraction of tokens that may be replaced
  SynonymTable synonyms;
  int max_candidates_per_word = 8;
  std::uint64_t seed = 0;
  std::vector<AttackConstraint> extra_constraints;

  void validate(int num_classes) const;
};

enum class AttackStatus { kSuccess, kSuccessFb, kFailed, kSkipped };

const char* attack_status_name(AttackStatus status);

struct AttackOutcome {
  AttackStatus status = AttackStatus::kFailed;
  std::optional<TokenSequence> adversarial;
  std::int64_t queries = 0;  // every model call made during the search
  double final_prob = 0.0;   // probability of the new predicted class
  std::vector<int> perturbed_indices;
};

// Positions sorted by how much masking the token drops the probability of
// the originally predicted class; ties break toward the lower index.
std::vector<int> rank_word_importance(const VictimModel& model,
                                      const TokenSequence& sequence);

// Greedy synonym-substitution search. Regular goal stops at the first label
// flip; far-boundary keeps strengthening the flipped class until epsilon is
// reached (a flip that never reaches epsilon is reported as plain kSuccess).
AttackOutcome attack(const VictimModel& model, const LabeledExample& example,
                     const AttackConfig& config);

// max(probs) - second_max(probs). Requires at least two classes.
double boundary_gap(const ProbVector& prob);

}  // namespace advdet

#include "advdet/attack.hpp"

#include <algorithm>
#include <cmath>

#include "advdet/error.hpp"

namespace advdet {

namespace {

double best_other_prob(const ProbVector& probs, int original_class) {
  double best = 0.0;
  for (int c = 0; c < probs.size(); ++c) {
    if (c != original_class) best = std::max(best, probs(c));
  }
  return best;
}

bool passes_constraints(const AttackConfig& config,
                        const TokenSequence& original,
                        const TokenSequence& candidate) {
  for (const AttackConstraint& constraint : config.extra_constraints) {
    if (!constraint(original, candidate)) return false;
  }
  return true;
}

}  // namespace

void AttackConfig::validate(int num_classes) const {
  if (!(max_perturb_ratio > 0.0) || max_perturb_ratio > 1.0) {
    throw Error(ErrorCode::kInvalidArgument,
                "max_perturb_ratio must be in (0,1]");
  }
  if (max_candidates_per_word < 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "max_candidates_per_word must be positive");
  }
  if (goal.kind == GoalKind::kFarBoundary) {
    if (!(goal.epsilon > 0.0) || goal.epsilon > 1.0) {
      throw Error(ErrorCode::kInvalidArgument, "epsilon must be in (0,1]");
    }
    if (num_classes > 0 && goal.epsilon <= 1.0 / num_classes) {
      throw Error(ErrorCode::kInvalidArgument,
                  "epsilon must exceed 1/num_classes");
    }
  }
}

const char* attack_status_name(AttackStatus status) {
  switch (status) {
    case AttackStatus::kSuccess: return "success";
    case AttackStatus::kSuccessFb: return "success_fb";
    case AttackStatus::kFailed: return "failed";
    case AttackStatus::kSkipped: return "skipped";
  }
  return "failed";
}

std::vector<int> rank_word_importance(const VictimModel& model,
                                      const TokenSequence& sequence) {
  if (sequence.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "cannot rank an empty sequence");
  }
  ProbVector base = predict(model, sequence);
  const int y = argmax(base);
  const double p_y = base(y);

  std::vector<std::pair<double, int>> drops;  // (-drop, position)
  TokenSequence masked = sequence;
  for (std::size_t i = 0; i < sequence.size(); ++i) {
    masked.mask_flags[i] = true;
    ProbVector probs = predict(model, masked);
    masked.mask_flags[i] = sequence.mask_flags[i];
    drops.emplace_back(-(p_y - probs(y)), static_cast<int>(i));
  }
  std::sort(drops.begin(), drops.end());
  std::vector<int> order;
  order.reserve(drops.size());
  for (const auto& [neg_drop, pos] : drops) order.push_back(pos);
  return order;
}

AttackOutcome attack(const VictimModel& model, const LabeledExample& example,
                     const AttackConfig& config) {
  config.validate(model.config.num_classes);
  const TokenSequence& original = example.sequence;

  AttackOutcome outcome;
  ProbVector base = predict(model, original);
  outcome.queries = 1;
  const int y = argmax(base);
  if (y != example.gold_label) {
    outcome.status = AttackStatus::kSkipped;
    return outcome;
  }

  // Ranking predicts the base input once more plus one masked pass per token.
  std::vector<int> order = rank_word_importance(model, original);
  outcome.queries += static_cast<std::int64_t>(original.size()) + 1;

  const std::size_t budget = static_cast<std::size_t>(
      std::ceil(config.max_perturb_ratio * static_cast<double>(original.size())));

  TokenSequence current = original;
  ProbVector cur_probs = base;
  double best_other = best_other_prob(cur_probs, y);
  bool flipped = false;
  int flipped_class = -1;

  auto finish_flipped = [&](AttackStatus status) {
    outcome.status = status;
    outcome.adversarial = current;
    outcome.final_prob = cur_probs(flipped_class);
    return outcome;
  };

  for (int pos : order) {
    if (outcome.perturbed_indices.size() >= budget) break;
    const std::vector<std::string>* candidates =
        config.synonyms.candidates(original.tokens[pos]);
    if (candidates == nullptr) continue;
    const std::size_t limit =
        std::min<std::size_t>(candidates->size(),
                              static_cast<std::size_t>(config.max_candidates_per_word));

    const std::string kept = current.tokens[pos];
    bool improved = false;
    std::string best_token;
    ProbVector best_probs;
    double best_value =
        flipped ? cur_probs(flipped_class) : best_other;

    for (std::size_t c = 0; c < limit; ++c) {
      current.tokens[pos] = (*candidates)[c];
      if (!passes_constraints(config, original, current)) continue;
      ProbVector probs = predict(model, current);
      ++outcome.queries;
      if (!flipped) {
        const double value = best_other_prob(probs, y);
        if (value > best_value) {
          best_value = value;
          best_token = (*candidates)[c];
          best_probs = probs;
          improved = true;
        }
      } else {
        // Post-flip: only substitutions that keep the flipped class on top
        // and strictly raise its probability are eligible.
        if (argmax(probs) == flipped_class && probs(flipped_class) > best_value) {
          best_value = probs(flipped_class);
          best_token = (*candidates)[c];
          best_probs = probs;
          improved = true;
        }
      }
    }
    current.tokens[pos] = kept;
    if (!improved) continue;

    current.tokens[pos] = best_token;
    cur_probs = best_probs;
    outcome.perturbed_indices.push_back(pos);

    if (!flipped) {
      best_other = best_value;
      if (argmax(cur_probs) != y) {
        flipped = true;
        flipped_class = argmax(cur_probs);
        if (config.goal.kind == GoalKind::kRegular) {
          return finish_flipped(AttackStatus::kSuccess);
        }
        if (cur_probs(flipped_class) >= config.goal.epsilon) {
          return finish_flipped(AttackStatus::kSuccessFb);
        }
      }
    } else if (cur_probs(flipped_class) >= config.goal.epsilon) {
      return finish_flipped(AttackStatus::kSuccessFb);
    }
  }

  if (flipped) {
    // Far-boundary goal unreached within the budget; still a valid flip.
    return finish_flipped(AttackStatus::kSuccess);
  }
  outcome.status = AttackStatus::kFailed;
  outcome.perturbed_indices.clear();
  return outcome;
}

double boundary_gap(const ProbVector& prob) {
  if (prob.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "boundary gap needs at least two classes");
  }
  double top = -1.0, second = -1.0;
  for (int c = 0; c < prob.size(); ++c) {
    if (prob(c) > top) {
      second = top;
      top = prob(c);
    } else if (prob(c) > second) {
      second = prob(c);
    }
  }
  return top - second;
}

}  // namespace advdet

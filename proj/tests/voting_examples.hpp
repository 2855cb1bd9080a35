#pragma once

#include <vector>

#include "mpe/voting.hpp"

namespace mpe::testing {

struct VotingRow {
  voting::PairLabels pairs;
  Label gold;
  std::optional<Label> majority;
  Label heuristic;
  int category;
};

// One published item per agreement category 0..4, with the predictions each rule makes.
inline std::vector<VotingRow> voting_rows() {
  using enum Label;
  return {
      {{Neutral, Neutral, Neutral, Neutral}, Entailment, Neutral, Neutral, 0},
      {{Neutral, Contradiction, Neutral, Neutral}, Contradiction, Neutral, Contradiction, 1},
      {{Entailment, Entailment, Neutral, Neutral}, Entailment, std::nullopt, Entailment, 2},
      {{Neutral, Neutral, Entailment, Neutral}, Neutral, Neutral, Entailment, 3},
      {{Contradiction, Contradiction, Contradiction, Contradiction}, Contradiction, Contradiction, Contradiction, 4},
  };
}

}  // namespace mpe::testing

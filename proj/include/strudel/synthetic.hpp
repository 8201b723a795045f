#pragma once

// Seeded generator of small two-speaker corpora where the couple weighs a
// few options and settles on one. The settled option is what the Solution
// entry records and what the gold candidate names, so every example is
// decidable from the annotated Solution.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "strudel/corpus.hpp"

namespace strudel {

struct SyntheticSpec {
    std::size_t dialogues = 8;
    std::size_t examples_per_dialogue = 2;
    std::size_t candidates = 4;
    // Options are drawn from the first `item_pool` items of the first
    // `scenarios` scenarios (3 scenarios of 8 items exist).
    std::size_t scenarios = 3;
    std::size_t item_pool = 8;
    TaskKind task = TaskKind::ResponsePrediction;
    std::uint64_t seed = 7;
    std::string id_prefix = "syn";
};

struct SyntheticCorpus {
    std::vector<Dialogue> dialogues;
    std::vector<StrudelAnnotation> annotations;
    std::vector<ComprehensionExample> examples;
};

SyntheticCorpus make_synthetic_corpus(const SyntheticSpec& spec);

}  // namespace strudel

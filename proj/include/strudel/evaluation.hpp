#pragma once

// Ranking metrics over per-candidate scores: R@k, MRR, accuracy.

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "strudel/model.hpp"

namespace strudel {

struct ScoredExample {
    std::string example_id;
    std::vector<double> scores;  // one per candidate
    std::size_t gold_index = 0;
};

struct MetricsReport {
    double r_at_1 = 0.0;
    double r_at_2 = 0.0;
    double mrr = 0.0;
    double accuracy = 0.0;
    std::size_t n_examples = 0;

    // "n_examples=16 r_at_1=0.750000 r_at_2=... mrr=... accuracy=..."
    std::string to_kv_line() const;
    std::string to_table() const;
};

// 1-based rank of the gold candidate under descending score; equal scores
// rank the lower candidate index first.
std::size_t rank_of_gold(const ScoredExample& s);

double recall_at_k(std::span<const ScoredExample> batch, std::size_t k);
double mean_reciprocal_rank(std::span<const ScoredExample> batch);
double accuracy(std::span<const ScoredExample> batch);
MetricsReport aggregate_metrics(std::span<const ScoredExample> batch);

std::vector<ScoredExample> score_examples(const StrudelModel& model, std::span<const ComprehensionExample> examples);
MetricsReport evaluate(const StrudelModel& model, std::span<const ComprehensionExample> examples);

// One {"id", "scores", "gold_index"} record per line.
void write_scores(const std::filesystem::path& path, std::span<const ScoredExample> batch);
std::vector<ScoredExample> load_scores(const std::filesystem::path& path);

}  // namespace strudel

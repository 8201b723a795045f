#include "strudel/evaluation.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "strudel/error.hpp"
#include "strudel/io.hpp"

namespace strudel {

using nlohmann::json;

namespace {

void check(const ScoredExample& s) {
    if (s.scores.size() < 2) throw Error(ErrorCode::IndexOutOfRange, s.example_id + ": fewer than 2 scores");
    if (s.gold_index >= s.scores.size()) throw Error(ErrorCode::IndexOutOfRange, s.example_id + ": gold index");
}

void require_batch(std::span<const ScoredExample> batch) {
    if (batch.empty()) throw Error(ErrorCode::EmptyBatch, "metric over an empty batch");
}

}  // namespace

std::size_t rank_of_gold(const ScoredExample& s) {
    check(s);
    const double g = s.scores[s.gold_index];
    std::size_t rank = 1;
    for (std::size_t j = 0; j < s.scores.size(); ++j) {
        if (s.scores[j] > g || (s.scores[j] == g && j < s.gold_index)) ++rank;
    }
    return rank;
}

double recall_at_k(std::span<const ScoredExample> batch, std::size_t k) {
    require_batch(batch);
    if (k == 0) throw Error(ErrorCode::ConfigInvalid, "recall_at_k needs k >= 1");
    std::size_t hits = 0;
    for (const auto& s : batch) hits += rank_of_gold(s) <= k;
    return static_cast<double>(hits) / static_cast<double>(batch.size());
}

double mean_reciprocal_rank(std::span<const ScoredExample> batch) {
    require_batch(batch);
    double total = 0.0;
    for (const auto& s : batch) total += 1.0 / static_cast<double>(rank_of_gold(s));
    return total / static_cast<double>(batch.size());
}

double accuracy(std::span<const ScoredExample> batch) { return recall_at_k(batch, 1); }

MetricsReport aggregate_metrics(std::span<const ScoredExample> batch) {
    return {recall_at_k(batch, 1), recall_at_k(batch, 2), mean_reciprocal_rank(batch), accuracy(batch), batch.size()};
}

std::string MetricsReport::to_kv_line() const {
    char buf[160];
    std::snprintf(buf, sizeof buf, "n_examples=%zu r_at_1=%.6f r_at_2=%.6f mrr=%.6f accuracy=%.6f", n_examples, r_at_1,
                  r_at_2, mrr, accuracy);
    return buf;
}

std::string MetricsReport::to_table() const {
    std::ostringstream ss;
    char buf[64];
    ss << "metric      value\n";
    auto row = [&](const char* name, double v) {
        std::snprintf(buf, sizeof buf, "%-10s  %.4f\n", name, v);
        ss << buf;
    };
    row("R@1", r_at_1);
    row("R@2", r_at_2);
    row("MRR", mrr);
    row("Accuracy", accuracy);
    ss << "examples    " << n_examples << '\n';
    return ss.str();
}

std::vector<ScoredExample> score_examples(const StrudelModel& model, std::span<const ComprehensionExample> examples) {
    std::vector<ScoredExample> out;
    out.reserve(examples.size());
    for (const auto& ex : examples) out.push_back({ex.id, candidate_scores(model, ex), ex.gold_index});
    return out;
}

MetricsReport evaluate(const StrudelModel& model, std::span<const ComprehensionExample> examples) {
    if (examples.empty()) throw Error(ErrorCode::EmptyBatch, "nothing to evaluate");
    const auto scored = score_examples(model, examples);
    return aggregate_metrics(scored);
}

void write_scores(const std::filesystem::path& path, std::span<const ScoredExample> batch) {
    std::string out;
    for (const auto& s : batch) {
        out += json{{"id", s.example_id}, {"scores", s.scores}, {"gold_index", s.gold_index}}.dump();
        out += '\n';
    }
    write_file_atomic(path, out);
}

std::vector<ScoredExample> load_scores(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::vector<ScoredExample> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const json j = json::parse(line);
            ScoredExample s{j.at("id").get<std::string>(), j.at("scores").get<std::vector<double>>(),
                            j.at("gold_index").get<std::size_t>()};
            check(s);
            out.push_back(std::move(s));
        } catch (const json::exception& e) {
            throw Error(ErrorCode::MalformedRecord, path.string() + " line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace strudel

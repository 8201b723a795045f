#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "strudel/error.hpp"
#include "strudel/evaluation.hpp"
#include "strudel/rng.hpp"
#include "support.hpp"

using namespace strudel;

namespace {

// Independent oracle: full sort, then locate the gold candidate.
std::size_t sorted_rank(const ScoredExample& s) {
    std::vector<std::size_t> order(s.scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s.scores[a] > s.scores[b]; });
    return static_cast<std::size_t>(std::find(order.begin(), order.end(), s.gold_index) - order.begin()) + 1;
}

std::vector<ScoredExample> random_batch(Rng& rng, std::size_t n, bool coarse) {
    std::vector<ScoredExample> out;
    for (std::size_t i = 0; i < n; ++i) {
        ScoredExample s;
        s.example_id = "r" + std::to_string(i);
        const std::size_t c = 2 + rng.below(4);
        // Coarse scores force plenty of ties.
        for (std::size_t j = 0; j < c; ++j) s.scores.push_back(coarse ? double(rng.below(3)) : rng.uniform(-1, 1));
        s.gold_index = rng.below(c);
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace

TEST_SUITE("evaluation") {
    TEST_CASE("hand-worked ranks") {
        CHECK(rank_of_gold({"a", {0.1, 0.9, 0.3, 0.2}, 1}) == 1);
        CHECK(rank_of_gold({"b", {0.1, 0.9, 0.3, 0.2}, 2}) == 2);
        CHECK(rank_of_gold({"c", {0.1, 0.9, 0.3, 0.2}, 0}) == 4);
        CHECK(rank_of_gold({"d", {0.5, 0.5}, 1}) == 2);
        CHECK(rank_of_gold({"e", {0.5, 0.5}, 0}) == 1);
    }

    TEST_CASE("hand-worked batch metrics") {
        const std::vector<ScoredExample> batch{{"a", {0.1, 0.9, 0.3, 0.2}, 1}, {"b", {0.1, 0.9, 0.3, 0.2}, 2},
                                               {"c", {0.1, 0.9, 0.3, 0.2}, 0}, {"d", {3.0, 1.0, 2.0}, 2}};
        CHECK(recall_at_k(batch, 1) == doctest::Approx(0.25));
        CHECK(recall_at_k(batch, 2) == doctest::Approx(0.75));
        CHECK(mean_reciprocal_rank(batch) == doctest::Approx((1.0 + 0.5 + 0.25 + 0.5) / 4.0));
        const auto r = aggregate_metrics(batch);
        CHECK(r.accuracy == r.r_at_1);
        CHECK(r.n_examples == 4);
        CHECK(r.to_kv_line().rfind("n_examples=4 r_at_1=0.250000", 0) == 0);
    }

    TEST_CASE("metrics agree with a sorting oracle") {
        Rng rng(11);
        for (bool coarse : {false, true}) {
            const auto batch = random_batch(rng, 10000, coarse);
            double r1 = 0, r2 = 0, mrr = 0;
            for (const auto& s : batch) {
                const std::size_t rank = sorted_rank(s);
                REQUIRE(rank_of_gold(s) == rank);
                r1 += rank <= 1;
                r2 += rank <= 2;
                mrr += 1.0 / double(rank);
            }
            const double n = double(batch.size());
            CHECK(recall_at_k(batch, 1) == r1 / n);
            CHECK(recall_at_k(batch, 2) == r2 / n);
            CHECK(mean_reciprocal_rank(batch) == doctest::Approx(mrr / n).epsilon(1e-14));
        }
    }

    TEST_CASE("random four-way ranking has MRR near 25/48") {
        Rng rng(12);
        std::vector<ScoredExample> batch;
        for (int i = 0; i < 10000; ++i) {
            ScoredExample s{"x", {}, rng.below(4)};
            for (int j = 0; j < 4; ++j) s.scores.push_back(rng.uniform());
            batch.push_back(s);
        }
        CHECK(std::abs(mean_reciprocal_rank(batch) - 25.0 / 48.0) < 0.02);
    }

    TEST_CASE("recall is monotone in k and reaches 1") {
        Rng rng(13);
        const auto batch = random_batch(rng, 500, false);
        double prev = 0.0;
        for (std::size_t k = 1; k <= 5; ++k) {
            const double r = recall_at_k(batch, k);
            CHECK(r >= prev);
            prev = r;
        }
        CHECK(prev == 1.0);
        CHECK_THROWS_AS(recall_at_k(batch, 0), Error);
    }

    TEST_CASE("bad batches") {
        try {
            mean_reciprocal_rank({});
            FAIL("expected EmptyBatch");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::EmptyBatch);
        }
        const std::vector<ScoredExample> gold_out{{"g", {1.0, 2.0}, 2}};
        CHECK_THROWS_AS(accuracy(gold_out), Error);
    }

    TEST_CASE("scores file round trip") {
        testing::TempDir tmp;
        Rng rng(14);
        const auto batch = random_batch(rng, 20, false);
        write_scores(tmp.path() / "s.jsonl", batch);
        const auto back = load_scores(tmp.path() / "s.jsonl");
        REQUIRE(back.size() == batch.size());
        for (std::size_t i = 0; i < batch.size(); ++i) {
            CHECK(back[i].example_id == batch[i].example_id);
            CHECK(back[i].scores == batch[i].scores);
            CHECK(back[i].gold_index == batch[i].gold_index);
        }
        CHECK_THROWS_AS(load_scores(tmp.write("bad.jsonl", "{\"id\": 3}\n")), Error);
    }

    TEST_CASE("evaluate matches score_examples") {
        ModelConfig cfg;
        cfg.encoder.dim = 8;
        cfg.encoder.layers = 1;
        cfg.gat = GatConfig::for_encoder_dim(8);
        cfg.gat.layers = 1;
        const auto model = StrudelModel::create(cfg, 1);
        const auto examples = load_examples(testing::fixture("examples_qa.jsonl"), TaskKind::QuestionAnswering);
        const auto scored = score_examples(model, examples);
        REQUIRE(scored.size() == examples.size());
        CHECK(scored[0].scores.size() == 3);
        const auto r = evaluate(model, examples);
        CHECK(r.mrr == mean_reciprocal_rank(scored));
        CHECK(r.n_examples == examples.size());
    }
}

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "strudel/error.hpp"
#include "strudel/reasoner.hpp"
#include "strudel/rng.hpp"
#include "support.hpp"

using namespace strudel;

namespace {

Var random_const(Rng& rng, std::size_t r, std::size_t c) {
    Matrix m(r, c);
    for (double& v : m.data()) v = rng.uniform(-1.0, 1.0);
    return Var::constant(std::move(m));
}

GatConfig small_config(std::size_t layers) {
    GatConfig cfg;
    cfg.layers = layers;
    cfg.node_dim = 4;
    cfg.attention_heads = 2;
    cfg.relation_embed_dim = 3;
    return cfg;
}

double leaky(double x) { return x > 0.0 ? x : kAttentionSlope * x; }

}  // namespace

TEST_SUITE("reasoner") {
    TEST_CASE("config validation") {
        GatConfig cfg = small_config(1);
        CHECK_NOTHROW(cfg.validate());
        cfg.attention_heads = 3;
        CHECK_THROWS_AS(cfg.validate(), Error);
        cfg.attention_heads = 0;
        CHECK_THROWS_AS(cfg.validate(), Error);
        const GatConfig derived = GatConfig::for_encoder_dim(16);
        CHECK(derived.node_dim == 8);
        CHECK(derived.relation_embed_dim == 4);
    }

    TEST_CASE("zero layers is the identity") {
        Rng rng(1);
        const GatConfig cfg = small_config(0);
        const auto params = ReasonerParams::random(6, cfg, rng);
        const Var states = random_const(rng, kNodeCount, 4);
        const auto edges = directed_edges(joint_graph_edges());
        CHECK(gat_propagate(states, edges, params, cfg).value() == states.value());
    }

    TEST_CASE("attention weights match a direct computation and sum to one") {
        Rng rng(2);
        const GatConfig cfg = small_config(1);
        const auto params = ReasonerParams::random(6, cfg, rng);
        const Var states = random_const(rng, kNodeCount, 4);
        const auto edges = directed_edges(joint_graph_edges());
        AttentionTrace trace;
        gat_propagate(states, edges, params, cfg, &trace);
        REQUIRE(trace.weights.size() == 1);
        REQUIRE(trace.weights[0].size() == 2);

        for (std::size_t h = 0; h < 2; ++h) {
            const GatHeadParams& hp = params.layers[0].heads[h];
            const Matrix z = matmul(states, hp.w).value();
            const Matrix rel = matmul(params.relation_embed, hp.a_rel).value();
            auto proj = [&](std::size_t node, const Var& a) {
                double s = 0.0;
                for (std::size_t c = 0; c < z.cols(); ++c) s += z(node, c) * a.value()[c];
                return s;
            };
            std::vector<double> expect(edges.size());
            std::vector<double> denom(kNodeCount, 0.0);
            for (std::size_t e = 0; e < edges.size(); ++e) {
                const auto& de = edges[e];
                expect[e] = std::exp(leaky(proj(de.dst, hp.a_dst) + proj(de.src, hp.a_src) + rel[de.rel]));
                denom[de.dst] += expect[e];
            }
            std::vector<double> sums(kNodeCount, 0.0);
            for (std::size_t e = 0; e < edges.size(); ++e) {
                CHECK(trace.weights[0][h][e] == doctest::Approx(expect[e] / denom[edges[e].dst]).epsilon(1e-12));
                sums[edges[e].dst] += trace.weights[0][h][e];
            }
            for (double s : sums) CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
        }
    }

    TEST_CASE("propagation is equivariant under node relabelling") {
        Rng rng(3);
        const GatConfig cfg = small_config(2);
        const auto params = ReasonerParams::random(6, cfg, rng);
        const Var states = random_const(rng, kNodeCount, 4);
        const auto edges = directed_edges(joint_graph_edges());
        const Matrix base = gat_propagate(states, edges, params, cfg).value();

        std::vector<std::size_t> perm(kNodeCount);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), std::mt19937(7));
        Matrix moved(kNodeCount, 4);
        for (std::size_t i = 0; i < kNodeCount; ++i) {
            for (std::size_t c = 0; c < 4; ++c) moved(perm[i], c) = states.value()(i, c);
        }
        std::vector<DirectedEdge> moved_edges;
        for (const auto& e : edges) moved_edges.push_back({perm[e.dst], perm[e.src], e.rel});
        const Matrix out = gat_propagate(Var::constant(moved), moved_edges, params, cfg).value();
        for (std::size_t i = 0; i < kNodeCount; ++i) {
            for (std::size_t c = 0; c < 4; ++c) CHECK(out(perm[i], c) == doctest::Approx(base(i, c)).epsilon(1e-12));
        }
    }

    TEST_CASE("nodes without incoming edges receive no message") {
        Rng rng(4);
        const Var z = random_const(rng, 3, 2);
        const Var s = random_const(rng, 3, 1);
        const Var rel = random_const(rng, kRelationCount, 1);
        const std::vector<DirectedEdge> edges{{0, 1, 0}, {0, 2, 1}};
        const Matrix out = edge_attention(z, s, s, rel, edges, kAttentionSlope).value();
        CHECK(out(1, 0) == 0.0);
        CHECK(out(2, 1) == 0.0);
        const std::vector<DirectedEdge> bad{{0, 5, 0}};
        try {
            edge_attention(z, s, s, rel, bad, kAttentionSlope);
            FAIL("expected IndexOutOfRange");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::IndexOutOfRange);
        }
    }

    TEST_CASE("projection shapes") {
        Rng rng(5);
        const auto params = ReasonerParams::random(6, small_config(1), rng);
        StrudelEmbeddingSet embs;
        for (auto& v : embs.vectors) v = random_const(rng, 1, 6);
        const auto nodes = project_nodes(params, random_const(rng, 1, 6), random_const(rng, 1, 6),
                                         Var::constant(Matrix(1, 6)), embs);
        for (const Var& v : nodes) CHECK(v.cols() == 4);
        CHECK(nodes[node_index(NodeKind::Speaker2)].value() == Matrix(1, 4));
        embs.vectors[0] = random_const(rng, 1, 5);
        CHECK_THROWS_AS(project_nodes(params, random_const(rng, 1, 6), random_const(rng, 1, 6),
                                      random_const(rng, 1, 6), embs),
                        Error);
    }

    TEST_CASE("readout widths") {
        Rng rng(6);
        const auto graph_params = ReasonerParams::random(6, small_config(1), rng, ReadoutMode::Graph);
        const auto ctx_params = ReasonerParams::random(6, small_config(1), rng, ReadoutMode::ContextOnly);
        CHECK(graph_params.readout_width() == 14);
        CHECK(ctx_params.readout_width() == 6);
        CHECK(readout_context_only(ctx_params, random_const(rng, 1, 6)).value().size() == 1);
        CHECK_THROWS_AS(readout_context_only(graph_params, random_const(rng, 1, 6)), Error);
    }

    TEST_CASE("softmax and cross entropy") {
        const std::vector<double> equal(4, 0.3);
        const auto dist = softmax(equal);
        for (double p : dist) CHECK(p == doctest::Approx(0.25));
        CHECK(cross_entropy_loss(dist, 2) == doctest::Approx(std::log(4.0)));
        const auto big = softmax(std::vector<double>{1000.0, 0.0});
        CHECK(big[0] == doctest::Approx(1.0));
        CHECK(std::isfinite(big[1]));
        try {
            cross_entropy_loss(dist, 4);
            FAIL("expected IndexOutOfRange");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::IndexOutOfRange);
        }
    }

    TEST_CASE("reasoner gradients match finite differences") {
        Rng rng(8);
        const GatConfig cfg = small_config(2);
        const auto params = ReasonerParams::random(6, cfg, rng);
        StrudelEmbeddingSet embs;
        for (auto& v : embs.vectors) v = random_const(rng, 1, 6);
        const Var ctx = random_const(rng, 1, 6), s1 = random_const(rng, 1, 6), s2 = random_const(rng, 1, 6);
        auto loss = [&] {
            const auto nodes = project_nodes(params, ctx, s1, s2, embs);
            const DialogueSemanticGraph g(nodes, joint_graph_edges());
            return readout(params, ctx, gat_forward(g, params, cfg));
        };
        const auto res = testing::check_gradients(loss, params.parameters(), 6);
        INFO("worst at " << res.worst_at);
        CHECK(res.worst < 1e-4);
    }
}

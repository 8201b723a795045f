#include <doctest.h>

#include <map>
#include <set>

#include "strudel/error.hpp"
#include "strudel/graph.hpp"
#include "strudel/rng.hpp"
#include "support.hpp"

using namespace strudel;

namespace {

Var random_row(Rng& rng, std::size_t dim) {
    Matrix m(1, dim);
    for (double& v : m.data()) v = rng.uniform(-2.0, 2.0);
    return Var::constant(std::move(m));
}

DialogueSemanticGraph random_graph(Rng& rng, std::size_t dim) {
    StrudelEmbeddingSet embs;
    for (auto& v : embs.vectors) v = random_row(rng, dim);
    return build_graph(random_row(rng, dim), random_row(rng, dim), random_row(rng, dim), embs);
}

}  // namespace

TEST_SUITE("graph") {
    TEST_CASE("joint graph shape") {
        Rng rng(1);
        const auto g = random_graph(rng, 6);
        CHECK(g.edges().size() == 21);
        CHECK(g.dim() == 6);
        CHECK(g.degree(NodeKind::Context) == 9);
        CHECK(g.degree(NodeKind::Speaker1) == 7);
        CHECK(g.degree(NodeKind::Speaker2) == 7);
        CHECK(g.degree(NodeKind::TaskIntentionS1) == 2);
        CHECK(g.degree(NodeKind::TaskIntentionS2) == 2);
        for (NodeKind n : {NodeKind::Relationship, NodeKind::PurposeTheme, NodeKind::ProblemDisagreement,
                           NodeKind::Solution, NodeKind::ConclusionAgreement}) {
            CHECK(g.degree(n) == 3);
        }
    }

    TEST_CASE("relation counts and no duplicates or self loops") {
        std::map<RelationType, int> counts;
        std::set<std::pair<NodeKind, NodeKind>> pairs;
        for (const Edge& e : joint_graph_edges()) {
            ++counts[e.rel];
            CHECK(e.src != e.dst);
            const auto key = std::minmax(e.src, e.dst);
            CHECK(pairs.insert(key).second);
        }
        for (std::size_t r = 0; r + 1 < kRelationCount; ++r) CHECK(counts[static_cast<RelationType>(r)] == 2);
        CHECK(counts[RelationType::ContextLink] == 9);
    }

    TEST_CASE("intention edges go to the matching speaker") {
        for (const Edge& e : joint_graph_edges()) {
            if (e.rel != RelationType::WithIntention) continue;
            CHECK(((e.src == NodeKind::Speaker1 && e.dst == NodeKind::TaskIntentionS1) ||
                   (e.src == NodeKind::Speaker2 && e.dst == NodeKind::TaskIntentionS2)));
        }
    }

    TEST_CASE("random features never change the topology") {
        Rng rng(2);
        const std::string reference = random_graph(rng, 4).to_edge_list();
        for (int i = 0; i < 1000; ++i) {
            const auto g = random_graph(rng, 4);
            REQUIRE(g.edges() == joint_graph_edges());
            REQUIRE(g.to_edge_list() == reference);
        }
    }

    TEST_CASE("features are placed by role") {
        Rng rng(3);
        StrudelEmbeddingSet embs;
        for (auto& v : embs.vectors) v = random_row(rng, 4);
        const Var c = random_row(rng, 4), s1 = random_row(rng, 4), s2 = random_row(rng, 4);
        const auto g = build_graph(c, s1, s2, embs);
        CHECK(g.feature(NodeKind::Context).value() == c.value());
        CHECK(g.feature(NodeKind::Speaker2).value() == s2.value());
        for (EntryKind k : kAllEntryKinds) CHECK(g.feature(entry_node(k)).value() == embs[k].value());
    }

    TEST_CASE("mismatched widths raise") {
        Rng rng(4);
        StrudelEmbeddingSet embs;
        for (auto& v : embs.vectors) v = random_row(rng, 4);
        embs.vectors[3] = random_row(rng, 5);
        try {
            build_graph(random_row(rng, 4), random_row(rng, 4), random_row(rng, 4), embs);
            FAIL("expected DimMismatch");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::DimMismatch);
        }
    }

    TEST_CASE("edge list format") {
        Rng rng(5);
        const std::string text = random_graph(rng, 2).to_edge_list();
        CHECK(text.rfind("node context\nnode speaker1\n", 0) == 0);
        CHECK(text.find("edge speaker1 with_intention task_intention_s1\n") != std::string::npos);
        CHECK(text.find("edge context context_link conclusion_agreement\n") != std::string::npos);
        for (std::size_t i = 0; i < kNodeCount; ++i) CHECK(node_from_name(node_name(node_at(i))) == node_at(i));
    }

    TEST_CASE("speaker sentences need a frozen encoder") {
        const EncoderHandle enc = toy_encoder(1, 4);
        CHECK_THROWS_AS(speaker_embeddings(enc), Error);
        const auto [a, b] = speaker_embeddings(freeze_snapshot(enc));
        CHECK(a.cols() == 4);
        CHECK(a.value() != b.value());
    }
}

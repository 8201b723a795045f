#include "strudel/graph.hpp"

#include <sstream>

#include "strudel/error.hpp"

namespace strudel {

std::string_view node_name(NodeKind n) {
    switch (n) {
        case NodeKind::Context: return "context";
        case NodeKind::Speaker1: return "speaker1";
        case NodeKind::Speaker2: return "speaker2";
        default: return entry_key(static_cast<EntryKind>(node_index(n) - 3));
    }
}

std::optional<NodeKind> node_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kNodeCount; ++i) {
        if (node_name(node_at(i)) == name) return node_at(i);
    }
    return std::nullopt;
}

std::string_view relation_name(RelationType r) {
    switch (r) {
        case RelationType::HasRelationship: return "has_relationship";
        case RelationType::SharesTheme: return "shares_theme";
        case RelationType::WithIntention: return "with_intention";
        case RelationType::FacesProblem: return "faces_problem";
        case RelationType::FindsSolution: return "finds_solution";
        case RelationType::ReachesConclusion: return "reaches_conclusion";
        case RelationType::ContextLink: return "context_link";
    }
    return "";
}

const std::vector<Edge>& joint_graph_edges() {
    static const std::vector<Edge> edges = [] {
        using N = NodeKind;
        using R = RelationType;
        std::vector<Edge> e;
        for (N s : {N::Speaker1, N::Speaker2}) {
            e.push_back({s, N::Relationship, R::HasRelationship});
            e.push_back({s, N::PurposeTheme, R::SharesTheme});
            e.push_back({s, s == N::Speaker1 ? N::TaskIntentionS1 : N::TaskIntentionS2, R::WithIntention});
            e.push_back({s, N::ProblemDisagreement, R::FacesProblem});
            e.push_back({s, N::Solution, R::FindsSolution});
            e.push_back({s, N::ConclusionAgreement, R::ReachesConclusion});
        }
        for (std::size_t i = 1; i < kNodeCount; ++i) e.push_back({N::Context, node_at(i), R::ContextLink});
        return e;
    }();
    return edges;
}

DialogueSemanticGraph::DialogueSemanticGraph(std::array<Var, kNodeCount> features, std::vector<Edge> edges)
    : features_(std::move(features)), edges_(std::move(edges)) {
    const std::size_t d = features_[0].cols();
    for (const Var& f : features_) {
        if (f.rows() != 1 || f.cols() != d) throw Error(ErrorCode::DimMismatch, "graph node features differ in shape");
    }
}

std::size_t DialogueSemanticGraph::degree(NodeKind n) const {
    std::size_t deg = 0;
    for (const Edge& e : edges_) deg += (e.src == n) + (e.dst == n);
    return deg;
}

std::string DialogueSemanticGraph::to_edge_list() const {
    std::ostringstream ss;
    for (std::size_t i = 0; i < kNodeCount; ++i) ss << "node " << node_name(node_at(i)) << '\n';
    for (const Edge& e : edges_) {
        ss << "edge " << node_name(e.src) << ' ' << relation_name(e.rel) << ' ' << node_name(e.dst) << '\n';
    }
    return ss.str();
}

std::pair<Var, Var> speaker_embeddings(const EncoderHandle& frozen) {
    if (!frozen.frozen()) throw Error(ErrorCode::FrozenRequired, "speaker embeddings need a frozen encoder");
    return {encode(frozen, build_text_query(std::string(kFirstSpeakerSentence))).cls,
            encode(frozen, build_text_query(std::string(kSecondSpeakerSentence))).cls};
}

DialogueSemanticGraph build_graph(const Var& v_context, const Var& v_s1, const Var& v_s2,
                                  const StrudelEmbeddingSet& embs) {
    std::array<Var, kNodeCount> features;
    features[node_index(NodeKind::Context)] = v_context;
    features[node_index(NodeKind::Speaker1)] = v_s1;
    features[node_index(NodeKind::Speaker2)] = v_s2;
    for (EntryKind k : kAllEntryKinds) features[node_index(entry_node(k))] = embs[k];
    for (const Var& f : features) {
        if (!f.defined()) throw Error(ErrorCode::DimMismatch, "missing node feature");
    }
    return DialogueSemanticGraph(std::move(features), joint_graph_edges());
}

}  // namespace strudel

#pragma once

// Dialogue semantic graph: two speaker nodes and seven entry nodes joined by
// six typed relations, plus a context node linked to all nine (the joint
// graph). Topology is fixed; only node features vary between dialogues.

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "strudel/heads.hpp"

namespace strudel {

enum class NodeKind : std::size_t {
    Context,
    Speaker1,
    Speaker2,
    Relationship,
    PurposeTheme,
    TaskIntentionS1,
    TaskIntentionS2,
    ProblemDisagreement,
    Solution,
    ConclusionAgreement,
};

inline constexpr std::size_t kNodeCount = 10;

constexpr std::size_t node_index(NodeKind n) { return static_cast<std::size_t>(n); }
constexpr NodeKind node_at(std::size_t i) { return static_cast<NodeKind>(i); }
constexpr NodeKind entry_node(EntryKind kind) { return node_at(3 + entry_index(kind)); }
std::string_view node_name(NodeKind n);
std::optional<NodeKind> node_from_name(std::string_view name);

enum class RelationType : std::size_t {
    HasRelationship,
    SharesTheme,
    WithIntention,
    FacesProblem,
    FindsSolution,
    ReachesConclusion,
    ContextLink,
};

inline constexpr std::size_t kRelationCount = 7;

constexpr std::size_t relation_index(RelationType r) { return static_cast<std::size_t>(r); }
std::string_view relation_name(RelationType r);

// Undirected; stored once.
struct Edge {
    NodeKind src;
    NodeKind dst;
    RelationType rel;

    friend bool operator==(const Edge&, const Edge&) = default;
};

// The 21 edges of the joint graph: 12 speaker-entry relations then 9 context links.
const std::vector<Edge>& joint_graph_edges();

class DialogueSemanticGraph {
public:
    DialogueSemanticGraph(std::array<Var, kNodeCount> features, std::vector<Edge> edges);

    const Var& feature(NodeKind n) const { return features_[node_index(n)]; }
    const std::array<Var, kNodeCount>& features() const noexcept { return features_; }
    const std::vector<Edge>& edges() const noexcept { return edges_; }
    std::size_t dim() const { return features_[0].cols(); }
    std::size_t degree(NodeKind n) const;

    // "node <name>" lines followed by "edge <src> <relation> <dst>" lines.
    std::string to_edge_list() const;

private:
    std::array<Var, kNodeCount> features_;
    std::vector<Edge> edges_;
};

// Frozen [CLS] vectors of the two fixed speaker sentences.
std::pair<Var, Var> speaker_embeddings(const EncoderHandle& frozen);

inline constexpr std::string_view kFirstSpeakerSentence = "The first speaker of this dialogue.";
inline constexpr std::string_view kSecondSpeakerSentence = "The second speaker of this dialogue.";

DialogueSemanticGraph build_graph(const Var& v_context, const Var& v_s1, const Var& v_s2,
                                  const StrudelEmbeddingSet& embs);

}  // namespace strudel

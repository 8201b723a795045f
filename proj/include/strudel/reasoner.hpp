#pragma once

// Relation-aware graph attention over the joint graph.
//
// Per layer and head h, with Z = H W_h:
//   e_ij  = LeakyReLU(a_dst . z_i + a_src . z_j + a_rel . r_(rel ij))
//   alpha = softmax of e_ij over the neighbours j of i
//   H'    = LN(H + tanh(concat_h sum_j alpha_ij z_j))
// The relation term is the attention vector applied to the concatenation
// [z_i ; z_j ; r], split into its three blocks.

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "strudel/graph.hpp"

namespace strudel {

struct GatConfig {
    std::size_t layers = 3;
    std::size_t node_dim = 8;
    std::size_t attention_heads = 2;
    std::size_t relation_embed_dim = 4;

    // Throws ConfigInvalid.
    void validate() const;
    std::size_t head_dim() const { return node_dim / attention_heads; }

    // Defaults derived from the encoder width: node_dim = dim/2, relation dim = node_dim/2.
    static GatConfig for_encoder_dim(std::size_t encoder_dim);

    friend bool operator==(const GatConfig&, const GatConfig&) = default;
};

inline constexpr double kAttentionSlope = 0.2;

struct GatHeadParams {
    Var w;      // node_dim x head_dim
    Var a_src;  // head_dim x 1
    Var a_dst;  // head_dim x 1
    Var a_rel;  // relation_embed_dim x 1
};

struct GatLayerParams {
    std::vector<GatHeadParams> heads;
};

enum class ReadoutMode { Graph, ContextOnly };

struct ReasonerParams {
    Var proj_context;  // encoder_dim x node_dim, bias-free
    Var proj_speaker;
    Var proj_entry;    // shared by the seven entry nodes
    Var relation_embed;  // kRelationCount x relation_embed_dim
    std::vector<GatLayerParams> layers;
    Var readout_w1;  // readout_width x node_dim
    Var readout_b1;
    Var readout_w2;  // node_dim x 1
    Var readout_b2;
    ReadoutMode mode = ReadoutMode::Graph;

    static ReasonerParams random(std::size_t encoder_dim, const GatConfig& cfg, Rng& rng,
                                 ReadoutMode mode = ReadoutMode::Graph);
    // Graph mode: encoder_dim + 2 node_dim; context-only: encoder_dim.
    std::size_t readout_width() const { return readout_w1.rows(); }
    std::size_t encoder_dim() const { return proj_context.rows(); }
    std::vector<NamedParameter> parameters() const;
    ReasonerParams clone() const;
};

// Projects every node role to node_dim.
std::array<Var, kNodeCount> project_nodes(const ReasonerParams& params, const Var& v_context, const Var& v_s1,
                                          const Var& v_s2, const StrudelEmbeddingSet& embs);
DialogueSemanticGraph project_graph(const ReasonerParams& params, const DialogueSemanticGraph& graph);

// Message i <- j along an edge of type rel.
struct DirectedEdge {
    std::size_t dst;
    std::size_t src;
    std::size_t rel;
};

std::vector<DirectedEdge> directed_edges(std::span<const Edge> edges);

// Attention weights recorded during a forward pass: weights[layer][head][e]
// belongs to directed edge e.
struct AttentionTrace {
    std::vector<DirectedEdge> edges;
    std::vector<std::vector<std::vector<double>>> weights;
};

// The fused edge-softmax aggregation of one head. z: n x d, s_src/s_dst:
// n x 1, rel_scores: kRelationCount x 1. Nodes without incoming edges get 0.
Var edge_attention(const Var& z, const Var& s_src, const Var& s_dst, const Var& rel_scores,
                   std::span<const DirectedEdge> edges, double slope, std::vector<double>* weights_out = nullptr);

// Message passing on stacked states (n x node_dim).
Var gat_propagate(const Var& states, std::span<const DirectedEdge> edges, const ReasonerParams& params,
                  const GatConfig& cfg, AttentionTrace* trace = nullptr);

// Runs cfg.layers rounds on a graph whose features are already node_dim wide.
std::array<Var, kNodeCount> gat_forward(const DialogueSemanticGraph& graph, const ReasonerParams& params,
                                        const GatConfig& cfg, AttentionTrace* trace = nullptr);

// [v_context ; final context state ; mean of the nine other final states] -> 1x1.
Var readout(const ReasonerParams& params, const Var& v_context, const std::array<Var, kNodeCount>& final_states);
// Context-only ablation readout.
Var readout_context_only(const ReasonerParams& params, const Var& v_context);

std::vector<double> softmax(std::span<const double> scores);
// -log(dist[gold]); throws IndexOutOfRange.
double cross_entropy_loss(std::span<const double> dist, std::size_t gold_index);

}  // namespace strudel

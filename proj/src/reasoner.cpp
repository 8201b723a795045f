#include "strudel/reasoner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "strudel/error.hpp"
#include "strudel/kernels.hpp"

namespace strudel {

void GatConfig::validate() const {
    if (node_dim == 0 || attention_heads == 0 || relation_embed_dim == 0) {
        throw Error(ErrorCode::ConfigInvalid, "gat dimensions and head count must be positive");
    }
    if (node_dim % attention_heads != 0) {
        throw Error(ErrorCode::ConfigInvalid, "gat node_dim must be divisible by attention_heads");
    }
}

GatConfig GatConfig::for_encoder_dim(std::size_t encoder_dim) {
    GatConfig cfg;
    cfg.node_dim = std::max<std::size_t>(2, encoder_dim / 2);
    cfg.attention_heads = cfg.node_dim % 2 == 0 ? 2 : 1;
    cfg.relation_embed_dim = std::max<std::size_t>(1, cfg.node_dim / 2);
    return cfg;
}

namespace {

Var uniform_param(Rng& rng, std::size_t rows, std::size_t cols, double bound) {
    Matrix m(rows, cols);
    for (double& v : m.data()) v = rng.uniform(-bound, bound);
    return Var::parameter(std::move(m));
}

double xavier(std::size_t fan_in, std::size_t fan_out) {
    return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

Var copy_param(const Var& v) { return Var::parameter(v.value()); }

}  // namespace

ReasonerParams ReasonerParams::random(std::size_t encoder_dim, const GatConfig& cfg, Rng& rng, ReadoutMode mode) {
    cfg.validate();
    const std::size_t nd = cfg.node_dim;
    const std::size_t dh = cfg.head_dim();
    ReasonerParams p;
    p.mode = mode;
    const double proj = xavier(encoder_dim, nd);
    p.proj_context = uniform_param(rng, encoder_dim, nd, proj);
    p.proj_speaker = uniform_param(rng, encoder_dim, nd, proj);
    p.proj_entry = uniform_param(rng, encoder_dim, nd, proj);
    p.relation_embed = uniform_param(rng, kRelationCount, cfg.relation_embed_dim, 0.5);
    for (std::size_t l = 0; l < cfg.layers; ++l) {
        GatLayerParams layer;
        for (std::size_t h = 0; h < cfg.attention_heads; ++h) {
            layer.heads.push_back({uniform_param(rng, nd, dh, xavier(nd, dh)), uniform_param(rng, dh, 1, xavier(dh, 1)),
                                   uniform_param(rng, dh, 1, xavier(dh, 1)),
                                   uniform_param(rng, cfg.relation_embed_dim, 1, xavier(cfg.relation_embed_dim, 1))});
        }
        p.layers.push_back(std::move(layer));
    }
    const std::size_t width = mode == ReadoutMode::Graph ? encoder_dim + 2 * nd : encoder_dim;
    p.readout_w1 = uniform_param(rng, width, nd, xavier(width, nd));
    p.readout_b1 = Var::parameter(Matrix(1, nd));
    p.readout_w2 = uniform_param(rng, nd, 1, xavier(nd, 1));
    p.readout_b2 = Var::parameter(Matrix(1, 1));
    return p;
}

std::vector<NamedParameter> ReasonerParams::parameters() const {
    std::vector<NamedParameter> out{{"proj_context", proj_context},
                                    {"proj_speaker", proj_speaker},
                                    {"proj_entry", proj_entry},
                                    {"relation_embed", relation_embed}};
    for (std::size_t l = 0; l < layers.size(); ++l) {
        for (std::size_t h = 0; h < layers[l].heads.size(); ++h) {
            const std::string p = "gat" + std::to_string(l) + ".head" + std::to_string(h) + ".";
            const GatHeadParams& hp = layers[l].heads[h];
            out.push_back({p + "w", hp.w});
            out.push_back({p + "a_src", hp.a_src});
            out.push_back({p + "a_dst", hp.a_dst});
            out.push_back({p + "a_rel", hp.a_rel});
        }
    }
    out.push_back({"readout_w1", readout_w1});
    out.push_back({"readout_b1", readout_b1});
    out.push_back({"readout_w2", readout_w2});
    out.push_back({"readout_b2", readout_b2});
    return out;
}

ReasonerParams ReasonerParams::clone() const {
    ReasonerParams p;
    p.mode = mode;
    p.proj_context = copy_param(proj_context);
    p.proj_speaker = copy_param(proj_speaker);
    p.proj_entry = copy_param(proj_entry);
    p.relation_embed = copy_param(relation_embed);
    for (const GatLayerParams& l : layers) {
        GatLayerParams copy;
        for (const GatHeadParams& h : l.heads) {
            copy.heads.push_back({copy_param(h.w), copy_param(h.a_src), copy_param(h.a_dst), copy_param(h.a_rel)});
        }
        p.layers.push_back(std::move(copy));
    }
    p.readout_w1 = copy_param(readout_w1);
    p.readout_b1 = copy_param(readout_b1);
    p.readout_w2 = copy_param(readout_w2);
    p.readout_b2 = copy_param(readout_b2);
    return p;
}

std::array<Var, kNodeCount> project_nodes(const ReasonerParams& params, const Var& v_context, const Var& v_s1,
                                          const Var& v_s2, const StrudelEmbeddingSet& embs) {
    const std::size_t d = params.encoder_dim();
    auto check = [d](const Var& v) {
        if (!v.defined() || v.rows() != 1 || v.cols() != d) {
            throw Error(ErrorCode::DimMismatch, "node input is not 1 x encoder_dim");
        }
        return v;
    };
    std::array<Var, kNodeCount> out;
    out[node_index(NodeKind::Context)] = matmul(check(v_context), params.proj_context);
    out[node_index(NodeKind::Speaker1)] = matmul(check(v_s1), params.proj_speaker);
    out[node_index(NodeKind::Speaker2)] = matmul(check(v_s2), params.proj_speaker);
    for (EntryKind k : kAllEntryKinds) out[node_index(entry_node(k))] = matmul(check(embs[k]), params.proj_entry);
    return out;
}

DialogueSemanticGraph project_graph(const ReasonerParams& params, const DialogueSemanticGraph& graph) {
    StrudelEmbeddingSet embs;
    for (EntryKind k : kAllEntryKinds) embs.vectors[entry_index(k)] = graph.feature(entry_node(k));
    return DialogueSemanticGraph(project_nodes(params, graph.feature(NodeKind::Context),
                                               graph.feature(NodeKind::Speaker1), graph.feature(NodeKind::Speaker2),
                                               embs),
                                 graph.edges());
}

std::vector<DirectedEdge> directed_edges(std::span<const Edge> edges) {
    std::vector<DirectedEdge> out;
    out.reserve(edges.size() * 2);
    for (const Edge& e : edges) {
        out.push_back({node_index(e.dst), node_index(e.src), relation_index(e.rel)});
        out.push_back({node_index(e.src), node_index(e.dst), relation_index(e.rel)});
    }
    return out;
}

Var edge_attention(const Var& z, const Var& s_src, const Var& s_dst, const Var& rel_scores,
                   std::span<const DirectedEdge> edges, double slope, std::vector<double>* weights_out) {
    const Matrix& Z = z.value();
    const std::size_t n = Z.rows();
    const std::size_t d = Z.cols();
    if (s_src.rows() != n || s_dst.rows() != n || s_src.cols() != 1 || s_dst.cols() != 1 || rel_scores.cols() != 1) {
        throw Error(ErrorCode::DimMismatch, "edge_attention score shapes");
    }
    const std::size_t m = edges.size();
    std::vector<double> pre(m), alpha(m);
    std::vector<double> row_max(n, -std::numeric_limits<double>::infinity()), row_sum(n, 0.0);
    for (std::size_t e = 0; e < m; ++e) {
        const DirectedEdge& de = edges[e];
        if (de.dst >= n || de.src >= n || de.rel >= rel_scores.rows()) {
            throw Error(ErrorCode::IndexOutOfRange, "edge endpoint or relation out of range");
        }
        pre[e] = s_dst.value()[de.dst] + s_src.value()[de.src] + rel_scores.value()[de.rel];
        alpha[e] = pre[e] > 0.0 ? pre[e] : slope * pre[e];
        row_max[de.dst] = std::max(row_max[de.dst], alpha[e]);
    }
    for (std::size_t e = 0; e < m; ++e) {
        alpha[e] = std::exp(alpha[e] - row_max[edges[e].dst]);
        row_sum[edges[e].dst] += alpha[e];
    }
    Matrix out(n, d);
    const auto& K = kernels::active();
    for (std::size_t e = 0; e < m; ++e) {
        alpha[e] /= row_sum[edges[e].dst];
        K.axpy(alpha[e], Z.row(edges[e].src).data(), out.row(edges[e].dst).data(), d);
    }
    if (weights_out) *weights_out = alpha;

    std::vector<DirectedEdge> edge_copy(edges.begin(), edges.end());
    return make_op(
        std::move(out), {z, s_src, s_dst, rel_scores},
        [z, edge_copy = std::move(edge_copy), pre = std::move(pre), alpha = std::move(alpha), slope, n, d](
            const Matrix&, const Matrix& g, std::span<Matrix* const> pg) {
            const auto& K = kernels::active();
            const Matrix& Z = z.value();
            const std::size_t m = edge_copy.size();
            std::vector<double> dalpha(m);
            std::vector<double> inner(n, 0.0);
            for (std::size_t e = 0; e < m; ++e) {
                const DirectedEdge& de = edge_copy[e];
                dalpha[e] = K.dot(g.row(de.dst).data(), Z.row(de.src).data(), d);
                inner[de.dst] += alpha[e] * dalpha[e];
                if (pg[0]) K.axpy(alpha[e], g.row(de.dst).data(), pg[0]->row(de.src).data(), d);
            }
            for (std::size_t e = 0; e < m; ++e) {
                const DirectedEdge& de = edge_copy[e];
                const double dlogit = alpha[e] * (dalpha[e] - inner[de.dst]);
                const double dpre = dlogit * (pre[e] > 0.0 ? 1.0 : slope);
                if (pg[1]) (*pg[1])[de.src] += dpre;
                if (pg[2]) (*pg[2])[de.dst] += dpre;
                if (pg[3]) (*pg[3])[de.rel] += dpre;
            }
        });
}

Var gat_propagate(const Var& states, std::span<const DirectedEdge> edges, const ReasonerParams& params,
                  const GatConfig& cfg, AttentionTrace* trace) {
    if (states.cols() != cfg.node_dim) throw Error(ErrorCode::DimMismatch, "gat states are not node_dim wide");
    if (params.layers.size() < cfg.layers) throw Error(ErrorCode::DimMismatch, "fewer gat layers than configured");
    if (trace) {
        trace->edges.assign(edges.begin(), edges.end());
        trace->weights.assign(cfg.layers, {});
    }
    Var h = states;
    for (std::size_t l = 0; l < cfg.layers; ++l) {
        const GatLayerParams& layer = params.layers[l];
        std::vector<Var> heads;
        for (const GatHeadParams& hp : layer.heads) {
            Var z = matmul(h, hp.w);
            Var rel = matmul(params.relation_embed, hp.a_rel);
            std::vector<double> weights;
            heads.push_back(edge_attention(z, matmul(z, hp.a_src), matmul(z, hp.a_dst), rel, edges, kAttentionSlope,
                                           trace ? &weights : nullptr));
            if (trace) trace->weights[l].push_back(std::move(weights));
        }
        h = layer_norm_rows(add(h, tanh(concat_cols(heads))));
    }
    return h;
}

std::array<Var, kNodeCount> gat_forward(const DialogueSemanticGraph& graph, const ReasonerParams& params,
                                        const GatConfig& cfg, AttentionTrace* trace) {
    const auto edges = directed_edges(graph.edges());
    Var out = gat_propagate(stack_rows(graph.features()), edges, params, cfg, trace);
    std::array<Var, kNodeCount> states;
    for (std::size_t i = 0; i < kNodeCount; ++i) states[i] = slice_row(out, i);
    return states;
}

namespace {

Var mlp_readout(const ReasonerParams& params, const Var& input) {
    if (input.cols() != params.readout_width()) throw Error(ErrorCode::DimMismatch, "readout input width");
    return add(matmul(tanh(add(matmul(input, params.readout_w1), params.readout_b1)), params.readout_w2),
               params.readout_b2);
}

}  // namespace

Var readout(const ReasonerParams& params, const Var& v_context, const std::array<Var, kNodeCount>& final_states) {
    std::vector<Var> semantic(final_states.begin() + 1, final_states.end());
    const Var parts[] = {v_context, final_states[node_index(NodeKind::Context)], mean_rows(stack_rows(semantic))};
    return mlp_readout(params, concat_cols(parts));
}

Var readout_context_only(const ReasonerParams& params, const Var& v_context) {
    return mlp_readout(params, v_context);
}

std::vector<double> softmax(std::span<const double> scores) {
    std::vector<double> out(scores.begin(), scores.end());
    if (out.empty()) return out;
    const double mx = *std::max_element(out.begin(), out.end());
    double total = 0.0;
    for (double& v : out) total += (v = std::exp(v - mx));
    for (double& v : out) v /= total;
    return out;
}

double cross_entropy_loss(std::span<const double> dist, std::size_t gold_index) {
    if (gold_index >= dist.size()) throw Error(ErrorCode::IndexOutOfRange, "gold index outside the distribution");
    return -std::log(dist[gold_index]);
}

}  // namespace strudel

#include "strudel/model.hpp"

#include <map>
#include <sstream>

#include <json.hpp>

#include "strudel/error.hpp"
#include "strudel/io.hpp"

namespace strudel {

using nlohmann::json;

namespace {

std::string_view readout_name(ReadoutMode m) { return m == ReadoutMode::Graph ? "graph" : "context_only"; }

ReadoutMode readout_from_name(const std::string& s) {
    if (s == "graph") return ReadoutMode::Graph;
    if (s == "context_only") return ReadoutMode::ContextOnly;
    throw Error(ErrorCode::ConfigInvalid, "unknown readout '" + s + "'");
}

json config_to_json(const ModelConfig& c) {
    return {{"encoder_backend", c.encoder.backend}, {"encoder_dim", c.encoder.dim},
            {"vocab_size", c.encoder.vocab_size},   {"encoder_layers", c.encoder.layers},
            {"max_seq_len", c.encoder.max_seq_len}, {"gat_layers", c.gat.layers},
            {"gat_node_dim", c.gat.node_dim},       {"gat_heads", c.gat.attention_heads},
            {"gat_relation_dim", c.gat.relation_embed_dim}, {"readout", readout_name(c.readout)}};
}

ModelConfig config_from_json(const json& j) {
    ModelConfig c;
    c.encoder.backend = j.at("encoder_backend").get<std::string>();
    c.encoder.dim = j.at("encoder_dim").get<std::size_t>();
    c.encoder.vocab_size = j.at("vocab_size").get<std::size_t>();
    c.encoder.layers = j.at("encoder_layers").get<std::size_t>();
    c.encoder.max_seq_len = j.at("max_seq_len").get<std::size_t>();
    c.gat.layers = j.at("gat_layers").get<std::size_t>();
    c.gat.node_dim = j.at("gat_node_dim").get<std::size_t>();
    c.gat.attention_heads = j.at("gat_heads").get<std::size_t>();
    c.gat.relation_embed_dim = j.at("gat_relation_dim").get<std::size_t>();
    c.readout = readout_from_name(j.at("readout").get<std::string>());
    return c;
}

json params_to_json(const std::vector<NamedParameter>& params) {
    json out = json::object();
    for (const auto& p : params) {
        const Matrix& m = p.var.value();
        out[p.name] = {{"rows", m.rows()}, {"cols", m.cols()},
                       {"data", std::vector<double>(m.data().begin(), m.data().end())}};
    }
    return out;
}

void params_from_json(const json& j, std::vector<NamedParameter> params, const std::string& section) {
    for (auto& p : params) {
        auto it = j.find(p.name);
        if (it == j.end()) throw Error(ErrorCode::ConfigMismatch, section + " parameter '" + p.name + "' missing");
        Matrix& m = p.var.mutable_value();
        const auto rows = it->at("rows").get<std::size_t>();
        const auto cols = it->at("cols").get<std::size_t>();
        auto data = it->at("data").get<std::vector<double>>();
        if (rows != m.rows() || cols != m.cols() || data.size() != m.size()) {
            throw Error(ErrorCode::ConfigMismatch, section + " parameter '" + p.name + "' has the wrong shape");
        }
        m = Matrix(rows, cols, std::move(data));
    }
}

std::vector<NamedParameter> prefixed(std::string_view prefix, std::vector<NamedParameter> params) {
    for (auto& p : params) p.name = std::string(prefix) + p.name;
    return params;
}

}  // namespace

std::string ModelConfig::canonical() const {
    std::ostringstream ss;
    ss << "backend=" << encoder.backend << ";dim=" << encoder.dim << ";vocab=" << encoder.vocab_size
       << ";encoder_layers=" << encoder.layers << ";max_seq_len=" << encoder.max_seq_len << ";gat_layers=" << gat.layers
       << ";node_dim=" << gat.node_dim << ";heads=" << gat.attention_heads << ";relation_dim=" << gat.relation_embed_dim
       << ";readout=" << readout_name(readout);
    return ss.str();
}

std::string ModelConfig::hash() const { return hex64(fnv1a64(canonical())); }

StrudelModel StrudelModel::create(const ModelConfig& cfg, std::uint64_t seed) {
    cfg.gat.validate();
    EncoderHandle enc = make_encoder(cfg.encoder, seed);
    Rng rng(seed ^ 0x6865616473ULL);
    EntryHeads heads = EntryHeads::random(enc.dim(), rng);
    ReasonerParams reasoner = ReasonerParams::random(enc.dim(), cfg.gat, rng, cfg.readout);
    EncoderHandle frozen = freeze_snapshot(enc);
    return StrudelModel(cfg, std::move(enc), std::move(frozen), std::move(heads), std::move(reasoner));
}

StrudelModel::StrudelModel(ModelConfig cfg, EncoderHandle encoder, EncoderHandle frozen, EntryHeads heads,
                           ReasonerParams reasoner)
    : cfg_(std::move(cfg)),
      encoder_(std::move(encoder)),
      frozen_(std::move(frozen)),
      heads_(std::move(heads)),
      reasoner_(std::move(reasoner)),
      targets_(std::make_shared<FrozenTextEmbedder>(frozen_)),
      speakers_(speaker_embeddings(frozen_)) {
    if (heads_.dim() != encoder_.dim() || reasoner_.encoder_dim() != encoder_.dim() || frozen_.dim() != encoder_.dim()) {
        throw Error(ErrorCode::DimMismatch, "model components disagree on the encoder dim");
    }
}

std::vector<NamedParameter> StrudelModel::trainable_parameters() const {
    std::vector<NamedParameter> out = prefixed("encoder.", encoder_.parameters());
    for (auto& p : prefixed("heads.", heads_.parameters())) out.push_back(std::move(p));
    for (auto& p : prefixed("reasoner.", reasoner_.parameters())) out.push_back(std::move(p));
    return out;
}

std::vector<NamedParameter> StrudelModel::frozen_parameters() const {
    return prefixed("frozen.", frozen_.parameters());
}

StrudelModel StrudelModel::clone() const {
    StrudelModel copy = *this;
    copy.encoder_ = EncoderHandle(std::shared_ptr<EncoderBackend>(encoder_.backend().clone(true)),
                                  EncoderMode::Trainable);
    copy.heads_ = heads_.clone();
    copy.reasoner_ = reasoner_.clone();
    return copy;
}

StrudelEmbeddingSet StrudelModel::strudel_embeddings(const Dialogue& d) const {
    return generate_strudel_embeddings(encoder_, heads_, d);
}

Var StrudelModel::candidate_scores(const Dialogue& d, const std::optional<std::string>& question,
                                   std::span<const std::string> candidates) const {
    if (candidates.empty()) throw Error(ErrorCode::EmptyInput, "no candidates to score");
    std::vector<Var> scores;
    if (reasoner_.mode == ReadoutMode::ContextOnly) {
        for (const std::string& a : candidates) {
            scores.push_back(readout_context_only(reasoner_, encode(encoder_, build_context_query(d, question, a)).cls));
        }
        return concat_cols(scores);
    }
    const StrudelEmbeddingSet embs = strudel_embeddings(d);
    // Speaker and entry projections do not depend on the candidate.
    const auto& [v_s1, v_s2] = speakers_;
    for (const std::string& a : candidates) {
        const Var v_context = encode(encoder_, build_context_query(d, question, a)).cls;
        const DialogueSemanticGraph graph(project_nodes(reasoner_, v_context, v_s1, v_s2, embs), joint_graph_edges());
        scores.push_back(readout(reasoner_, v_context, gat_forward(graph, reasoner_, cfg_.gat)));
    }
    return concat_cols(scores);
}

Var StrudelModel::example_loss(const ComprehensionExample& ex) const {
    return softmax_nll(candidate_scores(ex.dialogue, ex.question, ex.candidates), ex.gold_index);
}

Var StrudelModel::semantic_loss(const Dialogue& d, const StrudelAnnotation& ann) const {
    return semantic_matching_loss(strudel_embeddings(d), ann, *targets_);
}

double score_candidate(const StrudelModel& model, const Dialogue& d, const std::optional<std::string>& question,
                       const std::string& candidate) {
    return model.candidate_scores(d, question, std::span<const std::string>(&candidate, 1)).scalar();
}

std::vector<double> candidate_scores(const StrudelModel& model, const ComprehensionExample& ex) {
    const Var s = model.candidate_scores(ex.dialogue, ex.question, ex.candidates);
    return {s.value().data().begin(), s.value().data().end()};
}

std::vector<double> predict(const StrudelModel& model, const ComprehensionExample& ex) {
    return softmax(candidate_scores(model, ex));
}

std::size_t argmax(std::span<const double> values) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) best = i;
    }
    return best;
}

void save_checkpoint(const std::filesystem::path& path, const StrudelModel& model, const CheckpointMeta& meta) {
    const json j{{"format", "strudel-checkpoint/1"},
                 {"config_hash", model.config().hash()},
                 {"model_config", config_to_json(model.config())},
                 {"phase", meta.phase},
                 {"step", meta.step},
                 {"seed", meta.seed},
                 {"rng_state", meta.rng_state},
                 {"trainable", params_to_json(model.trainable_parameters())},
                 {"frozen", params_to_json(model.frozen_parameters())}};
    write_file_atomic(path, j.dump());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path, const ModelConfig* expected) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::MalformedRecord, path.string() + ": " + e.what());
    }
    try {
        const ModelConfig cfg = config_from_json(j.at("model_config"));
        const std::string stored = j.at("config_hash").get<std::string>();
        if (stored != cfg.hash()) throw Error(ErrorCode::ConfigMismatch, "checkpoint config hash does not match its config");
        if (expected && expected->hash() != stored) {
            throw Error(ErrorCode::ConfigMismatch,
                        "checkpoint built for config " + stored + ", requested " + expected->hash());
        }
        StrudelModel model = StrudelModel::create(cfg, 0);
        params_from_json(j.at("trainable"), model.trainable_parameters(), "trainable");
        EncoderHandle frozen = freeze_snapshot(model.frozen());
        params_from_json(j.at("frozen"), prefixed("frozen.", frozen.parameters()), "frozen");
        StrudelModel loaded(cfg, model.encoder(), frozen, model.heads(), model.reasoner());
        CheckpointMeta meta{j.at("phase").get<std::string>(), j.at("step").get<std::size_t>(),
                            j.at("seed").get<std::uint64_t>(), j.at("rng_state").get<std::string>()};
        return {std::move(loaded), std::move(meta)};
    } catch (const json::exception& e) {
        throw Error(ErrorCode::MalformedRecord, path.string() + ": " + e.what());
    }
}

}  // namespace strudel

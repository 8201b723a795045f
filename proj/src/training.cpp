#include "strudel/training.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "strudel/error.hpp"

namespace strudel {

using nlohmann::json;

void TrainConfig::validate() const {
    auto fail = [](const std::string& msg) { throw Error(ErrorCode::ConfigInvalid, msg); };
    if (alpha1 < 0.0 || alpha2 < 0.0 || !std::isfinite(alpha1) || !std::isfinite(alpha2)) {
        fail("alpha1 and alpha2 must be finite and non-negative");
    }
    if (alpha1 == 0.0 && alpha2 == 0.0) fail("at least one of alpha1, alpha2 must be positive");
    if (batch_size_ha == 0 || batch_size_ce == 0) fail("batch sizes must be >= 1");
    if (!(learning_rate > 0.0)) fail("learning_rate must be positive");
    if (!(grad_clip >= 0.0)) fail("grad_clip must be non-negative");
    if (encoder_dim < 4) fail("encoder_dim must be >= 4");
    gat.validate();
}

ModelConfig TrainConfig::model_config() const {
    ModelConfig m;
    m.encoder = {encoder_backend, encoder_dim, vocab_size, encoder_layers, max_seq_len};
    m.gat = gat;
    m.readout = readout;
    return m;
}

json TrainConfig::to_json() const {
    return {{"alpha1", alpha1},
            {"alpha2", alpha2},
            {"steps_posttrain", steps_posttrain},
            {"steps_finetune", steps_finetune},
            {"batch_size_ha", batch_size_ha},
            {"batch_size_ce", batch_size_ce},
            {"learning_rate", learning_rate},
            {"grad_clip", grad_clip},
            {"seed", seed},
            {"gat_layers", gat.layers},
            {"gat_node_dim", gat.node_dim},
            {"gat_heads", gat.attention_heads},
            {"gat_relation_dim", gat.relation_embed_dim},
            {"encoder_backend", encoder_backend},
            {"encoder_dim", encoder_dim},
            {"encoder_layers", encoder_layers},
            {"vocab_size", vocab_size},
            {"max_seq_len", max_seq_len},
            {"readout", readout == ReadoutMode::Graph ? "graph" : "context_only"}};
}

namespace {

template <typename T>
void take(const json& j, const char* key, T& out) {
    if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

}  // namespace

TrainConfig TrainConfig::from_json(const json& j) {
    if (!j.is_object()) throw Error(ErrorCode::ConfigInvalid, "config must be a flat object");
    static const char* const known[] = {"alpha1", "alpha2", "steps_posttrain", "steps_finetune", "batch_size_ha",
                                        "batch_size_ce", "learning_rate", "grad_clip", "seed", "gat_layers", "gat_node_dim",
                                        "gat_heads", "gat_relation_dim", "encoder_backend", "encoder_dim",
                                        "encoder_layers", "vocab_size", "max_seq_len", "readout"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::find(std::begin(known), std::end(known), it.key()) == std::end(known)) {
            throw Error(ErrorCode::ConfigInvalid, "unknown config key '" + it.key() + "'");
        }
    }
    TrainConfig c;
    try {
        take(j, "encoder_dim", c.encoder_dim);
        // GAT sizes default from the encoder width unless given.
        c.gat = GatConfig::for_encoder_dim(c.encoder_dim);
        take(j, "alpha1", c.alpha1);
        take(j, "alpha2", c.alpha2);
        take(j, "steps_posttrain", c.steps_posttrain);
        take(j, "steps_finetune", c.steps_finetune);
        take(j, "batch_size_ha", c.batch_size_ha);
        take(j, "batch_size_ce", c.batch_size_ce);
        take(j, "learning_rate", c.learning_rate);
        take(j, "grad_clip", c.grad_clip);
        take(j, "seed", c.seed);
        take(j, "gat_layers", c.gat.layers);
        take(j, "gat_node_dim", c.gat.node_dim);
        take(j, "gat_heads", c.gat.attention_heads);
        take(j, "gat_relation_dim", c.gat.relation_embed_dim);
        take(j, "encoder_backend", c.encoder_backend);
        take(j, "encoder_layers", c.encoder_layers);
        take(j, "vocab_size", c.vocab_size);
        take(j, "max_seq_len", c.max_seq_len);
        std::string readout = "graph";
        take(j, "readout", readout);
        if (readout == "graph") {
            c.readout = ReadoutMode::Graph;
        } else if (readout == "context_only") {
            c.readout = ReadoutMode::ContextOnly;
        } else {
            throw Error(ErrorCode::ConfigInvalid, "readout must be graph or context_only");
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ConfigInvalid, e.what());
    }
    return c;
}

void TrainConfig::set(const std::string& key, const std::string& value) {
    json j = to_json();
    json parsed;
    try {
        parsed = json::parse(value);
    } catch (const json::exception&) {
        parsed = value;
    }
    if (!j.contains(key)) throw Error(ErrorCode::ConfigInvalid, "unknown config key '" + key + "'");
    j[key] = parsed;
    // Keep explicitly set GAT sizes even if encoder_dim changes.
    *this = from_json(j);
}

std::vector<AnnotatedDialogue> join_annotations(const std::vector<Dialogue>& dialogues,
                                                const std::vector<StrudelAnnotation>& annotations) {
    std::unordered_map<std::string, const Dialogue*> by_id;
    for (const Dialogue& d : dialogues) by_id.emplace(d.id, &d);
    std::vector<AnnotatedDialogue> out;
    for (const StrudelAnnotation& a : annotations) {
        auto it = by_id.find(a.dialogue_id);
        if (it == by_id.end()) {
            throw Error(ErrorCode::MalformedRecord, "annotation references unknown dialogue '" + a.dialogue_id + "'");
        }
        out.push_back({*it->second, a});
    }
    return out;
}

Var posttrain_objective(const StrudelModel& model, std::span<const AnnotatedDialogue> batch_ha,
                        std::span<const ComprehensionExample> batch_ce, double alpha1, double alpha2) {
    std::vector<Var> terms;
    if (alpha1 != 0.0) {
        if (batch_ha.empty()) throw Error(ErrorCode::EmptyBatch, "semantic matching batch is empty");
        std::vector<Var> losses;
        for (const AnnotatedDialogue& ad : batch_ha) losses.push_back(model.semantic_loss(ad.dialogue, ad.annotation));
        terms.push_back(scale(sum(stack_rows(losses)), alpha1 / static_cast<double>(losses.size())));
    }
    if (alpha2 != 0.0) {
        if (batch_ce.empty()) throw Error(ErrorCode::EmptyBatch, "cross-entropy batch is empty");
        std::vector<Var> losses;
        for (const ComprehensionExample& ex : batch_ce) losses.push_back(model.example_loss(ex));
        terms.push_back(scale(sum(stack_rows(losses)), alpha2 / static_cast<double>(losses.size())));
    }
    if (terms.empty()) return Var::constant(Matrix(1, 1, 0.0));
    return terms.size() == 1 ? terms[0] : add(terms[0], terms[1]);
}

double posttrain_loss(const StrudelModel& model, std::span<const AnnotatedDialogue> batch_ha,
                      std::span<const ComprehensionExample> batch_ce, const TrainConfig& cfg) {
    return posttrain_objective(model, batch_ha, batch_ce, cfg.alpha1, cfg.alpha2).scalar();
}

Adam::Adam(std::vector<NamedParameter> params, double lr, double clip, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), clip_(clip), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (const auto& p : params_) {
        m_.emplace_back(p.var.rows(), p.var.cols());
        v_.emplace_back(p.var.rows(), p.var.cols());
    }
}

void Adam::zero_grad() {
    for (auto& p : params_) p.var.zero_grad();
}

void Adam::step() {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    double sq = 0.0;
    for (const auto& p : params_) {
        for (double g : p.var.grad().data()) sq += g * g;
    }
    last_norm_ = std::sqrt(sq);
    const double factor = clip_ > 0.0 && last_norm_ > clip_ ? clip_ / last_norm_ : 1.0;
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Var& var = params_[i].var;
        const Matrix& g = var.grad();
        if (g.empty()) continue;
        Matrix& w = var.mutable_value();
        Matrix& m = m_[i];
        Matrix& v = v_[i];
        for (std::size_t k = 0; k < w.size(); ++k) {
            const double gk = g[k] * factor;
            m[k] = beta1_ * m[k] + (1.0 - beta1_) * gk;
            v[k] = beta2_ * v[k] + (1.0 - beta2_) * gk * gk;
            w[k] -= lr_ * (m[k] / c1) / (std::sqrt(v[k] / c2) + eps_);
        }
    }
}

PoolCycler::PoolCycler(std::size_t size, Rng& rng) : order_(size), rng_(&rng) {
    for (std::size_t i = 0; i < size; ++i) order_[i] = i;
    rng_->shuffle(order_);
}

std::vector<std::size_t> PoolCycler::next(std::size_t batch) {
    std::vector<std::size_t> out;
    if (order_.empty()) return out;
    while (out.size() < batch) {
        if (pos_ == order_.size()) {
            rng_->shuffle(order_);
            pos_ = 0;
        }
        out.push_back(order_[pos_++]);
    }
    return out;
}

namespace {

template <typename T>
std::vector<T> pick(const std::vector<T>& pool, const std::vector<std::size_t>& idx) {
    std::vector<T> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(pool[i]);
    return out;
}

}  // namespace

TrainResult posttrain(StrudelModel& model, const TrainingCorpus& corpus, const TrainConfig& cfg) {
    cfg.validate();
    if (cfg.alpha1 > 0.0 && corpus.annotated.empty()) throw Error(ErrorCode::EmptyBatch, "no annotated dialogues");
    if (cfg.alpha2 > 0.0 && corpus.examples.empty()) throw Error(ErrorCode::EmptyBatch, "no comprehension examples");
    Rng rng(cfg.seed);
    PoolCycler ha(corpus.annotated.size(), rng);
    PoolCycler ce(corpus.examples.size(), rng);
    Adam opt(model.trainable_parameters(), cfg.learning_rate, cfg.grad_clip);

    TrainResult result;
    result.probe_before = posttrain_loss(model, corpus.annotated, corpus.examples, cfg);
    for (std::size_t step = 0; step < cfg.steps_posttrain; ++step) {
        const auto batch_ha = pick(corpus.annotated, ha.next(cfg.alpha1 > 0.0 ? cfg.batch_size_ha : 0));
        const auto batch_ce = pick(corpus.examples, ce.next(cfg.alpha2 > 0.0 ? cfg.batch_size_ce : 0));
        opt.zero_grad();
        Var loss = posttrain_objective(model, batch_ha, batch_ce, cfg.alpha1, cfg.alpha2);
        loss.backward();
        opt.step();
        result.loss_curve.push_back(loss.scalar());
    }
    result.steps = cfg.steps_posttrain;
    result.probe_after = posttrain_loss(model, corpus.annotated, corpus.examples, cfg);
    result.rng_state = rng.state();
    return result;
}

TrainResult finetune(StrudelModel& model, std::span<const ComprehensionExample> examples, const TrainConfig& cfg) {
    cfg.validate();
    if (examples.empty()) throw Error(ErrorCode::EmptyBatch, "no fine-tuning examples");
    const std::vector<ComprehensionExample> pool(examples.begin(), examples.end());
    Rng rng(cfg.seed ^ 0x66696e65ULL);
    PoolCycler ce(pool.size(), rng);
    Adam opt(model.trainable_parameters(), cfg.learning_rate, cfg.grad_clip);

    TrainResult result;
    result.probe_before = mean_cross_entropy(model, examples);
    for (std::size_t step = 0; step < cfg.steps_finetune; ++step) {
        const auto batch = pick(pool, ce.next(cfg.batch_size_ce));
        opt.zero_grad();
        Var loss = posttrain_objective(model, {}, batch, 0.0, 1.0);
        loss.backward();
        opt.step();
        result.loss_curve.push_back(loss.scalar());
    }
    result.steps = cfg.steps_finetune;
    result.probe_after = mean_cross_entropy(model, examples);
    result.rng_state = rng.state();
    return result;
}

double mean_cross_entropy(const StrudelModel& model, std::span<const ComprehensionExample> examples) {
    if (examples.empty()) throw Error(ErrorCode::EmptyBatch, "no examples");
    double total = 0.0;
    for (const auto& ex : examples) total += cross_entropy_loss(predict(model, ex), ex.gold_index);
    return total / static_cast<double>(examples.size());
}

double accuracy_on(const StrudelModel& model, std::span<const ComprehensionExample> examples) {
    if (examples.empty()) throw Error(ErrorCode::EmptyBatch, "no examples");
    std::size_t hits = 0;
    for (const auto& ex : examples) hits += argmax(candidate_scores(model, ex)) == ex.gold_index;
    return static_cast<double>(hits) / static_cast<double>(examples.size());
}

}  // namespace strudel

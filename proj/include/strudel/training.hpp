#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "strudel/model.hpp"

namespace strudel {

struct TrainConfig {
    double alpha1 = 1.0;  // semantic matching weight
    double alpha2 = 1.0;  // cross-entropy weight
    std::size_t steps_posttrain = 200;
    std::size_t steps_finetune = 300;
    std::size_t batch_size_ha = 2;
    std::size_t batch_size_ce = 4;
    double learning_rate = 5e-3;
    double grad_clip = 1.0;  // global L2 norm; 0 disables
    std::uint64_t seed = 7;
    GatConfig gat = GatConfig::for_encoder_dim(16);
    std::string encoder_backend = "toy";
    std::size_t encoder_dim = 16;
    std::size_t encoder_layers = 2;
    std::size_t vocab_size = 1024;
    std::size_t max_seq_len = 256;
    ReadoutMode readout = ReadoutMode::Graph;

    // Throws ConfigInvalid.
    void validate() const;
    ModelConfig model_config() const;

    // Flat key/value document; keys mirror the field names, GAT fields are
    // gat_layers, gat_node_dim, gat_heads, gat_relation_dim.
    nlohmann::json to_json() const;
    static TrainConfig from_json(const nlohmann::json& j);
    // Single "key=value" override, value parsed as JSON when possible.
    void set(const std::string& key, const std::string& value);
};

struct AnnotatedDialogue {
    Dialogue dialogue;
    StrudelAnnotation annotation;
};

// Pairs each annotation with its dialogue; throws MalformedRecord on an unknown id.
std::vector<AnnotatedDialogue> join_annotations(const std::vector<Dialogue>& dialogues,
                                                const std::vector<StrudelAnnotation>& annotations);

struct TrainingCorpus {
    std::vector<AnnotatedDialogue> annotated;
    std::vector<ComprehensionExample> examples;
};

// alpha1 * mean SM over batch_ha + alpha2 * mean CE over batch_ce. A term
// with zero weight is skipped entirely; a weighted term needs a non-empty batch.
Var posttrain_objective(const StrudelModel& model, std::span<const AnnotatedDialogue> batch_ha,
                        std::span<const ComprehensionExample> batch_ce, double alpha1, double alpha2);
double posttrain_loss(const StrudelModel& model, std::span<const AnnotatedDialogue> batch_ha,
                      std::span<const ComprehensionExample> batch_ce, const TrainConfig& cfg);

class Adam {
public:
    explicit Adam(std::vector<NamedParameter> params, double lr, double clip = 0.0, double beta1 = 0.9,
                  double beta2 = 0.999, double eps = 1e-8);

    void zero_grad();
    // Rescales gradients to the clip norm first when it is exceeded.
    void step();
    double last_grad_norm() const noexcept { return last_norm_; }
    std::size_t steps() const noexcept { return t_; }

private:
    std::vector<NamedParameter> params_;
    std::vector<Matrix> m_, v_;
    double lr_, clip_, beta1_, beta2_, eps_;
    double last_norm_ = 0.0;
    std::size_t t_ = 0;
};

// Sequential pass over a pool in seeded shuffled order, reshuffling at each wrap.
class PoolCycler {
public:
    PoolCycler(std::size_t size, Rng& rng);
    std::vector<std::size_t> next(std::size_t batch);

private:
    std::vector<std::size_t> order_;
    std::size_t pos_ = 0;
    Rng* rng_;
};

struct TrainResult {
    std::vector<double> loss_curve;  // training objective per step
    double probe_before = 0.0;
    double probe_after = 0.0;
    std::size_t steps = 0;
    std::string rng_state;
};

// Multi-task phase. The model's frozen snapshot is the target encoder and is
// never touched. The probe loss is the objective over the full pools.
TrainResult posttrain(StrudelModel& model, const TrainingCorpus& corpus, const TrainConfig& cfg);

// Cross-entropy only, on one task's examples.
TrainResult finetune(StrudelModel& model, std::span<const ComprehensionExample> examples, const TrainConfig& cfg);

double mean_cross_entropy(const StrudelModel& model, std::span<const ComprehensionExample> examples);
double accuracy_on(const StrudelModel& model, std::span<const ComprehensionExample> examples);

}  // namespace strudel

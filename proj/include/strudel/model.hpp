#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "strudel/reasoner.hpp"

namespace strudel {

struct ModelConfig {
    EncoderConfig encoder;
    GatConfig gat;
    ReadoutMode readout = ReadoutMode::Graph;

    // Canonical "key=value;..." form of every shape-relevant field.
    std::string canonical() const;
    std::string hash() const;
};

// Trainable encoder, its frozen snapshot, seven entry heads and the reasoner.
class StrudelModel {
public:
    // Fresh model; the frozen snapshot is taken from the initial encoder.
    static StrudelModel create(const ModelConfig& cfg, std::uint64_t seed);

    StrudelModel(ModelConfig cfg, EncoderHandle encoder, EncoderHandle frozen, EntryHeads heads,
                 ReasonerParams reasoner);

    const ModelConfig& config() const noexcept { return cfg_; }
    const EncoderHandle& encoder() const noexcept { return encoder_; }
    const EncoderHandle& frozen() const noexcept { return frozen_; }
    const EntryHeads& heads() const noexcept { return heads_; }
    const ReasonerParams& reasoner() const noexcept { return reasoner_; }
    const FrozenTextEmbedder& targets() const { return *targets_; }
    const std::pair<Var, Var>& speakers() const noexcept { return speakers_; }

    // Prefixed "encoder.", "heads.", "reasoner.".
    std::vector<NamedParameter> trainable_parameters() const;
    std::vector<NamedParameter> frozen_parameters() const;

    // Deep copy of the trainable parts; the frozen snapshot is shared.
    StrudelModel clone() const;

    StrudelEmbeddingSet strudel_embeddings(const Dialogue& d) const;
    // 1 x n raw scores, entry embeddings computed once for all candidates.
    Var candidate_scores(const Dialogue& d, const std::optional<std::string>& question,
                         std::span<const std::string> candidates) const;
    Var example_loss(const ComprehensionExample& ex) const;
    Var semantic_loss(const Dialogue& d, const StrudelAnnotation& ann) const;

private:
    ModelConfig cfg_;
    EncoderHandle encoder_;
    EncoderHandle frozen_;
    EntryHeads heads_;
    ReasonerParams reasoner_;
    std::shared_ptr<FrozenTextEmbedder> targets_;
    std::pair<Var, Var> speakers_;
};

double score_candidate(const StrudelModel& model, const Dialogue& d, const std::optional<std::string>& question,
                       const std::string& candidate);
std::vector<double> candidate_scores(const StrudelModel& model, const ComprehensionExample& ex);
// Softmax over candidate scores.
std::vector<double> predict(const StrudelModel& model, const ComprehensionExample& ex);
// Lowest index among the maxima.
std::size_t argmax(std::span<const double> values);

struct CheckpointMeta {
    std::string phase = "init";
    std::size_t step = 0;
    std::uint64_t seed = 0;
    std::string rng_state;
};

struct LoadedCheckpoint {
    StrudelModel model;
    CheckpointMeta meta;
};

void save_checkpoint(const std::filesystem::path& path, const StrudelModel& model, const CheckpointMeta& meta);
// Throws ConfigMismatch when `expected` is given and its hash differs from the checkpoint's.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path, const ModelConfig* expected = nullptr);

}  // namespace strudel

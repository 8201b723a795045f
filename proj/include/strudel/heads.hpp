#pragma once

#include <array>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "strudel/corpus.hpp"
#include "strudel/encoder.hpp"
#include "strudel/rng.hpp"

namespace strudel {

enum class HeadActivation { Tanh, Identity };

// Two-layer perceptron dim -> dim -> dim dedicated to one entry kind.
class EntryHead {
public:
    EntryHead() = default;
    EntryHead(EntryKind kind, Var w1, Var b1, Var w2, Var b2, HeadActivation act = HeadActivation::Tanh);

    static EntryHead random(EntryKind kind, std::size_t dim, Rng& rng);
    // Identity weights, zero biases and no nonlinearity: output equals input.
    static EntryHead identity(EntryKind kind, std::size_t dim);

    EntryKind kind() const noexcept { return kind_; }
    std::size_t dim() const { return w1_.rows(); }
    Var forward(const Var& cls) const;
    std::vector<NamedParameter> parameters() const;
    EntryHead clone() const;

private:
    EntryKind kind_ = EntryKind::Relationship;
    Var w1_, b1_, w2_, b2_;
    HeadActivation act_ = HeadActivation::Tanh;
};

class EntryHeads {
public:
    EntryHeads() = default;
    explicit EntryHeads(std::array<EntryHead, kEntryCount> heads) : heads_(std::move(heads)) {}
    static EntryHeads random(std::size_t dim, Rng& rng);
    static EntryHeads identity(std::size_t dim);

    const EntryHead& operator[](EntryKind kind) const { return heads_[entry_index(kind)]; }
    std::size_t dim() const { return heads_[0].dim(); }
    // Names are "<entry key>.w1" etc.
    std::vector<NamedParameter> parameters() const;
    EntryHeads clone() const;

private:
    std::array<EntryHead, kEntryCount> heads_;
};

struct StrudelEmbeddingSet {
    std::string dialogue_id;
    std::array<Var, kEntryCount> vectors;  // each 1 x dim

    const Var& operator[](EntryKind kind) const { return vectors[entry_index(kind)]; }
};

// Seven independent encoder passes, one per entry prompt.
StrudelEmbeddingSet generate_strudel_embeddings(const EncoderHandle& enc, const EntryHeads& heads,
                                                const Dialogue& d);

// [CLS] vector of a text under the frozen encoder; a constant.
Var annotation_embedding(const EncoderHandle& frozen, const std::string& text);

// Memoizes frozen text embeddings. Safe for concurrent use.
class FrozenTextEmbedder {
public:
    explicit FrozenTextEmbedder(EncoderHandle frozen);

    const EncoderHandle& encoder() const noexcept { return frozen_; }
    Var embed(const std::string& text) const;

private:
    EncoderHandle frozen_;
    mutable std::mutex mu_;
    mutable std::unordered_map<std::string, Matrix> cache_;
};

// -sum over non-N/A entries of cos(generated, frozen annotation embedding).
Var semantic_matching_loss(const StrudelEmbeddingSet& embs, const StrudelAnnotation& ann,
                           const FrozenTextEmbedder& targets);
Var semantic_matching_loss(const StrudelEmbeddingSet& embs, const StrudelAnnotation& ann,
                           const EncoderHandle& frozen);

}  // namespace strudel

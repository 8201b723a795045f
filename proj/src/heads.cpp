#include "strudel/heads.hpp"

#include <cmath>

#include "strudel/error.hpp"

namespace strudel {

EntryHead::EntryHead(EntryKind kind, Var w1, Var b1, Var w2, Var b2, HeadActivation act)
    : kind_(kind), w1_(std::move(w1)), b1_(std::move(b1)), w2_(std::move(w2)), b2_(std::move(b2)), act_(act) {
    const std::size_t d = w1_.rows();
    if (w1_.cols() != d || w2_.rows() != d || w2_.cols() != d || b1_.cols() != d || b2_.cols() != d ||
        b1_.rows() != 1 || b2_.rows() != 1) {
        throw Error(ErrorCode::DimMismatch, "entry head weights must be dim x dim with 1 x dim biases");
    }
}

EntryHead EntryHead::random(EntryKind kind, std::size_t dim, Rng& rng) {
    const double bound = std::sqrt(3.0 / static_cast<double>(dim));
    auto w = [&] {
        Matrix m(dim, dim);
        for (double& v : m.data()) v = rng.uniform(-bound, bound);
        return Var::parameter(std::move(m));
    };
    Var w1 = w();
    Var w2 = w();
    return EntryHead(kind, w1, Var::parameter(Matrix(1, dim)), w2, Var::parameter(Matrix(1, dim)));
}

EntryHead EntryHead::identity(EntryKind kind, std::size_t dim) {
    Matrix eye(dim, dim);
    for (std::size_t i = 0; i < dim; ++i) eye(i, i) = 1.0;
    return EntryHead(kind, Var::parameter(eye), Var::parameter(Matrix(1, dim)), Var::parameter(eye),
                     Var::parameter(Matrix(1, dim)), HeadActivation::Identity);
}

Var EntryHead::forward(const Var& cls) const {
    if (cls.rows() != 1 || cls.cols() != dim()) throw Error(ErrorCode::DimMismatch, "head input is not 1 x dim");
    Var h = add(matmul(cls, w1_), b1_);
    if (act_ == HeadActivation::Tanh) h = tanh(h);
    return add(matmul(h, w2_), b2_);
}

std::vector<NamedParameter> EntryHead::parameters() const {
    const std::string p(entry_key(kind_));
    return {{p + ".w1", w1_}, {p + ".b1", b1_}, {p + ".w2", w2_}, {p + ".b2", b2_}};
}

EntryHead EntryHead::clone() const {
    return EntryHead(kind_, Var::parameter(w1_.value()), Var::parameter(b1_.value()), Var::parameter(w2_.value()),
                     Var::parameter(b2_.value()), act_);
}

EntryHeads EntryHeads::random(std::size_t dim, Rng& rng) {
    std::array<EntryHead, kEntryCount> heads;
    for (EntryKind k : kAllEntryKinds) heads[entry_index(k)] = EntryHead::random(k, dim, rng);
    return EntryHeads(std::move(heads));
}

EntryHeads EntryHeads::identity(std::size_t dim) {
    std::array<EntryHead, kEntryCount> heads;
    for (EntryKind k : kAllEntryKinds) heads[entry_index(k)] = EntryHead::identity(k, dim);
    return EntryHeads(std::move(heads));
}

std::vector<NamedParameter> EntryHeads::parameters() const {
    std::vector<NamedParameter> out;
    for (const EntryHead& h : heads_) {
        for (auto& p : h.parameters()) out.push_back(std::move(p));
    }
    return out;
}

EntryHeads EntryHeads::clone() const {
    std::array<EntryHead, kEntryCount> heads;
    for (std::size_t i = 0; i < kEntryCount; ++i) heads[i] = heads_[i].clone();
    return EntryHeads(std::move(heads));
}

StrudelEmbeddingSet generate_strudel_embeddings(const EncoderHandle& enc, const EntryHeads& heads,
                                                const Dialogue& d) {
    if (heads.dim() != enc.dim()) throw Error(ErrorCode::DimMismatch, "head dim != encoder dim");
    StrudelEmbeddingSet out;
    out.dialogue_id = d.id;
    for (EntryKind k : kAllEntryKinds) {
        out.vectors[entry_index(k)] = heads[k].forward(encode(enc, build_entry_query(d, k)).cls);
    }
    return out;
}

Var annotation_embedding(const EncoderHandle& frozen, const std::string& text) {
    if (!frozen.frozen()) throw Error(ErrorCode::FrozenRequired, "annotation embeddings need a frozen encoder");
    if (text.empty()) throw Error(ErrorCode::EmptyText, "empty annotation text");
    return encode(frozen, build_text_query(text)).cls;
}

FrozenTextEmbedder::FrozenTextEmbedder(EncoderHandle frozen) : frozen_(std::move(frozen)) {
    if (!frozen_.frozen()) throw Error(ErrorCode::FrozenRequired, "FrozenTextEmbedder needs a frozen encoder");
}

Var FrozenTextEmbedder::embed(const std::string& text) const {
    {
        std::lock_guard lock(mu_);
        if (auto it = cache_.find(text); it != cache_.end()) return Var::constant(it->second);
    }
    Matrix v = annotation_embedding(frozen_, text).value();
    std::lock_guard lock(mu_);
    cache_.emplace(text, v);
    return Var::constant(std::move(v));
}

Var semantic_matching_loss(const StrudelEmbeddingSet& embs, const StrudelAnnotation& ann,
                           const FrozenTextEmbedder& targets) {
    if (embs.dialogue_id != ann.dialogue_id) {
        throw Error(ErrorCode::DialogueMismatch,
                    "embeddings of '" + embs.dialogue_id + "' scored against annotation of '" + ann.dialogue_id + "'");
    }
    std::vector<Var> terms;
    for (EntryKind k : kAllEntryKinds) {
        if (!ann[k]) continue;
        terms.push_back(cosine(embs[k], targets.embed(*ann[k])));
    }
    if (terms.empty()) return Var::constant(Matrix(1, 1, 0.0));
    return scale(sum(stack_rows(terms)), -1.0);
}

Var semantic_matching_loss(const StrudelEmbeddingSet& embs, const StrudelAnnotation& ann,
                           const EncoderHandle& frozen) {
    return semantic_matching_loss(embs, ann, FrozenTextEmbedder(frozen));
}

}  // namespace strudel

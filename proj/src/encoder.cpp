#include "strudel/encoder.hpp"

#include <cctype>
#include <cmath>

#include "strudel/error.hpp"
#include "strudel/io.hpp"
#include "strudel/rng.hpp"

namespace strudel {

namespace toy {

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string word;
    auto flush = [&] {
        if (!word.empty()) out.push_back(std::move(word));
        word.clear();
    };
    for (unsigned char c : text) {
        if (std::isalnum(c) || c >= 0x80) {
            word.push_back(static_cast<char>(std::tolower(c)));
        } else {
            flush();
            if (!std::isspace(c)) out.emplace_back(1, static_cast<char>(c));
        }
    }
    flush();
    return out;
}

std::vector<std::size_t> token_ids(const QuerySequence& q, std::size_t vocab_size, std::size_t max_len) {
    if (!well_formed(q)) throw Error(ErrorCode::EmptyQuery, "query violates the [CLS] .. [EOS] grammar");
    const std::size_t buckets = vocab_size - kFirstWordId;
    std::vector<std::vector<std::size_t>> payload_ids;
    std::size_t markers = 0;
    std::size_t total = 0;
    for (const Segment& s : q.segments) {
        if (const auto* text = std::get_if<std::string>(&s)) {
            std::vector<std::size_t> ids;
            for (const std::string& tok : tokenize(*text)) ids.push_back(kFirstWordId + fnv1a64(tok) % buckets);
            total += ids.size();
            payload_ids.push_back(std::move(ids));
        } else {
            ++markers;
        }
    }
    if (total == 0) throw Error(ErrorCode::EmptyQuery, "query has no tokens");
    std::size_t rest = markers;
    for (std::size_t i = 1; i < payload_ids.size(); ++i) rest += payload_ids[i].size();
    if (rest >= max_len) throw Error(ErrorCode::EmptyQuery, "question/candidate payloads exceed max_seq_len");
    auto& first = payload_ids.front();
    const std::size_t keep = std::min(first.size(), max_len - rest);
    first.erase(first.begin(), first.end() - static_cast<std::ptrdiff_t>(keep));

    std::vector<std::size_t> ids;
    std::size_t next_payload = 0;
    for (const Segment& s : q.segments) {
        if (const auto* m = std::get_if<Marker>(&s)) {
            ids.push_back(*m == Marker::Cls ? kClsId : *m == Marker::Sep ? kSepId : kEosId);
        } else {
            const auto& p = payload_ids[next_payload++];
            ids.insert(ids.end(), p.begin(), p.end());
        }
    }
    return ids;
}

}  // namespace toy

namespace {

Matrix uniform_matrix(Rng& rng, std::size_t rows, std::size_t cols, double bound) {
    Matrix m(rows, cols);
    for (double& v : m.data()) v = rng.uniform(-bound, bound);
    return m;
}

double xavier(std::size_t fan_in, std::size_t fan_out) {
    return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

Var leaf(Matrix m, bool trainable) {
    return trainable ? Var::parameter(std::move(m)) : Var::constant(std::move(m));
}

// Token + position embeddings, then pre-norm blocks
//   H = LN(X); X += softmax(H Wq (H Wk)^T / sqrt(d)) H Wv
//   H = LN(X); X += tanh(H W1 + b1) W2
// and a final LN.
class ToyEncoder final : public EncoderBackend {
public:
    struct Layer {
        Var wq, wk, wv, w1, b1, w2;
    };

    ToyEncoder(std::uint64_t seed, std::size_t dim, std::size_t vocab, std::size_t layers, std::size_t max_len)
        : dim_(dim), vocab_(vocab), max_len_(max_len) {
        if (dim < 4) throw Error(ErrorCode::ConfigInvalid, "toy encoder dim must be >= 4");
        if (vocab <= toy::kFirstWordId) throw Error(ErrorCode::ConfigInvalid, "vocab_size too small");
        if (max_len < 4) throw Error(ErrorCode::ConfigInvalid, "max_seq_len too small");
        Rng rng(seed ^ 0x70795f656e636f64ULL);
        token_embed_ = Var::parameter(uniform_matrix(rng, vocab, dim, 1.0));
        pos_embed_ = Var::parameter(uniform_matrix(rng, max_len, dim, 0.1));
        const double a = xavier(dim, dim);
        for (std::size_t l = 0; l < layers; ++l) {
            layers_.push_back(Layer{
                Var::parameter(uniform_matrix(rng, dim, dim, a)), Var::parameter(uniform_matrix(rng, dim, dim, a)),
                Var::parameter(uniform_matrix(rng, dim, dim, a)), Var::parameter(uniform_matrix(rng, dim, dim, a)),
                Var::parameter(Matrix(1, dim)), Var::parameter(uniform_matrix(rng, dim, dim, a))});
        }
    }

    std::string name() const override { return "toy"; }
    std::size_t dim() const override { return dim_; }

    EncodedSequence encode(const QuerySequence& q) const override {
        const std::vector<std::size_t> ids = toy::token_ids(q, vocab_, max_len_);
        std::vector<std::size_t> positions(ids.size());
        for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = i;
        Var x = add(gather_rows(token_embed_, ids), gather_rows(pos_embed_, positions));
        const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(dim_));
        for (const Layer& l : layers_) {
            Var h = layer_norm_rows(x);
            Var attn = softmax_rows(scale(matmul_bt(matmul(h, l.wq), matmul(h, l.wk)), inv_sqrt_d));
            x = add(x, matmul(attn, matmul(h, l.wv)));
            h = layer_norm_rows(x);
            x = add(x, matmul(tanh(add_row(matmul(h, l.w1), l.b1)), l.w2));
        }
        Var hidden = layer_norm_rows(x);
        return {hidden, slice_row(hidden, 0)};
    }

    std::unique_ptr<EncoderBackend> clone(bool trainable) const override {
        auto copy = std::unique_ptr<ToyEncoder>(new ToyEncoder(*this));
        copy->token_embed_ = leaf(token_embed_.value(), trainable);
        copy->pos_embed_ = leaf(pos_embed_.value(), trainable);
        for (Layer& l : copy->layers_) {
            for (Var* v : {&l.wq, &l.wk, &l.wv, &l.w1, &l.b1, &l.w2}) *v = leaf(v->value(), trainable);
        }
        return copy;
    }

    std::vector<NamedParameter> parameters() const override {
        std::vector<NamedParameter> out{{"token_embed", token_embed_}, {"pos_embed", pos_embed_}};
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            const std::string p = "layer" + std::to_string(i) + ".";
            const Layer& l = layers_[i];
            out.push_back({p + "wq", l.wq});
            out.push_back({p + "wk", l.wk});
            out.push_back({p + "wv", l.wv});
            out.push_back({p + "w1", l.w1});
            out.push_back({p + "b1", l.b1});
            out.push_back({p + "w2", l.w2});
        }
        return out;
    }

private:
    ToyEncoder(const ToyEncoder&) = default;

    std::size_t dim_;
    std::size_t vocab_;
    std::size_t max_len_;
    Var token_embed_;
    Var pos_embed_;
    std::vector<Layer> layers_;
};

}  // namespace

EncodedSequence encode(const EncoderHandle& enc, const QuerySequence& q) {
    if (!enc) throw Error(ErrorCode::ConfigInvalid, "encode on an empty encoder handle");
    if (q.payloads().empty()) throw Error(ErrorCode::EmptyQuery, "query has no payload");
    return enc.backend().encode(q);
}

EncoderHandle freeze_snapshot(const EncoderHandle& enc) {
    return EncoderHandle(std::shared_ptr<EncoderBackend>(enc.backend().clone(false)), EncoderMode::Frozen);
}

EncoderHandle toy_encoder(std::uint64_t seed, std::size_t dim, std::size_t vocab_size, std::size_t layers,
                          std::size_t max_seq_len) {
    return EncoderHandle(std::make_shared<ToyEncoder>(seed, dim, vocab_size, layers, max_seq_len),
                         EncoderMode::Trainable);
}

EncoderHandle make_encoder(const EncoderConfig& cfg, std::uint64_t seed) {
    if (cfg.backend == "toy") return toy_encoder(seed, cfg.dim, cfg.vocab_size, cfg.layers, cfg.max_seq_len);
    throw Error(ErrorCode::ConfigInvalid, "unknown encoder backend '" + cfg.backend + "'");
}

}  // namespace strudel

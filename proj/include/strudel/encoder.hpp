#pragma once

// Contextual text encoders. A backend maps a QuerySequence to one hidden
// vector per token; the [CLS] position's vector summarizes the sequence.
// The "toy" backend is a small hashed-vocabulary attention encoder that is
// always available and fully differentiable.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "strudel/autograd.hpp"
#include "strudel/prompting.hpp"

namespace strudel {

struct NamedParameter {
    std::string name;
    Var var;
};

struct EncoderConfig {
    std::string backend = "toy";
    std::size_t dim = 16;
    std::size_t vocab_size = 1024;
    std::size_t layers = 2;
    std::size_t max_seq_len = 256;
};

struct EncodedSequence {
    Var hidden;  // sequence_length x dim
    Var cls;     // 1 x dim, row 0 of hidden
};

class EncoderBackend {
public:
    virtual ~EncoderBackend() = default;

    virtual std::string name() const = 0;
    virtual std::size_t dim() const = 0;
    virtual EncodedSequence encode(const QuerySequence& q) const = 0;
    // Deep copy; the copy's parameters are leaves that require gradients iff trainable.
    virtual std::unique_ptr<EncoderBackend> clone(bool trainable) const = 0;
    virtual std::vector<NamedParameter> parameters() const = 0;
};

enum class EncoderMode { Trainable, Frozen };

// Shared handle: copies alias the same parameters.
class EncoderHandle {
public:
    EncoderHandle() = default;
    EncoderHandle(std::shared_ptr<EncoderBackend> backend, EncoderMode mode)
        : backend_(std::move(backend)), mode_(mode) {}

    std::size_t dim() const { return backend_->dim(); }
    EncoderMode mode() const noexcept { return mode_; }
    bool frozen() const noexcept { return mode_ == EncoderMode::Frozen; }
    const EncoderBackend& backend() const { return *backend_; }
    std::vector<NamedParameter> parameters() const { return backend_->parameters(); }
    explicit operator bool() const noexcept { return backend_ != nullptr; }

private:
    std::shared_ptr<EncoderBackend> backend_;
    EncoderMode mode_ = EncoderMode::Trainable;
};

// Throws EmptyQuery on a malformed or payload-free sequence.
EncodedSequence encode(const EncoderHandle& enc, const QuerySequence& q);

// Deep, gradient-free copy of the current parameters.
EncoderHandle freeze_snapshot(const EncoderHandle& enc);

EncoderHandle toy_encoder(std::uint64_t seed, std::size_t dim, std::size_t vocab_size = 1024,
                          std::size_t layers = 2, std::size_t max_seq_len = 256);

// Backend registry; throws ConfigInvalid for unknown names.
EncoderHandle make_encoder(const EncoderConfig& cfg, std::uint64_t seed);

namespace toy {

inline constexpr std::size_t kClsId = 0;
inline constexpr std::size_t kSepId = 1;
inline constexpr std::size_t kEosId = 2;
inline constexpr std::size_t kFirstWordId = 3;

// Lowercased alphanumeric runs; every other non-space character is its own token.
std::vector<std::string> tokenize(std::string_view text);

// Token ids for a query, truncating the oldest tokens of the first payload
// (the dialogue) when the sequence exceeds max_len. Throws EmptyQuery when
// the remaining payloads alone do not fit.
std::vector<std::size_t> token_ids(const QuerySequence& q, std::size_t vocab_size, std::size_t max_len);

}  // namespace toy

}  // namespace strudel

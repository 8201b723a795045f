#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "strudel/corpus.hpp"

namespace strudel {

inline constexpr std::string_view kPromptPrefix = "Summarize: what is ";

struct PromptQuestion {
    EntryKind entry;
    std::string text;
};

// Definition sentence of an entry, lowercase and ending in '.'.
std::string_view entry_definition(EntryKind kind);
PromptQuestion prompt_question(EntryKind kind);

// The seven prompt strings in canonical entry order.
const std::array<std::string, kEntryCount>& prompt_table();

enum class Marker { Cls, Sep, Eos };

using Segment = std::variant<Marker, std::string>;

// [CLS] payload ([SEP] payload)* [EOS]
struct QuerySequence {
    std::vector<Segment> segments;

    std::vector<std::string_view> payloads() const;
    std::string to_string() const;
};

// True if the sequence follows the marker grammar above.
bool well_formed(const QuerySequence& q);

std::string render_dialogue(const Dialogue& d);

QuerySequence build_entry_query(const Dialogue& d, EntryKind kind);
// An absent (or empty) question drops its payload together with its [SEP].
QuerySequence build_context_query(const Dialogue& d, const std::optional<std::string>& question,
                                  const std::string& candidate);
// [CLS] text [EOS], used for annotation texts and the fixed speaker sentences.
QuerySequence build_text_query(const std::string& text);

}  // namespace strudel

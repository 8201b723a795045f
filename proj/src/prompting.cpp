#include "strudel/prompting.hpp"

namespace strudel {

std::string_view entry_definition(EntryKind kind) {
    switch (kind) {
        case EntryKind::Relationship:
            return "the relationship between the two speakers of the dialogue.";
        case EntryKind::PurposeTheme:
            return "the main purpose or theme for which the dialogue is made between the two speakers.";
        case EntryKind::TaskIntentionS1:
            return "the main task or intention that the first speaker would like to achieve in the dialogue.";
        case EntryKind::TaskIntentionS2:
            return "the main task or intention that the second speaker would like to achieve in the dialogue.";
        case EntryKind::ProblemDisagreement:
            return "the most important problem or disagreement that the two speakers need to solve in the dialogue.";
        case EntryKind::Solution:
            return "the solution that the two speakers reach for the most important problem or disagreement in the "
                   "dialogue.";
        case EntryKind::ConclusionAgreement:
            return "the final conclusion or agreement that the two speakers reach in the dialogue.";
    }
    return "";
}

PromptQuestion prompt_question(EntryKind kind) {
    std::string text(kPromptPrefix);
    std::string_view def = entry_definition(kind);
    def.remove_suffix(1);  // trailing '.'
    text += def;
    text += '?';
    return {kind, std::move(text)};
}

const std::array<std::string, kEntryCount>& prompt_table() {
    static const std::array<std::string, kEntryCount> table = [] {
        std::array<std::string, kEntryCount> t;
        for (EntryKind k : kAllEntryKinds) t[entry_index(k)] = prompt_question(k).text;
        return t;
    }();
    return table;
}

std::vector<std::string_view> QuerySequence::payloads() const {
    std::vector<std::string_view> out;
    for (const Segment& s : segments) {
        if (const auto* p = std::get_if<std::string>(&s)) out.emplace_back(*p);
    }
    return out;
}

std::string QuerySequence::to_string() const {
    std::string out;
    for (const Segment& s : segments) {
        if (const auto* m = std::get_if<Marker>(&s)) {
            out += *m == Marker::Cls ? "[CLS]" : *m == Marker::Sep ? "[SEP]" : "[EOS]";
        } else {
            out += std::get<std::string>(s);
        }
    }
    return out;
}

bool well_formed(const QuerySequence& q) {
    const auto& s = q.segments;
    if (s.size() < 3) return false;
    if (s.front() != Segment{Marker::Cls} || s.back() != Segment{Marker::Eos}) return false;
    // Strict alternation: odd positions carry payloads, even interior positions SEP.
    for (std::size_t i = 1; i + 1 < s.size(); ++i) {
        const bool payload = std::holds_alternative<std::string>(s[i]);
        if ((i % 2 == 1) != payload) return false;
        if (!payload && std::get<Marker>(s[i]) != Marker::Sep) return false;
    }
    return s.size() % 2 == 1;
}

std::string render_dialogue(const Dialogue& d) {
    std::string out;
    for (std::size_t i = 0; i < d.turns.size(); ++i) {
        if (i > 0) out += '\n';
        out += d.turns[i].speaker == 1 ? "S1: " : "S2: ";
        out += d.turns[i].text;
    }
    return out;
}

QuerySequence build_entry_query(const Dialogue& d, EntryKind kind) {
    return {{Marker::Cls, render_dialogue(d), Marker::Sep, prompt_question(kind).text, Marker::Eos}};
}

QuerySequence build_context_query(const Dialogue& d, const std::optional<std::string>& question,
                                  const std::string& candidate) {
    if (candidate.empty()) throw Error(ErrorCode::EmptyText, "empty candidate");
    QuerySequence q{{Marker::Cls, render_dialogue(d), Marker::Sep}};
    if (question && !question->empty()) {
        q.segments.emplace_back(*question);
        q.segments.emplace_back(Marker::Sep);
    }
    q.segments.emplace_back(candidate);
    q.segments.emplace_back(Marker::Eos);
    return q;
}

QuerySequence build_text_query(const std::string& text) {
    if (text.empty()) throw Error(ErrorCode::EmptyText, "empty text query");
    return {{Marker::Cls, text, Marker::Eos}};
}

}  // namespace strudel

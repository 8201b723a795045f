#include "strudel/corpus.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "strudel/io.hpp"

namespace strudel {

using nlohmann::json;

std::string_view entry_key(EntryKind kind) {
    switch (kind) {
        case EntryKind::Relationship: return "relationship";
        case EntryKind::PurposeTheme: return "purpose_theme";
        case EntryKind::TaskIntentionS1: return "task_intention_s1";
        case EntryKind::TaskIntentionS2: return "task_intention_s2";
        case EntryKind::ProblemDisagreement: return "problem_disagreement";
        case EntryKind::Solution: return "solution";
        case EntryKind::ConclusionAgreement: return "conclusion_agreement";
    }
    return "";
}

std::string_view entry_label(EntryKind kind) {
    switch (kind) {
        case EntryKind::Relationship: return "Relationship";
        case EntryKind::PurposeTheme: return "Purpose/Theme";
        case EntryKind::TaskIntentionS1: return "Task/Intention S1";
        case EntryKind::TaskIntentionS2: return "Task/Intention S2";
        case EntryKind::ProblemDisagreement: return "Problem/Disagreement";
        case EntryKind::Solution: return "Solution";
        case EntryKind::ConclusionAgreement: return "Conclusion/Agreement";
    }
    return "";
}

std::optional<EntryKind> entry_from_key(std::string_view key) {
    for (EntryKind k : kAllEntryKinds) {
        if (entry_key(k) == key) return k;
    }
    return std::nullopt;
}

std::string_view task_kind_name(TaskKind kind) {
    return kind == TaskKind::QuestionAnswering ? "qa" : "rp";
}

std::optional<TaskKind> task_kind_from_name(std::string_view name) {
    if (name == "qa" || name == "question_answering") return TaskKind::QuestionAnswering;
    if (name == "rp" || name == "response_prediction") return TaskKind::ResponsePrediction;
    return std::nullopt;
}

namespace {

std::string describe(const std::vector<RecordProblem>& problems, const std::string& path) {
    std::ostringstream ss;
    ss << path << ": " << problems.size() << " bad record(s)";
    for (const auto& p : problems) ss << "\n  line " << p.line << ": " << error_code_name(p.code) << ": " << p.message;
    return ss.str();
}

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

// Record-level failure inside a single line.
struct BadRecord {
    ErrorCode code;
    std::string message;
};

template <typename Parse>
auto load_records(const std::filesystem::path& path, Parse parse) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    using Record = decltype(parse(json{}));
    std::vector<Record> out;
    std::vector<RecordProblem> problems;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            out.push_back(parse(json::parse(line)));
        } catch (const BadRecord& bad) {
            problems.push_back({line_no, bad.code, bad.message});
        } catch (const json::exception& e) {
            problems.push_back({line_no, ErrorCode::MalformedRecord, e.what()});
        }
    }
    if (!problems.empty()) throw LoadError(std::move(problems), path.string());
    return out;
}

const json& field(const json& j, const char* name) {
    if (!j.is_object()) throw BadRecord{ErrorCode::MalformedRecord, "record is not an object"};
    auto it = j.find(name);
    if (it == j.end()) throw BadRecord{ErrorCode::MalformedRecord, std::string("missing field '") + name + "'"};
    return *it;
}

std::string string_field(const json& j, const char* name) {
    const json& v = field(j, name);
    if (!v.is_string()) throw BadRecord{ErrorCode::MalformedRecord, std::string("field '") + name + "' is not a string"};
    return v.get<std::string>();
}

Dialogue parse_dialogue(const json& j) {
    Dialogue d;
    d.id = string_field(j, "id");
    if (d.id.empty()) throw BadRecord{ErrorCode::MalformedRecord, "empty dialogue id"};
    const json& turns = field(j, "turns");
    if (!turns.is_array()) throw BadRecord{ErrorCode::MalformedRecord, "'turns' is not an array"};
    for (const json& t : turns) {
        const json& sp = field(t, "speaker");
        if (!sp.is_number_integer()) throw BadRecord{ErrorCode::MalformedRecord, "speaker is not an integer"};
        Turn turn{sp.get<int>(), string_field(t, "text")};
        if (turn.speaker != 1 && turn.speaker != 2) {
            throw BadRecord{ErrorCode::InvalidSpeaker,
                            d.id + ": speaker " + std::to_string(turn.speaker) + " not in {1,2}"};
        }
        d.turns.push_back(std::move(turn));
    }
    // Speaker indices are positional: relabel so the opening speaker is 1.
    if (!d.turns.empty() && d.turns.front().speaker == 2) {
        for (Turn& t : d.turns) t.speaker = 3 - t.speaker;
    }
    if (auto problem = dialogue_problem(d)) {
        const bool speaker_issue = problem->find("speaker") != std::string::npos;
        throw BadRecord{speaker_issue ? ErrorCode::InvalidSpeaker : ErrorCode::MalformedRecord, d.id + ": " + *problem};
    }
    return d;
}

json dialogue_to_json(const Dialogue& d) {
    json turns = json::array();
    for (const Turn& t : d.turns) turns.push_back({{"speaker", t.speaker}, {"text", t.text}});
    return {{"id", d.id}, {"turns", std::move(turns)}};
}

template <typename T, typename ToJson>
void write_records(const std::filesystem::path& path, const std::vector<T>& records, ToJson to_json) {
    std::string out;
    for (const T& r : records) {
        out += to_json(r).dump();
        out += '\n';
    }
    write_file_atomic(path, out);
}

}  // namespace

LoadError::LoadError(std::vector<RecordProblem> problems, const std::string& path)
    : Error(problems.empty() ? ErrorCode::MalformedRecord : problems.front().code, describe(problems, path)),
      problems_(std::move(problems)) {}

std::size_t count_words(std::string_view text) {
    std::istringstream ss{std::string(text)};
    std::size_t n = 0;
    std::string w;
    while (ss >> w) ++n;
    return n;
}

std::optional<std::string> dialogue_problem(const Dialogue& d) {
    if (d.turns.empty()) return "dialogue has no turns";
    bool seen[2] = {false, false};
    for (const Turn& t : d.turns) {
        if (t.speaker != 1 && t.speaker != 2) return "speaker " + std::to_string(t.speaker) + " not in {1,2}";
        seen[t.speaker - 1] = true;
        if (trim(t.text).empty()) return std::string("empty turn text");
    }
    if (d.turns.front().speaker != 1) return std::string("first turn speaker must be 1");
    if (!seen[0] || !seen[1]) return std::string("single-speaker dialogue; both speakers must appear");
    return std::nullopt;
}

std::vector<Dialogue> load_dialogues(const std::filesystem::path& path) {
    std::unordered_set<std::string> ids;
    auto dialogues = load_records(path, [&](const json& j) {
        Dialogue d = parse_dialogue(j);
        if (!ids.insert(d.id).second) throw BadRecord{ErrorCode::DuplicateId, "duplicate dialogue id " + d.id};
        return d;
    });
    return dialogues;
}

std::vector<StrudelAnnotation> load_annotations(const std::filesystem::path& path) {
    std::unordered_set<std::string> ids;
    return load_records(path, [&](const json& j) {
        StrudelAnnotation ann;
        ann.dialogue_id = string_field(j, "dialogue_id");
        for (EntryKind kind : kAllEntryKinds) {
            const std::string key(entry_key(kind));
            if (!j.contains(key)) {
                throw BadRecord{ErrorCode::MissingEntry, ann.dialogue_id + ": missing entry '" + key + "'"};
            }
            const std::string text = string_field(j, key.c_str());
            if (trim(text) == kNotApplicable) {
                ann[kind] = std::nullopt;
            } else {
                ann[kind] = text;
            }
        }
        if (auto violations = validate_annotation(ann); !violations.empty()) {
            throw BadRecord{ErrorCode::MalformedRecord, ann.dialogue_id + ": " + violations.front().message};
        }
        if (!ids.insert(ann.dialogue_id).second) {
            throw BadRecord{ErrorCode::DuplicateId, "duplicate annotation for dialogue " + ann.dialogue_id};
        }
        return ann;
    });
}

std::vector<ComprehensionExample> load_examples(const std::filesystem::path& path, TaskKind task_kind) {
    std::unordered_set<std::string> ids;
    return load_records(path, [&](const json& j) {
        ComprehensionExample ex;
        ex.id = string_field(j, "id");
        ex.dialogue = parse_dialogue(field(j, "dialogue"));
        ex.task_kind = task_kind;
        const json& q = field(j, "question");
        if (q.is_string()) {
            if (!trim(q.get<std::string>()).empty()) ex.question = q.get<std::string>();
        } else if (!q.is_null()) {
            throw BadRecord{ErrorCode::MalformedRecord, "question must be a string or null"};
        }
        const bool wants_question = task_kind == TaskKind::QuestionAnswering;
        if (ex.question.has_value() != wants_question) {
            throw BadRecord{ErrorCode::QuestionPresenceMismatch,
                            ex.id + ": question " + (ex.question ? "present" : "absent") + " for task " +
                                std::string(task_kind_name(task_kind))};
        }
        const json& cands = field(j, "candidates");
        if (!cands.is_array()) throw BadRecord{ErrorCode::MalformedRecord, "'candidates' is not an array"};
        for (const json& c : cands) {
            if (!c.is_string() || trim(c.get<std::string>()).empty()) {
                throw BadRecord{ErrorCode::MalformedRecord, ex.id + ": candidates must be non-empty strings"};
            }
            ex.candidates.push_back(c.get<std::string>());
        }
        if (ex.candidates.size() < 2) throw BadRecord{ErrorCode::MalformedRecord, ex.id + ": fewer than 2 candidates"};
        const json& gold = field(j, "gold_index");
        if (!gold.is_number_integer()) throw BadRecord{ErrorCode::MalformedRecord, "gold_index is not an integer"};
        const auto g = gold.get<long long>();
        if (g < 0 || static_cast<std::size_t>(g) >= ex.candidates.size()) {
            throw BadRecord{ErrorCode::GoldIndexOutOfRange,
                            ex.id + ": gold_index " + std::to_string(g) + " with " +
                                std::to_string(ex.candidates.size()) + " candidates"};
        }
        ex.gold_index = static_cast<std::size_t>(g);
        if (!ids.insert(ex.id).second) throw BadRecord{ErrorCode::DuplicateId, "duplicate example id " + ex.id};
        return ex;
    });
}

void write_dialogues(const std::filesystem::path& path, const std::vector<Dialogue>& dialogues) {
    write_records(path, dialogues, dialogue_to_json);
}

void write_annotations(const std::filesystem::path& path, const std::vector<StrudelAnnotation>& anns) {
    write_records(path, anns, [](const StrudelAnnotation& a) {
        json j{{"dialogue_id", a.dialogue_id}};
        for (EntryKind kind : kAllEntryKinds) {
            j[std::string(entry_key(kind))] = a[kind] ? *a[kind] : std::string(kNotApplicable);
        }
        return j;
    });
}

void write_examples(const std::filesystem::path& path, const std::vector<ComprehensionExample>& examples) {
    write_records(path, examples, [](const ComprehensionExample& ex) {
        return json{{"id", ex.id},
                    {"dialogue", dialogue_to_json(ex.dialogue)},
                    {"question", ex.question ? json(*ex.question) : json(nullptr)},
                    {"candidates", ex.candidates},
                    {"gold_index", ex.gold_index}};
    });
}

std::vector<Violation> validate_annotation(const StrudelAnnotation& ann) {
    std::vector<Violation> out;
    if (trim(ann.dialogue_id).empty()) out.push_back({std::nullopt, "dialogue-id", "empty dialogue_id"});
    for (EntryKind kind : kAllEntryKinds) {
        const EntryText& text = ann[kind];
        if (!text) continue;
        const std::string where(entry_key(kind));
        if (trim(*text).empty()) {
            out.push_back({kind, "non-empty", where + ": entry text is empty"});
        } else if (trim(*text) == kNotApplicable) {
            out.push_back({kind, "na-marker", where + ": literal N/A must be the NotApplicable marker"});
        }
    }
    return out;
}

AnnotationStats compute_annotation_stats(const std::vector<StrudelAnnotation>& anns) {
    if (anns.empty()) throw Error(ErrorCode::EmptyInput, "no annotations");
    AnnotationStats stats;
    stats.n_annotations = anns.size();
    for (const StrudelAnnotation& a : anns) {
        for (EntryKind kind : kAllEntryKinds) {
            if (!a[kind]) continue;
            EntryStats& s = stats.per_entry[entry_index(kind)];
            ++s.present;
            s.total_words += count_words(*a[kind]);
        }
    }
    for (EntryStats& s : stats.per_entry) {
        s.appearance_fraction = static_cast<double>(s.present) / static_cast<double>(anns.size());
        s.avg_length_words = s.present == 0 ? 0.0 : static_cast<double>(s.total_words) / static_cast<double>(s.present);
    }
    return stats;
}

}  // namespace strudel

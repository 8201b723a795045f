#pragma once

// Dialogues, structured summary annotations and multiple-choice examples,
// plus their line-delimited JSON record formats.

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "strudel/error.hpp"

namespace strudel {

struct Turn {
    int speaker = 1;  // 1 or 2, positional: the first turn's speaker is 1
    std::string text;

    friend bool operator==(const Turn&, const Turn&) = default;
};

struct Dialogue {
    std::string id;
    std::vector<Turn> turns;

    friend bool operator==(const Dialogue&, const Dialogue&) = default;
};

// Canonical (a)-(g) order.
enum class EntryKind {
    Relationship,
    PurposeTheme,
    TaskIntentionS1,
    TaskIntentionS2,
    ProblemDisagreement,
    Solution,
    ConclusionAgreement,
};

inline constexpr std::size_t kEntryCount = 7;
inline constexpr std::array<EntryKind, kEntryCount> kAllEntryKinds{
    EntryKind::Relationship,        EntryKind::PurposeTheme, EntryKind::TaskIntentionS1,
    EntryKind::TaskIntentionS2,     EntryKind::ProblemDisagreement, EntryKind::Solution,
    EntryKind::ConclusionAgreement,
};

constexpr std::size_t entry_index(EntryKind kind) { return static_cast<std::size_t>(kind); }

// Record field name, e.g. "task_intention_s1".
std::string_view entry_key(EntryKind kind);
// Human-facing row label, e.g. "Task/Intention S1".
std::string_view entry_label(EntryKind kind);
std::optional<EntryKind> entry_from_key(std::string_view key);

inline constexpr std::string_view kNotApplicable = "N/A";

// nullopt is the NotApplicable marker.
using EntryText = std::optional<std::string>;

struct StrudelAnnotation {
    std::string dialogue_id;
    std::array<EntryText, kEntryCount> entries;

    const EntryText& operator[](EntryKind kind) const { return entries[entry_index(kind)]; }
    EntryText& operator[](EntryKind kind) { return entries[entry_index(kind)]; }

    friend bool operator==(const StrudelAnnotation&, const StrudelAnnotation&) = default;
};

enum class TaskKind { QuestionAnswering, ResponsePrediction };

std::string_view task_kind_name(TaskKind kind);
std::optional<TaskKind> task_kind_from_name(std::string_view name);

struct ComprehensionExample {
    std::string id;
    Dialogue dialogue;
    std::optional<std::string> question;  // absent for response prediction
    std::vector<std::string> candidates;
    std::size_t gold_index = 0;
    TaskKind task_kind = TaskKind::ResponsePrediction;

    friend bool operator==(const ComprehensionExample&, const ComprehensionExample&) = default;
};

struct EntryStats {
    std::size_t present = 0;      // annotations where the entry is not N/A
    std::size_t total_words = 0;  // summed over present entries
    double appearance_fraction = 0.0;
    double avg_length_words = 0.0;  // 0 when the entry is never present
};

struct AnnotationStats {
    std::size_t n_annotations = 0;
    std::array<EntryStats, kEntryCount> per_entry{};

    const EntryStats& operator[](EntryKind kind) const { return per_entry[entry_index(kind)]; }
};

struct Violation {
    std::optional<EntryKind> entry;
    std::string rule;
    std::string message;
};

// One bad line in a record file.
struct RecordProblem {
    std::size_t line = 0;
    ErrorCode code = ErrorCode::MalformedRecord;
    std::string message;
};

// Thrown by the loaders; carries every offending line, code() is the first one's.
class LoadError : public Error {
public:
    LoadError(std::vector<RecordProblem> problems, const std::string& path);

    const std::vector<RecordProblem>& problems() const noexcept { return problems_; }

private:
    std::vector<RecordProblem> problems_;
};

std::size_t count_words(std::string_view text);

std::vector<Dialogue> load_dialogues(const std::filesystem::path& path);
std::vector<StrudelAnnotation> load_annotations(const std::filesystem::path& path);
std::vector<ComprehensionExample> load_examples(const std::filesystem::path& path, TaskKind task_kind);

void write_dialogues(const std::filesystem::path& path, const std::vector<Dialogue>& dialogues);
void write_annotations(const std::filesystem::path& path, const std::vector<StrudelAnnotation>& anns);
void write_examples(const std::filesystem::path& path, const std::vector<ComprehensionExample>& examples);

// Structural checks only; empty result means valid.
std::vector<Violation> validate_annotation(const StrudelAnnotation& ann);
// Throws EmptyInput on an empty list.
AnnotationStats compute_annotation_stats(const std::vector<StrudelAnnotation>& anns);

// Dialogue invariants (non-empty, speakers 1/2 with both present, non-empty
// turn texts). Returns a description of the first problem or nullopt.
std::optional<std::string> dialogue_problem(const Dialogue& d);

}  // namespace strudel

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <string>

#include "strudel/corpus.hpp"
#include "support.hpp"

using namespace strudel;
using strudel::testing::fixture;
using strudel::testing::TempDir;

namespace {

ErrorCode load_error_code(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::Io;
}

StrudelAnnotation one_word_annotation(const std::string& id) {
    StrudelAnnotation a;
    a.dialogue_id = id;
    for (EntryKind k : kAllEntryKinds) a[k] = "word";
    return a;
}

}  // namespace

TEST_SUITE("corpus") {
    TEST_CASE("cinema dialogue loads with positional speakers") {
        const auto ds = load_dialogues(fixture("cinema_dialogue.jsonl"));
        REQUIRE(ds.size() == 1);
        REQUIRE(ds[0].turns.size() == 6);
        const int expect[] = {1, 2, 1, 2, 1, 2};
        for (std::size_t i = 0; i < 6; ++i) CHECK(ds[0].turns[i].speaker == expect[i]);
    }

    TEST_CASE("empty file gives an empty list") {
        TempDir tmp;
        CHECK(load_dialogues(tmp.write("empty.jsonl", "")).empty());
        CHECK(load_annotations(tmp.write("blank.jsonl", "\n\n")).empty());
    }

    TEST_CASE("speaker 3 is rejected with its line") {
        try {
            load_dialogues(fixture("bad_speaker.jsonl"));
            FAIL("expected InvalidSpeaker");
        } catch (const LoadError& e) {
            CHECK(e.code() == ErrorCode::InvalidSpeaker);
            REQUIRE(e.problems().size() == 1);
            CHECK(e.problems()[0].line == 2);
        }
    }

    TEST_CASE("dialogue loader errors") {
        TempDir tmp;
        const std::string ok = R"({"id":"a","turns":[{"speaker":1,"text":"Hi."},{"speaker":2,"text":"Hello."}]})";
        CHECK(load_error_code([&] { load_dialogues(tmp.write("dup.jsonl", ok + "\n" + ok + "\n")); }) ==
              ErrorCode::DuplicateId);
        CHECK(load_error_code([&] {
                  load_dialogues(tmp.write("one.jsonl", R"({"id":"b","turns":[{"speaker":1,"text":"Hi."}]})"));
              }) == ErrorCode::InvalidSpeaker);
        CHECK(load_error_code([&] { load_dialogues(tmp.write("junk.jsonl", "{not json\n")); }) ==
              ErrorCode::MalformedRecord);
    }

    TEST_CASE("every bad line is reported") {
        TempDir tmp;
        const std::string ok = R"({"id":"a","turns":[{"speaker":1,"text":"Hi."},{"speaker":2,"text":"Hello."}]})";
        try {
            load_dialogues(tmp.write("many.jsonl", "{bad\n" + ok + "\n[]\n"));
            FAIL("expected a LoadError");
        } catch (const LoadError& e) {
            REQUIRE(e.problems().size() == 2);
            CHECK(e.problems()[0].line == 1);
            CHECK(e.problems()[1].line == 3);
        }
    }

    TEST_CASE("speaker labels are positional") {
        TempDir tmp;
        const auto ds = load_dialogues(tmp.write(
            "swap.jsonl", R"({"id":"s","turns":[{"speaker":2,"text":"Hi."},{"speaker":1,"text":"Yo."},{"speaker":2,"text":"Bye."}]})"));
        REQUIRE(ds.size() == 1);
        CHECK(ds[0].turns[0].speaker == 1);
        CHECK(ds[0].turns[1].speaker == 2);
        CHECK(ds[0].turns[2].speaker == 1);
    }

    TEST_CASE("cinema annotation has seven entries and validates") {
        const auto anns = load_annotations(fixture("cinema_annotation.jsonl"));
        REQUIRE(anns.size() == 1);
        CHECK(anns[0][EntryKind::Relationship] == std::optional<std::string>("Wife and husband."));
        CHECK(anns[0][EntryKind::ConclusionAgreement] ==
              std::optional<std::string>("Go to the cinema and come home together, but watch different films."));
        for (EntryKind k : kAllEntryKinds) CHECK(anns[0][k].has_value());
        CHECK(validate_annotation(anns[0]).empty());
    }

    TEST_CASE("N/A is normalized and six entries are rejected") {
        TempDir tmp;
        std::string rec = R"({"dialogue_id":"x")";
        for (EntryKind k : kAllEntryKinds) rec += ",\"" + std::string(entry_key(k)) + "\":\"N/A\"";
        rec += "}";
        const auto anns = load_annotations(tmp.write("na.jsonl", rec + "\n"));
        REQUIRE(anns.size() == 1);
        for (EntryKind k : kAllEntryKinds) CHECK_FALSE(anns[0][k].has_value());
        CHECK(load_error_code([] { load_annotations(fixture("six_entries.jsonl")); }) == ErrorCode::MissingEntry);
    }

    TEST_CASE("validate_annotation rules") {
        StrudelAnnotation a = one_word_annotation("v");
        a[EntryKind::Solution] = "";
        auto v = validate_annotation(a);
        REQUIRE(v.size() == 1);
        CHECK(v[0].rule == "non-empty");
        CHECK(v[0].entry == EntryKind::Solution);

        a[EntryKind::Solution] = "N/A";
        v = validate_annotation(a);
        REQUIRE(v.size() == 1);
        CHECK(v[0].rule == "na-marker");

        StrudelAnnotation all_na;
        all_na.dialogue_id = "n";
        CHECK(validate_annotation(all_na).empty());
    }

    TEST_CASE("annotation statistics") {
        const auto pair = load_annotations(fixture("stats_pair.jsonl"));
        const auto stats = compute_annotation_stats(pair);
        CHECK(stats.n_annotations == 2);
        CHECK(stats[EntryKind::Relationship].appearance_fraction == 0.5);
        CHECK(stats[EntryKind::Relationship].avg_length_words == 3.0);

        StrudelAnnotation na;
        na.dialogue_id = "z";
        const auto none = compute_annotation_stats({na, na});
        for (EntryKind k : kAllEntryKinds) {
            CHECK(none[k].appearance_fraction == 0.0);
            CHECK(none[k].avg_length_words == 0.0);
        }
        const auto single = compute_annotation_stats({one_word_annotation("o")});
        for (EntryKind k : kAllEntryKinds) {
            CHECK(single[k].appearance_fraction == 1.0);
            CHECK(single[k].avg_length_words == 1.0);
        }
        CHECK(load_error_code([] { compute_annotation_stats({}); }) == ErrorCode::EmptyInput);
    }

    TEST_CASE("statistics are permutation invariant and count records") {
        auto anns = load_annotations(fixture("annotations.jsonl"));
        const auto base = compute_annotation_stats(anns);
        std::reverse(anns.begin(), anns.end());
        std::rotate(anns.begin(), anns.begin() + 3, anns.end());
        const auto perm = compute_annotation_stats(anns);
        for (EntryKind k : kAllEntryKinds) {
            CHECK(base[k].appearance_fraction == perm[k].appearance_fraction);
            CHECK(base[k].avg_length_words == perm[k].avg_length_words);
            const double count = base[k].appearance_fraction * static_cast<double>(anns.size());
            CHECK(count == std::round(count));
        }
    }

    TEST_CASE("word counts split on whitespace only") {
        CHECK(count_words("Wife and husband.") == 3);
        CHECK(count_words("  spaced\tout \n words ") == 3);
        CHECK(count_words("") == 0);
    }

    TEST_CASE("examples: response prediction and question answering") {
        const auto rp = load_examples(fixture("examples.jsonl"), TaskKind::ResponsePrediction);
        REQUIRE(rp.size() == 16);
        CHECK(rp[0].candidates.size() == 4);
        CHECK_FALSE(rp[0].question.has_value());
        CHECK(rp[0].task_kind == TaskKind::ResponsePrediction);

        const auto qa = load_examples(fixture("cinema_qa.jsonl"), TaskKind::QuestionAnswering);
        REQUIRE(qa.size() == 1);
        CHECK(qa[0].question == std::optional<std::string>("What will Bill watch?"));
        CHECK(qa[0].candidates.size() == 3);
        CHECK(qa[0].gold_index == 1);
    }

    TEST_CASE("example loader errors") {
        CHECK(load_error_code([] { load_examples(fixture("bad_gold.jsonl"), TaskKind::ResponsePrediction); }) ==
              ErrorCode::GoldIndexOutOfRange);
        CHECK(load_error_code([] { load_examples(fixture("cinema_qa.jsonl"), TaskKind::ResponsePrediction); }) ==
              ErrorCode::QuestionPresenceMismatch);
        CHECK(load_error_code([] { load_examples(fixture("examples.jsonl"), TaskKind::QuestionAnswering); }) ==
              ErrorCode::QuestionPresenceMismatch);
        TempDir tmp;
        const std::string one_candidate =
            R"({"id":"e","dialogue":{"id":"d","turns":[{"speaker":1,"text":"a"},{"speaker":2,"text":"b"}]},"question":null,"candidates":["x"],"gold_index":0})";
        CHECK(load_error_code([&] {
                  load_examples(tmp.write("one.jsonl", one_candidate + "\n"), TaskKind::ResponsePrediction);
              }) == ErrorCode::MalformedRecord);
    }

    TEST_CASE("write then load reproduces the records") {
        TempDir tmp;
        const auto ds = load_dialogues(fixture("dialogues.jsonl"));
        write_dialogues(tmp.path() / "d.jsonl", ds);
        CHECK(load_dialogues(tmp.path() / "d.jsonl") == ds);

        auto anns = load_annotations(fixture("annotations.jsonl"));
        const auto pair = load_annotations(fixture("stats_pair.jsonl"));
        anns.insert(anns.end(), pair.begin(), pair.end());
        write_annotations(tmp.path() / "a.jsonl", anns);
        CHECK(load_annotations(tmp.path() / "a.jsonl") == anns);

        const auto rp = load_examples(fixture("examples.jsonl"), TaskKind::ResponsePrediction);
        write_examples(tmp.path() / "e.jsonl", rp);
        CHECK(load_examples(tmp.path() / "e.jsonl", TaskKind::ResponsePrediction) == rp);
        const auto qa = load_examples(fixture("examples_qa.jsonl"), TaskKind::QuestionAnswering);
        write_examples(tmp.path() / "q.jsonl", qa);
        CHECK(load_examples(tmp.path() / "q.jsonl", TaskKind::QuestionAnswering) == qa);
    }
}

#include "strudel/synthetic.hpp"

#include <array>
#include <string_view>

#include "strudel/error.hpp"
#include "strudel/rng.hpp"

namespace strudel {

namespace {

struct Scenario {
    std::string_view opener;
    std::string_view theme;
    std::string_view question;
    std::array<std::string_view, 8> items;
};

constexpr std::array<Scenario, 3> kScenarios{{
    {"Shall we get dinner together tonight?", "Decide what to eat for dinner.", "What will the speakers eat?",
     {"pasta", "curry", "sushi", "salad", "pizza", "tacos", "dumplings", "noodles"}},
    {"Do you want to see a film this weekend?", "Pick a film to watch at the cinema.",
     "Which film will the speakers watch?",
     {"comedy", "thriller", "cartoon", "documentary", "western", "musical", "horror", "romance"}},
    {"Where should we go on Saturday?", "Plan a day trip for Saturday.", "Where will the speakers go?",
     {"beach", "mountains", "museum", "lake", "zoo", "park", "island", "castle"}},
}};

constexpr std::array<std::string_view, 5> kRelationships{"Wife and husband.", "Two colleagues.", "Old friends.",
                                                         "Brother and sister.", "Two neighbours."};

constexpr std::array<std::string_view, 4> kDecisions{"OK, let us settle on {X} then.", "Alright, we will go with {X}.",
                                                     "Fine, {X} works for both of us.",
                                                     "Let us just choose {X} and stop arguing."};

std::string fill(std::string_view templ, std::string_view item) {
    std::string out(templ);
    const auto pos = out.find("{X}");
    if (pos != std::string::npos) out.replace(pos, 3, item);
    return out;
}

std::string cap(std::string_view s) {
    std::string out(s);
    if (!out.empty() && out[0] >= 'a' && out[0] <= 'z') out[0] = static_cast<char>(out[0] - 'a' + 'A');
    return out;
}

}  // namespace

SyntheticCorpus make_synthetic_corpus(const SyntheticSpec& spec) {
    if (spec.item_pool < 4 || spec.item_pool > 8) throw Error(ErrorCode::ConfigInvalid, "item_pool must be in [4, 8]");
    if (spec.candidates < 2 || spec.candidates > spec.item_pool) {
        throw Error(ErrorCode::ConfigInvalid, "synthetic candidates must be in [2, item_pool]");
    }
    if (spec.scenarios < 1 || spec.scenarios > kScenarios.size()) {
        throw Error(ErrorCode::ConfigInvalid, "scenarios must be in [1, 3]");
    }
    Rng rng(spec.seed);
    SyntheticCorpus out;
    for (std::size_t di = 0; di < spec.dialogues; ++di) {
        const Scenario& sc = kScenarios[rng.below(spec.scenarios)];
        std::vector<std::string_view> items(sc.items.begin(), sc.items.begin() + spec.item_pool);
        rng.shuffle(items);
        // Four mentioned options A..D, one of which is settled on.
        const std::string_view a = items[0], b = items[1], c = items[2], d = items[3];
        const std::string_view settled = items[rng.below(4)];
        std::string_view leftover = items[rng.below(4)];
        while (leftover == settled) leftover = items[rng.below(4)];

        Dialogue dlg;
        dlg.id = spec.id_prefix + "-d" + std::to_string(di);
        dlg.turns.push_back({1, std::string(sc.opener) + " How about " + std::string(a) + "?"});
        dlg.turns.push_back({2, "I am not sure about " + std::string(a) + ". I would rather have " + std::string(b) + "."});
        dlg.turns.push_back({1, cap(c) + " could also work, and " + std::string(d) + " is an option too."});
        dlg.turns.push_back({2, fill(kDecisions[rng.below(kDecisions.size())], settled)});
        if (rng.below(2) == 0) {
            dlg.turns.push_back({1, "Good. Maybe " + std::string(leftover) + " next time."});
        } else {
            dlg.turns.push_back({1, "Good, I am happy with that."});
        }
        out.dialogues.push_back(dlg);

        StrudelAnnotation ann;
        ann.dialogue_id = dlg.id;
        ann[EntryKind::Relationship] = std::string(kRelationships[rng.below(kRelationships.size())]);
        ann[EntryKind::PurposeTheme] = std::string(sc.theme);
        ann[EntryKind::TaskIntentionS1] = "Suggest " + std::string(a) + ".";
        ann[EntryKind::TaskIntentionS2] = "Prefer " + std::string(b) + ".";
        if (rng.below(5) != 0) {
            ann[EntryKind::ProblemDisagreement] = "They disagree about " + std::string(a) + " and " + std::string(b) + ".";
        }
        ann[EntryKind::Solution] = "They settle on " + std::string(settled) + ".";
        if (rng.below(5) != 0) ann[EntryKind::ConclusionAgreement] = "Go for " + std::string(settled) + " together.";
        out.annotations.push_back(std::move(ann));

        for (std::size_t ei = 0; ei < spec.examples_per_dialogue; ++ei) {
            // Distractors: the other mentioned options first, then unmentioned ones.
            std::vector<std::string_view> pool;
            for (std::size_t i = 0; i < 4; ++i) {
                if (items[i] != settled) pool.push_back(items[i]);
            }
            rng.shuffle(pool);
            for (std::size_t i = 4; i < items.size(); ++i) pool.push_back(items[i]);
            std::vector<std::string_view> chosen{settled};
            for (std::size_t i = 0; chosen.size() < spec.candidates; ++i) chosen.push_back(pool[i]);
            rng.shuffle(chosen);

            ComprehensionExample ex;
            ex.id = dlg.id + "-e" + std::to_string(ei);
            ex.dialogue = dlg;
            ex.task_kind = spec.task;
            if (spec.task == TaskKind::QuestionAnswering) ex.question = std::string(sc.question);
            for (std::size_t i = 0; i < chosen.size(); ++i) {
                if (chosen[i] == settled) ex.gold_index = i;
                ex.candidates.push_back(spec.task == TaskKind::QuestionAnswering
                                            ? cap(chosen[i]) + "."
                                            : "Great, I will get ready for " + std::string(chosen[i]) + ".");
            }
            out.examples.push_back(std::move(ex));
        }
    }
    return out;
}

}  // namespace strudel

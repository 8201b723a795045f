// Regenerates the synthetic training fixture:
//   make_fixtures <out_dir>
// writes dialogues.jsonl, annotations.jsonl, examples.jsonl (response
// prediction) and examples_qa.jsonl (question answering).

#include <cstdio>
#include <filesystem>

#include "strudel/corpus.hpp"
#include "strudel/synthetic.hpp"

int main(int argc, char** argv) {
    if (argc != 2) {
        std::fprintf(stderr, "usage: make_fixtures <out_dir>\n");
        return 2;
    }
    const std::filesystem::path out(argv[1]);
    std::filesystem::create_directories(out);

    strudel::SyntheticSpec spec;  // 8 dialogues, 2 four-candidate examples each, seed 7
    const auto rp = strudel::make_synthetic_corpus(spec);
    strudel::write_dialogues(out / "dialogues.jsonl", rp.dialogues);
    strudel::write_annotations(out / "annotations.jsonl", rp.annotations);
    strudel::write_examples(out / "examples.jsonl", rp.examples);

    spec.task = strudel::TaskKind::QuestionAnswering;
    spec.candidates = 3;
    strudel::write_examples(out / "examples_qa.jsonl", strudel::make_synthetic_corpus(spec).examples);
    return 0;
}

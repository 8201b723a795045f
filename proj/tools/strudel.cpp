#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "strudel/corpus.hpp"
#include "strudel/error.hpp"
#include "strudel/evaluation.hpp"
#include "strudel/io.hpp"
#include "strudel/prompting.hpp"
#include "strudel/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace strudel;

namespace {

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Common& c, bool needs_out) {
    cmd->add_option("--config", c.config, "flat JSON config file")->check(CLI::ExistingFile);
    cmd->add_option("--seed", c.seed, "overrides the config seed");
    auto* out = cmd->add_option("--out", c.out, "output directory");
    if (needs_out) out->required();
    cmd->add_option("--set", c.overrides, "config override key=value (repeatable)");
}

TrainConfig resolve_config(const Common& c) {
    TrainConfig cfg;
    if (!c.config.empty()) {
        try {
            cfg = TrainConfig::from_json(json::parse(read_file(c.config)));
        } catch (const json::exception& e) {
            throw Error(ErrorCode::ConfigInvalid, c.config + ": " + e.what());
        }
    }
    for (const std::string& kv : c.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw Error(ErrorCode::ConfigInvalid, "--set expects key=value, got '" + kv + "'");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (c.seed) cfg.seed = *c.seed;
    cfg.validate();
    return cfg;
}

TaskKind parse_task(const std::string& name) {
    if (auto t = task_kind_from_name(name)) return *t;
    throw Error(ErrorCode::ConfigInvalid, "task must be qa or rp, got '" + name + "'");
}

class Manifest {
public:
    Manifest(std::string command, const TrainConfig* cfg) : started_(utc_now()) {
        doc_["command"] = std::move(command);
        doc_["config"] = cfg ? cfg->to_json() : json(nullptr);
        doc_["seed"] = cfg ? json(cfg->seed) : json(nullptr);
        doc_["inputs"] = json::object();
        doc_["outputs"] = json::array();
    }

    void input(const std::string& path) { doc_["inputs"][path] = hex64(fnv1a64(read_file(path))); }
    void output(const fs::path& path) { doc_["outputs"].push_back(path.string()); }
    json& extra() { return doc_; }

    void write(const fs::path& dir) {
        doc_["started_at"] = started_;
        doc_["finished_at"] = utc_now();
        write_file_atomic(dir / "manifest.json", doc_.dump(2) + "\n");
    }

private:
    std::string started_;
    json doc_;
};

// what() already lists every offending line.
void print_load_error(const LoadError& e) { std::cerr << e.what() << '\n'; }

int cmd_validate(const std::string& dialogues_path, const std::string& annotations_path) {
    std::vector<Dialogue> dialogues;
    std::vector<StrudelAnnotation> anns;
    try {
        dialogues = load_dialogues(dialogues_path);
        anns = load_annotations(annotations_path);
    } catch (const LoadError& e) {
        print_load_error(e);
        return 1;
    }
    std::set<std::string> ids;
    for (const Dialogue& d : dialogues) ids.insert(d.id);
    std::size_t problems = 0;
    for (const StrudelAnnotation& a : anns) {
        if (!ids.count(a.dialogue_id)) {
            std::cout << a.dialogue_id << ": unknown-dialogue: no dialogue with this id\n";
            ++problems;
        }
        for (const Violation& v : validate_annotation(a)) {
            std::cout << a.dialogue_id << ": " << v.rule;
            if (v.entry) std::cout << " [" << entry_key(*v.entry) << "]";
            std::cout << ": " << v.message << '\n';
            ++problems;
        }
    }
    std::cout << dialogues.size() << " dialogues, " << anns.size() << " annotations, " << problems << " problems\n";
    return problems == 0 ? 0 : 1;
}

int cmd_stats(const std::string& annotations_path) {
    const AnnotationStats stats = compute_annotation_stats(load_annotations(annotations_path));
    std::printf("%-22s %8s %8s\n", "entry", "appear", "avg_len");
    for (EntryKind k : kAllEntryKinds) {
        const EntryStats& s = stats[k];
        std::printf("%-22s %7.1f%% %8.2f\n", std::string(entry_label(k)).c_str(), 100.0 * s.appearance_fraction,
                    s.avg_length_words);
    }
    std::printf("annotations: %zu\n", stats.n_annotations);
    return 0;
}

int cmd_prompts() {
    for (EntryKind k : kAllEntryKinds) std::cout << entry_key(k) << '\t' << prompt_question(k).text << '\n';
    return 0;
}

struct TrainPaths {
    std::string dialogues, annotations, examples, checkpoint, task = "rp";
};

LoadedCheckpoint load_for(const std::string& path, const TrainConfig& cfg) {
    const ModelConfig expected = cfg.model_config();
    return load_checkpoint(path, &expected);
}

int cmd_posttrain(const Common& c, const TrainPaths& p) {
    const TrainConfig cfg = resolve_config(c);
    Manifest manifest("posttrain", &cfg);
    TrainingCorpus corpus;
    corpus.annotated = join_annotations(load_dialogues(p.dialogues), load_annotations(p.annotations));
    corpus.examples = load_examples(p.examples, parse_task(p.task));
    for (const auto* in : {&p.dialogues, &p.annotations, &p.examples}) manifest.input(*in);

    StrudelModel model = StrudelModel::create(cfg.model_config(), cfg.seed);
    const TrainResult r = posttrain(model, corpus, cfg);

    const fs::path out(c.out);
    fs::create_directories(out);
    save_checkpoint(out / "checkpoint.json", model, {"posttrain", r.steps, cfg.seed, r.rng_state});
    write_file_atomic(out / "loss_curve.json", json(r.loss_curve).dump() + "\n");
    manifest.output(out / "checkpoint.json");
    manifest.output(out / "loss_curve.json");
    manifest.extra()["probe_loss_before"] = r.probe_before;
    manifest.extra()["probe_loss_after"] = r.probe_after;
    manifest.write(out);
    std::printf("posttrain steps=%zu probe_before=%.6f probe_after=%.6f\n", r.steps, r.probe_before, r.probe_after);
    return 0;
}

int cmd_finetune(const Common& c, const TrainPaths& p) {
    const TrainConfig cfg = resolve_config(c);
    Manifest manifest("finetune", &cfg);
    const auto examples = load_examples(p.examples, parse_task(p.task));
    manifest.input(p.checkpoint);
    manifest.input(p.examples);

    LoadedCheckpoint ck = load_for(p.checkpoint, cfg);
    const TrainResult r = finetune(ck.model, examples, cfg);

    const fs::path out(c.out);
    fs::create_directories(out);
    save_checkpoint(out / "checkpoint.json", ck.model, {"finetune", ck.meta.step + r.steps, cfg.seed, r.rng_state});
    write_file_atomic(out / "loss_curve.json", json(r.loss_curve).dump() + "\n");
    manifest.output(out / "checkpoint.json");
    manifest.output(out / "loss_curve.json");
    manifest.extra()["probe_loss_before"] = r.probe_before;
    manifest.extra()["probe_loss_after"] = r.probe_after;
    manifest.extra()["train_accuracy"] = accuracy_on(ck.model, examples);
    manifest.write(out);
    std::printf("finetune steps=%zu probe_before=%.6f probe_after=%.6f train_accuracy=%.6f\n", r.steps,
                r.probe_before, r.probe_after, manifest.extra()["train_accuracy"].get<double>());
    return 0;
}

int cmd_evaluate(const Common& c, const TrainPaths& p, const std::string& scores_in) {
    std::vector<ScoredExample> scored;
    std::optional<TrainConfig> cfg;
    std::vector<std::string> inputs;
    if (!scores_in.empty()) {
        scored = load_scores(scores_in);
        inputs.push_back(scores_in);
    } else {
        if (p.checkpoint.empty() || p.examples.empty()) {
            throw Error(ErrorCode::ConfigInvalid, "evaluate needs --checkpoint and --examples, or --scores");
        }
        cfg = resolve_config(c);
        const auto examples = load_examples(p.examples, parse_task(p.task));
        const LoadedCheckpoint ck = load_for(p.checkpoint, *cfg);
        scored = score_examples(ck.model, examples);
        inputs = {p.checkpoint, p.examples};
    }
    const MetricsReport report = aggregate_metrics(scored);
    std::cout << report.to_kv_line() << '\n' << report.to_table();
    if (!c.out.empty()) {
        const fs::path out(c.out);
        fs::create_directories(out);
        Manifest manifest("evaluate", cfg ? &*cfg : nullptr);
        for (const auto& in : inputs) manifest.input(in);
        write_file_atomic(out / "metrics.txt", report.to_kv_line() + "\n");
        write_scores(out / "scores.jsonl", scored);
        manifest.output(out / "metrics.txt");
        manifest.output(out / "scores.jsonl");
        manifest.write(out);
    }
    return 0;
}

int cmd_predict(const Common& c, const TrainPaths& p, const std::string& example_id) {
    const TrainConfig cfg = resolve_config(c);
    const auto examples = load_examples(p.examples, parse_task(p.task));
    const ComprehensionExample* ex = nullptr;
    for (const auto& e : examples) {
        if (example_id.empty() || e.id == example_id) {
            ex = &e;
            break;
        }
    }
    if (!ex) throw Error(ErrorCode::IndexOutOfRange, "no example with id '" + example_id + "'");
    const LoadedCheckpoint ck = load_for(p.checkpoint, cfg);
    const auto probs = predict(ck.model, *ex);
    std::cout << "example " << ex->id << " gold " << ex->gold_index << " predicted " << argmax(probs) << '\n';
    for (std::size_t i = 0; i < probs.size(); ++i) {
        std::printf("%zu\t%.6f\t%s\n", i, probs[i], ex->candidates[i].c_str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Structured dialogue summarization for dialogue comprehension"};
    app.require_subcommand(1);

    std::string dialogues, annotations;
    auto* validate = app.add_subcommand("validate", "check annotations against dialogues");
    validate->add_option("--dialogues", dialogues)->required()->check(CLI::ExistingFile);
    validate->add_option("--annotations", annotations)->required()->check(CLI::ExistingFile);

    auto* stats = app.add_subcommand("stats", "per-entry appearance and length table");
    stats->add_option("--annotations", annotations)->required()->check(CLI::ExistingFile);

    app.add_subcommand("prompts", "print the seven prompt questions");

    Common common;
    TrainPaths paths;
    auto* post = app.add_subcommand("posttrain", "multi-task post-training");
    add_common(post, common, true);
    post->add_option("--dialogues", paths.dialogues)->required()->check(CLI::ExistingFile);
    post->add_option("--annotations", paths.annotations)->required()->check(CLI::ExistingFile);
    post->add_option("--examples", paths.examples)->required()->check(CLI::ExistingFile);
    post->add_option("--task", paths.task, "qa or rp");

    auto* fine = app.add_subcommand("finetune", "single-task fine-tuning from a checkpoint");
    add_common(fine, common, true);
    fine->add_option("--checkpoint", paths.checkpoint)->required()->check(CLI::ExistingFile);
    fine->add_option("--examples", paths.examples)->required()->check(CLI::ExistingFile);
    fine->add_option("--task", paths.task, "qa or rp");

    std::string scores_in;
    auto* eval = app.add_subcommand("evaluate", "R@1, R@2, MRR and accuracy");
    add_common(eval, common, false);
    eval->add_option("--checkpoint", paths.checkpoint)->check(CLI::ExistingFile);
    eval->add_option("--examples", paths.examples)->check(CLI::ExistingFile);
    eval->add_option("--task", paths.task, "qa or rp");
    eval->add_option("--scores", scores_in, "score records to aggregate instead of a model")->check(CLI::ExistingFile);

    std::string example_id;
    auto* pred = app.add_subcommand("predict", "candidate probabilities for one example");
    add_common(pred, common, false);
    pred->add_option("--checkpoint", paths.checkpoint)->required()->check(CLI::ExistingFile);
    pred->add_option("--examples", paths.examples)->required()->check(CLI::ExistingFile);
    pred->add_option("--task", paths.task, "qa or rp");
    pred->add_option("--id", example_id, "example id (default: first)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate->parsed()) return cmd_validate(dialogues, annotations);
        if (stats->parsed()) return cmd_stats(annotations);
        if (post->parsed()) return cmd_posttrain(common, paths);
        if (fine->parsed()) return cmd_finetune(common, paths);
        if (eval->parsed()) return cmd_evaluate(common, paths, scores_in);
        if (pred->parsed()) return cmd_predict(common, paths, example_id);
        return cmd_prompts();
    } catch (const LoadError& e) {
        print_load_error(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
    }
    return 1;
}

#include "tadbench/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <thread>

#include "tadbench/attacks.hpp"
#include "tadbench/error.hpp"
#include "tadbench/io_util.hpp"
#include "tadbench/tokens.hpp"

namespace tad {

namespace {

constexpr const char* kModelName = "textcls";

std::string run_prefix(const RunConfig& cfg, const std::string& defence_name,
                       std::uint64_t seed) {
    return cfg.dataset.name + "_" + defence_name + "_s" + std::to_string(seed);
}

std::string join_path(const std::string& dir, const std::string& file) {
    return (std::filesystem::path(dir) / file).string();
}

// Runs fn(0..n-1) on `workers` threads; the first exception wins and is
// rethrown on the calling thread.
void parallel_for(std::size_t n, std::size_t workers,
                  const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    workers = std::max<std::size_t>(1, std::min(workers, n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;
    auto body = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

DatasetSplits load_splits(const RunConfig& cfg, std::uint64_t seed) {
    if (cfg.dataset.kind == "synth") {
        DatasetSplits splits = synth_dataset(cfg.dataset.synth, seed);
        splits.train.name = cfg.dataset.name;
        splits.val.name = cfg.dataset.name;
        splits.test.name = cfg.dataset.name;
        return splits;
    }
    DatasetSplits splits;
    splits.train =
        load_dataset(cfg.dataset.train_path, cfg.dataset.format, cfg.dataset.name);
    splits.val =
        load_dataset(cfg.dataset.val_path, cfg.dataset.format, cfg.dataset.name);
    splits.test =
        load_dataset(cfg.dataset.test_path, cfg.dataset.format, cfg.dataset.name);
    const std::size_t c = std::max({splits.train.num_classes,
                                    splits.val.num_classes,
                                    splits.test.num_classes});
    if (splits.train.ranking != splits.val.ranking ||
        splits.train.ranking != splits.test.ranking)
        throw ConfigError("config: splits disagree on task shape");
    splits.train.num_classes = c;
    splits.val.num_classes = c;
    splits.test.num_classes = c;
    return splits;
}

}  // namespace

std::vector<std::string> attack_words(const Example& ex) {
    std::vector<std::string> words = tokenize(ex.text_a);
    if (ex.text_b) {
        words.push_back(Vocabulary::kSepWord);
        const std::vector<std::string> b = tokenize(*ex.text_b);
        words.insert(words.end(), b.begin(), b.end());
    }
    return words;
}

PreparedData prepare_data(const RunConfig& cfg, std::uint64_t seed) {
    DatasetSplits splits = load_splits(cfg, seed);
    Vocabulary vocab = Vocabulary::build(splits.train.examples, cfg.model.min_count);
    EncodedDataset train = encode_dataset(splits.train, vocab);
    EncodedDataset val = encode_dataset(splits.val, vocab);
    EncodedDataset test = encode_dataset(splits.test, vocab);
    SynonymTable synonyms;
    if (!cfg.synonyms.file.empty()) {
        synonyms = load_synonym_table(cfg.synonyms.file, vocab);
    } else {
        std::vector<std::vector<int>> docs;
        docs.reserve(train.examples.size());
        for (const auto& ex : train.examples) docs.push_back(ex.tokens);
        synonyms = build_synonym_table(docs, cfg.synonyms.embed_dim,
                                       cfg.synonyms.k, cfg.synonyms.window);
    }
    return PreparedData{std::move(splits), std::move(vocab), std::move(train),
                        std::move(val), std::move(test), std::move(synonyms)};
}

TextClassifier build_model(const RunConfig& cfg, const PreparedData& data,
                           std::uint64_t seed) {
    const std::size_t num_outputs = data.train.ranking ? 1 : data.train.num_classes;
    if (!data.train.ranking && data.train.num_classes < 2)
        throw ConfigError("config: classification needs >= 2 classes");
    ModelConfig mc;
    mc.embed_dim = cfg.model.embed_dim;
    mc.hidden_dim = cfg.model.hidden_dim;
    Rng init_rng = Rng(seed).derive("init");
    return TextClassifier(data.vocab.size(), num_outputs, mc, init_rng);
}

TrainOutput cmd_train(const RunConfig& cfg, std::uint64_t seed,
                      const std::string& out_dir) {
    const std::string dir = out_dir.empty() ? cfg.out_dir : out_dir;
    ensure_directory(dir);
    PreparedData data = prepare_data(cfg, seed);
    if (data.train.ranking && cfg.defence.adversarial())
        throw ConfigError(
            "config: adversarial defences support classification datasets only");
    TextClassifier model = build_model(cfg, data, seed);

    TrainConfig tc = cfg.train;
    tc.seed = seed;
    TrainOutput out;
    out.result = train(model, data.train, data.val, cfg.defence, tc);

    const std::string prefix = run_prefix(cfg, cfg.defence.name(), seed);
    out.checkpoint_path = join_path(dir, prefix + "_checkpoint.json");
    out.stats_csv_path = join_path(dir, prefix + "_train.csv");

    nlohmann::json meta;
    meta["dataset"] = cfg.dataset.name;
    meta["defence"] = cfg.defence.name();
    meta["seed"] = seed;
    meta["best_epoch"] = out.result.best_epoch;
    meta["best_val_acc"] = out.result.best_val_acc;
    write_json_file(out.checkpoint_path,
                    model.to_checkpoint(data.vocab.hash(), meta));

    std::string csv = "epoch,train_loss,val_acc,wall_ms\n";
    for (const auto& e : out.result.epochs)
        csv += join_csv_row({std::to_string(e.epoch), format_double(e.train_loss),
                             format_double(e.val_acc), format_double(e.wall_ms)});
    write_text_file(out.stats_csv_path, csv);
    return out;
}

namespace {

struct EpisodeOutcome {
    AttackResult result;
    nlohmann::json transcript;
};

// Attacks every test example with one configured attack; episodes run on the
// worker pool, results land in example order.
std::vector<EpisodeOutcome> run_attack_episodes(
    const RunConfig& cfg, const PreparedData& data, const TextClassifier& model,
    const AttackSpec& spec, std::size_t n_attacked) {
    std::vector<EpisodeOutcome> outcomes(n_attacked);
    parallel_for(n_attacked, cfg.workers, [&](std::size_t i) {
        const Example& raw = data.splits.test.examples[i];
        const EncodedExample& enc = data.test.examples[i];
        std::vector<std::string> words;
        Victim victim = [&]() {
            if (data.test.ranking) {
                words = tokenize(raw.text_a);
                std::vector<std::vector<int>> choices;
                choices.reserve(raw.choices.size());
                for (const auto& c : raw.choices)
                    choices.push_back(data.vocab.encode_text(c));
                return Victim::wrap_ranking(model, std::move(choices));
            }
            words = attack_words(raw);
            return Victim::wrap(model);
        }();
        if (words.empty())
            throw NumericError(cfg.dataset.name + ": test example " +
                               std::to_string(i) + " has no tokens");

        AttackResult res;
        if (spec.kind == "textfooler")
            res = attack_textfooler(victim, words, enc.label, data.vocab,
                                    data.synonyms, spec.budget);
        else
            res = attack_textbugger(victim, words, enc.label, data.vocab,
                                    data.synonyms, spec.budget);

        nlohmann::json t;
        t["index"] = i;
        t["y"] = enc.label;
        t["original"] = words;
        t["perturbed"] = res.perturbed;
        t["original_pred"] = res.original_pred;
        t["final_pred"] = res.final_pred;
        t["success"] = res.success;
        t["skipped"] = res.skipped;
        t["queries"] = res.queries;
        t["words_changed"] = res.words_changed;
        outcomes[i] = EpisodeOutcome{std::move(res), std::move(t)};
    });
    return outcomes;
}

}  // namespace

AttackOutput cmd_attack(const RunConfig& cfg, const std::string& checkpoint_path,
                        const std::string& out_dir) {
    const std::string dir = out_dir.empty() ? cfg.out_dir : out_dir;
    ensure_directory(dir);
    if (cfg.attacks.empty()) throw ConfigError("config: no attacks configured");

    const nlohmann::json checkpoint = read_json_file(checkpoint_path);
    TextClassifier model = TextClassifier::from_checkpoint(checkpoint);
    const nlohmann::json meta = TextClassifier::checkpoint_meta(checkpoint);
    if (!meta.contains("seed"))
        throw ConfigError("checkpoint: metadata is missing the dataset seed");
    const std::uint64_t seed = meta["seed"].get<std::uint64_t>();
    const std::string defence_name = meta.value("defence", std::string("unknown"));

    PreparedData data = prepare_data(cfg, seed);
    if (data.vocab.hash() != TextClassifier::checkpoint_vocab_hash(checkpoint))
        throw ConfigError(
            "checkpoint: vocabulary hash does not match the configured dataset");

    const std::size_t full = data.test.examples.size();
    std::size_t n_attacked = full;
    if (cfg.max_test_examples > 0 && cfg.max_test_examples < full) {
        if (!cfg.allow_subsample)
            throw ConfigError(
                "config: max_test_examples subsamples the test set; pass "
                "--allow-subsample to accept");
        n_attacked = cfg.max_test_examples;
    }

    const std::uint64_t hash_before = model.param_hash();
    const std::string prefix = run_prefix(cfg, defence_name, seed);

    AttackOutput out;
    std::vector<double> pdrs;
    for (const auto& spec : cfg.attacks) {
        const std::vector<EpisodeOutcome> outcomes =
            run_attack_episodes(cfg, data, model, spec, n_attacked);

        std::string jsonl;
        AttackedDataset attacked;
        attacked.full_test_size = full;
        attacked.allow_subsample = cfg.allow_subsample;
        for (const auto& o : outcomes) {
            jsonl += o.transcript.dump();
            jsonl.push_back('\n');
            EpisodeRecord rec;
            rec.y = o.transcript["y"].get<int>();
            rec.clean_pred = o.result.original_pred;
            rec.success = o.result.success;
            rec.queries = o.result.queries;
            attacked.records.push_back(rec);
        }
        const std::string tpath = join_path(dir, prefix + "_" + spec.kind + ".jsonl");
        write_text_file(tpath, jsonl);
        out.transcript_paths.push_back(tpath);

        out.records.push_back(make_eval_record(cfg.dataset.name, kModelName,
                                               defence_name, spec.kind, attacked));
        pdrs.push_back(out.records.back().pdr);
    }

    if (model.param_hash() != hash_before)
        throw NumericError("attack: victim parameters changed during episodes");

    out.apdr = apdr(pdrs);
    out.eval_csv_path = join_path(dir, prefix + "_eval.csv");
    write_text_file(out.eval_csv_path, eval_records_to_csv(out.records));
    return out;
}

namespace {

const AttackSpec* find_attack(const RunConfig& cfg, const std::string& kind) {
    for (const auto& a : cfg.attacks)
        if (a.kind == kind) return &a;
    return nullptr;
}

// In-memory train + two-attack evaluation for sweep cells.
SweepRow sweep_cell(const RunConfig& cfg, double temperature, std::uint64_t seed,
                    const PreparedData& data) {
    RunConfig cell = cfg;
    cell.defence = DefenceConfig::make("ttso");
    cell.defence.temperature = temperature;

    TextClassifier model = build_model(cell, data, seed);
    TrainConfig tc = cell.train;
    tc.seed = seed;
    train(model, data.train, data.val, cell.defence, tc);

    SweepRow row;
    row.temperature = temperature;
    row.seed = seed;
    std::vector<double> pdrs;
    for (const char* kind : {"textfooler", "textbugger"}) {
        AttackSpec spec;
        spec.kind = kind;
        if (const AttackSpec* configured = find_attack(cell, kind))
            spec = *configured;
        const std::vector<EpisodeOutcome> outcomes = run_attack_episodes(
            cell, data, model, spec, data.test.examples.size());
        AttackedDataset attacked;
        attacked.full_test_size = data.test.examples.size();
        for (const auto& o : outcomes) {
            EpisodeRecord rec;
            rec.y = o.transcript["y"].get<int>();
            rec.clean_pred = o.result.original_pred;
            rec.success = o.result.success;
            rec.queries = o.result.queries;
            attacked.records.push_back(rec);
        }
        const EvalRecord rec = make_eval_record(cell.dataset.name, kModelName,
                                                cell.defence.name(), kind, attacked);
        row.acc = rec.acc;
        if (spec.kind == std::string("textfooler")) row.aua_tf = rec.aua;
        else row.aua_tb = rec.aua;
        pdrs.push_back(rec.pdr);
    }
    row.apdr = apdr(pdrs);
    return row;
}

}  // namespace

std::vector<SweepRow> cmd_sweep_temperature(const RunConfig& cfg,
                                            const std::vector<double>& t_grid,
                                            const std::string& out_dir) {
    if (t_grid.empty()) throw ConfigError("sweep: empty temperature grid");
    for (double t : t_grid)
        if (!(t > 0.0)) throw ConfigError("sweep: temperatures must be > 0");
    const std::string dir = out_dir.empty() ? cfg.out_dir : out_dir;
    ensure_directory(dir);

    std::vector<SweepRow> rows;
    for (std::uint64_t seed : cfg.seeds) {
        const PreparedData data = prepare_data(cfg, seed);
        if (data.train.ranking)
            throw ConfigError("sweep: classification datasets only");
        for (double t : t_grid) rows.push_back(sweep_cell(cfg, t, seed, data));
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const SweepRow& a, const SweepRow& b) {
                         return a.temperature < b.temperature;
                     });

    std::string csv = "T,seed,acc,aua_tf,aua_tb,apdr\n";
    for (const auto& r : rows)
        csv += join_csv_row({format_double(r.temperature), std::to_string(r.seed),
                             format_double(r.acc), format_double(r.aua_tf),
                             format_double(r.aua_tb), format_double(r.apdr)});
    write_text_file(join_path(dir, "sweep.csv"), csv);
    return rows;
}

std::vector<BenchRow> cmd_runtime_bench(const RunConfig& cfg,
                                        const std::vector<std::string>& defences,
                                        const std::string& out_dir) {
    if (std::find(defences.begin(), defences.end(), "baseline") == defences.end())
        throw ConfigError("runtime bench: defence list must include baseline");
    const std::string dir = out_dir.empty() ? cfg.out_dir : out_dir;
    ensure_directory(dir);

    const std::uint64_t seed = cfg.seeds.front();
    const PreparedData data = prepare_data(cfg, seed);
    if (data.train.ranking)
        throw ConfigError("runtime bench: classification datasets only");

    std::vector<BenchRow> rows;
    for (const auto& name : defences) {
        DefenceConfig defence = DefenceConfig::make(name);
        TextClassifier model = build_model(cfg, data, seed);
        TrainConfig tc = cfg.train;
        tc.seed = seed;
        const TrainResult result = train(model, data.train, data.val, defence, tc);
        rows.push_back(BenchRow{name, result.total_wall_ms, 1.0});
    }
    double baseline_ms = 0.0;
    for (const auto& r : rows)
        if (r.defence == "baseline") baseline_ms = r.wall_ms;
    for (auto& r : rows) r.multiplier = r.wall_ms / baseline_ms;

    std::string csv = "defence,wall_ms,multiplier\n";
    std::string txt;
    for (const auto& r : rows) {
        csv += join_csv_row({r.defence, format_double(r.wall_ms),
                             format_double(r.multiplier)});
        char line[128];
        std::snprintf(line, sizeof(line), "%-10s x%.1f\n", r.defence.c_str(),
                      r.multiplier);
        txt += line;
    }
    write_text_file(join_path(dir, "bench.csv"), csv);
    write_text_file(join_path(dir, "bench.txt"), txt);
    return rows;
}

namespace {

struct ReportCell {
    double aua = 0.0;
    double asr = 0.0;
    std::optional<double> avgq;
};

struct ReportRow {
    std::string defence;
    double acc = 0.0;
    std::map<std::string, ReportCell> by_attack;
    std::vector<double> pdrs;
};

std::string bold_if(const std::string& text, bool bold) {
    return bold ? "**" + text + "**" : text;
}

}  // namespace

std::string cmd_report(const std::string& result_dir) {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(result_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".csv")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());

    std::vector<EvalRecord> records;
    for (const auto& path : files) {
        const std::string text = read_text_file(path.string());
        if (text.rfind("dataset,model,defence,attack,", 0) != 0) continue;
        const std::vector<EvalRecord> parsed = parse_eval_csv(text, path.string());
        records.insert(records.end(), parsed.begin(), parsed.end());
    }
    if (records.empty())
        throw ConfigError("report: no eval CSVs under " + result_dir);

    // Group by (dataset, model), keeping first-appearance order throughout.
    std::vector<std::pair<std::string, std::string>> groups;
    std::map<std::pair<std::string, std::string>, std::vector<ReportRow>> tables;
    std::map<std::pair<std::string, std::string>, std::vector<std::string>> attacks;
    for (const auto& r : records) {
        const auto key = std::make_pair(r.dataset, r.model);
        if (!tables.count(key)) groups.push_back(key);
        auto& rows = tables[key];
        auto& atk_order = attacks[key];
        if (std::find(atk_order.begin(), atk_order.end(), r.attack) ==
            atk_order.end())
            atk_order.push_back(r.attack);
        auto it = std::find_if(rows.begin(), rows.end(), [&](const ReportRow& row) {
            return row.defence == r.defence;
        });
        if (it == rows.end()) {
            rows.push_back(ReportRow{});
            it = rows.end() - 1;
            it->defence = r.defence;
        }
        it->acc = r.acc;
        it->by_attack[r.attack] = ReportCell{r.aua, r.asr, r.avgq};
        it->pdrs.push_back(r.pdr);
    }

    std::string md;
    for (const auto& key : groups) {
        const auto& rows = tables[key];
        const auto& atk_order = attacks[key];
        md += "## " + key.first + " (" + key.second + ")\n\n";
        md += "| Defence | Acc |";
        for (const auto& a : atk_order)
            md += " Aua (" + a + ") | Asr (" + a + ") | AvgQ (" + a + ") |";
        md += " Apdr |\n";
        md += "|---|---|";
        for (std::size_t i = 0; i < atk_order.size(); ++i) md += "---|---|---|";
        md += "---|\n";

        std::map<std::string, double> best_aua, best_asr;
        for (const auto& a : atk_order) {
            for (const auto& row : rows) {
                auto it = row.by_attack.find(a);
                if (it == row.by_attack.end()) continue;
                if (!best_aua.count(a) || it->second.aua > best_aua[a])
                    best_aua[a] = it->second.aua;
                if (!best_asr.count(a) || it->second.asr < best_asr[a])
                    best_asr[a] = it->second.asr;
            }
        }
        for (const auto& row : rows) {
            md += "| " + row.defence + " | " + format_fixed2(row.acc) + " |";
            for (const auto& a : atk_order) {
                auto it = row.by_attack.find(a);
                if (it == row.by_attack.end()) {
                    md += " - | - | - |";
                    continue;
                }
                md += " " + bold_if(format_fixed2(it->second.aua),
                                    it->second.aua == best_aua[a]);
                md += " | " + bold_if(format_fixed2(it->second.asr),
                                      it->second.asr == best_asr[a]);
                md += " | " +
                      (it->second.avgq ? format_fixed2(*it->second.avgq)
                                       : std::string("-")) +
                      " |";
            }
            md += " " + format_fixed2(apdr(row.pdrs)) + " |\n";
        }
        md += "\n";
    }

    write_text_file(join_path(result_dir, "report.md"), md);
    return md;
}

}  // namespace tad

#include "tadbench/config.hpp"

#include "tadbench/error.hpp"
#include "tadbench/io_util.hpp"

namespace tad {

namespace {

std::size_t size_value(const nlohmann::json& j, const char* key,
                       std::size_t fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number_unsigned() && !j[key].is_number_integer())
        throw ConfigError(std::string("config: ") + key + " must be an integer");
    const long long v = j[key].get<long long>();
    if (v < 0) throw ConfigError(std::string("config: ") + key + " must be >= 0");
    return static_cast<std::size_t>(v);
}

}  // namespace

void RunConfig::validate() const {
    if (dataset.kind != "synth" && dataset.kind != "file")
        throw ConfigError("config: dataset.kind must be 'synth' or 'file'");
    if (dataset.kind == "file") {
        if (dataset.format != "tsv" && dataset.format != "jsonl")
            throw ConfigError("config: dataset.format must be 'tsv' or 'jsonl'");
        for (const std::string* p :
             {&dataset.train_path, &dataset.val_path, &dataset.test_path}) {
            if (p->empty())
                throw ConfigError("config: dataset needs train/val/test paths");
            if (!file_exists(*p))
                throw ConfigError("config: missing dataset file " + *p);
        }
    } else {
        if (dataset.synth.n < 100)
            throw ConfigError("config: synth.n must be >= 100");
        if (dataset.synth.num_classes < 2)
            throw ConfigError("config: synth.num_classes must be >= 2");
        if (dataset.synth.vocab_size <=
            dataset.synth.num_classes * dataset.synth.signal_per_class)
            throw ConfigError("config: synth.vocab_size too small for signal words");
        if (!(dataset.synth.noise >= 0.0 && dataset.synth.noise < 0.5))
            throw ConfigError("config: synth.noise must be in [0, 0.5)");
    }
    if (dataset.name.empty()) throw ConfigError("config: dataset.name is empty");
    if (model.embed_dim == 0 || model.hidden_dim == 0)
        throw ConfigError("config: model dims must be positive");
    defence.validate();
    if (train.epochs < 1) throw ConfigError("config: train.epochs must be >= 1");
    if (train.batch_size == 0)
        throw ConfigError("config: train.batch_size must be >= 1");
    if (!(train.lr > 0.0)) throw ConfigError("config: train.lr must be > 0");
    for (const auto& atk : attacks) {
        if (atk.kind != "textfooler" && atk.kind != "textbugger")
            throw ConfigError("config: unknown attack kind '" + atk.kind + "'");
        atk.budget.validate();
    }
    if (!synonyms.file.empty() && !file_exists(synonyms.file))
        throw ConfigError("config: missing synonym file " + synonyms.file);
    if (synonyms.file.empty() && synonyms.embed_dim == 0)
        throw ConfigError("config: synonyms.embed_dim must be positive");
    if (seeds.empty()) throw ConfigError("config: seed list is empty");
    if (out_dir.empty()) throw ConfigError("config: out_dir is empty");
    if (workers == 0) throw ConfigError("config: workers must be >= 1");
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config: root must be an object");
    RunConfig cfg;

    if (j.contains("dataset")) {
        const auto& d = j["dataset"];
        if (!d.is_object()) throw ConfigError("config: dataset must be an object");
        cfg.dataset.kind = d.value("kind", cfg.dataset.kind);
        cfg.dataset.name = d.value("name", cfg.dataset.name);
        cfg.dataset.format = d.value("format", cfg.dataset.format);
        cfg.dataset.train_path = d.value("train", cfg.dataset.train_path);
        cfg.dataset.val_path = d.value("val", cfg.dataset.val_path);
        cfg.dataset.test_path = d.value("test", cfg.dataset.test_path);
        cfg.dataset.synth.n = size_value(d, "n", cfg.dataset.synth.n);
        cfg.dataset.synth.vocab_size =
            size_value(d, "vocab_size", cfg.dataset.synth.vocab_size);
        cfg.dataset.synth.num_classes =
            size_value(d, "num_classes", cfg.dataset.synth.num_classes);
        cfg.dataset.synth.noise = d.value("noise", cfg.dataset.synth.noise);
        cfg.dataset.synth.signal_per_class = size_value(
            d, "signal_per_class", cfg.dataset.synth.signal_per_class);
        cfg.dataset.synth.min_len =
            size_value(d, "min_len", cfg.dataset.synth.min_len);
        cfg.dataset.synth.max_len =
            size_value(d, "max_len", cfg.dataset.synth.max_len);
        cfg.dataset.synth.signal_fraction =
            d.value("signal_fraction", cfg.dataset.synth.signal_fraction);
    }

    if (j.contains("model")) {
        const auto& m = j["model"];
        cfg.model.embed_dim = size_value(m, "embed_dim", cfg.model.embed_dim);
        cfg.model.hidden_dim = size_value(m, "hidden_dim", cfg.model.hidden_dim);
        cfg.model.min_count = size_value(m, "min_count", cfg.model.min_count);
    }

    if (j.contains("defence")) cfg.defence = DefenceConfig::from_json(j["defence"]);

    if (j.contains("train")) {
        const auto& t = j["train"];
        cfg.train.epochs = t.value("epochs", cfg.train.epochs);
        cfg.train.batch_size = size_value(t, "batch_size", cfg.train.batch_size);
        cfg.train.lr = t.value("lr", cfg.train.lr);
    }

    if (j.contains("attacks")) {
        if (!j["attacks"].is_array())
            throw ConfigError("config: attacks must be an array");
        cfg.attacks.clear();
        for (const auto& a : j["attacks"]) {
            AttackSpec spec;
            if (!a.is_object() || !a.contains("kind"))
                throw ConfigError("config: each attack needs a kind");
            spec.kind = a["kind"].get<std::string>();
            spec.budget.eps_pert = a.value("eps_pert", spec.budget.eps_pert);
            spec.budget.max_queries = a.value("max_queries", spec.budget.max_queries);
            spec.budget.k = size_value(a, "k", spec.budget.k);
            cfg.attacks.push_back(std::move(spec));
        }
    } else {
        cfg.attacks = {{"textfooler", {}}, {"textbugger", {}}};
    }

    if (j.contains("synonyms")) {
        const auto& s = j["synonyms"];
        cfg.synonyms.file = s.value("file", cfg.synonyms.file);
        cfg.synonyms.embed_dim = size_value(s, "embed_dim", cfg.synonyms.embed_dim);
        cfg.synonyms.k = size_value(s, "k", cfg.synonyms.k);
        cfg.synonyms.window = size_value(s, "window", cfg.synonyms.window);
    }

    if (j.contains("run")) {
        const auto& r = j["run"];
        if (r.contains("seeds")) {
            if (!r["seeds"].is_array() || r["seeds"].empty())
                throw ConfigError("config: run.seeds must be a non-empty array");
            cfg.seeds.clear();
            for (const auto& s : r["seeds"]) {
                if (!s.is_number_unsigned() && !s.is_number_integer())
                    throw ConfigError("config: run.seeds entries must be integers");
                cfg.seeds.push_back(s.get<std::uint64_t>());
            }
        }
        cfg.out_dir = r.value("out_dir", cfg.out_dir);
        cfg.workers = size_value(r, "workers", cfg.workers);
        cfg.allow_subsample = r.value("allow_subsample", cfg.allow_subsample);
        cfg.max_test_examples =
            size_value(r, "max_test_examples", cfg.max_test_examples);
    }

    cfg.validate();
    return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
    return from_json(read_json_file(path));
}

nlohmann::json RunConfig::to_json() const {
    nlohmann::json j;
    nlohmann::json d;
    d["kind"] = dataset.kind;
    d["name"] = dataset.name;
    if (dataset.kind == "file") {
        d["format"] = dataset.format;
        d["train"] = dataset.train_path;
        d["val"] = dataset.val_path;
        d["test"] = dataset.test_path;
    } else {
        d["n"] = dataset.synth.n;
        d["vocab_size"] = dataset.synth.vocab_size;
        d["num_classes"] = dataset.synth.num_classes;
        d["noise"] = dataset.synth.noise;
        d["signal_per_class"] = dataset.synth.signal_per_class;
        d["min_len"] = dataset.synth.min_len;
        d["max_len"] = dataset.synth.max_len;
        d["signal_fraction"] = dataset.synth.signal_fraction;
    }
    j["dataset"] = d;
    j["model"] = {{"embed_dim", model.embed_dim},
                  {"hidden_dim", model.hidden_dim},
                  {"min_count", model.min_count}};
    j["defence"] = defence.to_json();
    j["train"] = {{"epochs", train.epochs},
                  {"batch_size", train.batch_size},
                  {"lr", train.lr}};
    nlohmann::json attacks_json = nlohmann::json::array();
    for (const auto& a : attacks)
        attacks_json.push_back({{"kind", a.kind},
                                {"eps_pert", a.budget.eps_pert},
                                {"max_queries", a.budget.max_queries},
                                {"k", a.budget.k}});
    j["attacks"] = attacks_json;
    nlohmann::json s;
    if (!synonyms.file.empty()) s["file"] = synonyms.file;
    s["embed_dim"] = synonyms.embed_dim;
    s["k"] = synonyms.k;
    s["window"] = synonyms.window;
    j["synonyms"] = s;
    j["run"] = {{"seeds", seeds},
                {"out_dir", out_dir},
                {"workers", workers},
                {"allow_subsample", allow_subsample},
                {"max_test_examples", max_test_examples}};
    return j;
}

}  // namespace tad

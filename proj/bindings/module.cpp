#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tadbench/config.hpp"
#include "tadbench/data.hpp"
#include "tadbench/defences.hpp"
#include "tadbench/error.hpp"
#include "tadbench/harness.hpp"
#include "tadbench/metrics.hpp"
#include "tadbench/tensor.hpp"

namespace py = pybind11;

namespace {

tad::RunConfig config_from_text(const std::string& config_json) {
    nlohmann::json j = nlohmann::json::parse(config_json, nullptr, false);
    if (j.is_discarded())
        throw tad::ConfigError("config: invalid JSON");
    return tad::RunConfig::from_json(j);
}

py::dict eval_record_dict(const tad::EvalRecord& r) {
    py::dict d;
    d["dataset"] = r.dataset;
    d["model"] = r.model;
    d["defence"] = r.defence;
    d["attack"] = r.attack;
    d["acc"] = r.acc;
    d["aua"] = r.aua;
    d["asr"] = r.asr;
    if (r.avgq) d["avgq"] = *r.avgq; else d["avgq"] = py::none();
    d["pdr"] = r.pdr;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "adversarial-robustness benchmark for small text classifiers";

    py::register_exception<tad::ConfigError>(m, "ConfigError", PyExc_ValueError);

    m.def("tokenize", &tad::tokenize, py::arg("text"),
          "Lowercased word/punctuation tokens of a text.");
    m.def("softmax", &tad::softmax_value, py::arg("logits"));
    m.def("entropy", &tad::entropy_value, py::arg("probs"),
          "Shannon entropy in nats.");
    m.def(
        "dynamic_temperature",
        [](const std::vector<double>& logits, double t_base, double alpha) {
            return tad::compute_dynamic_temperature(logits, t_base, alpha);
        },
        py::arg("logits"), py::arg("t_base") = 10.0, py::arg("alpha") = 0.5,
        "Instance temperature t_base + alpha * H(softmax(logits)).");

    m.def(
        "train",
        [](const std::string& config_json, long long seed,
           const std::string& out_dir) {
            tad::RunConfig cfg = config_from_text(config_json);
            const std::uint64_t s =
                seed >= 0 ? static_cast<std::uint64_t>(seed) : cfg.seeds.front();
            const tad::TrainOutput out = tad::cmd_train(cfg, s, out_dir);
            py::dict d;
            d["checkpoint"] = out.checkpoint_path;
            d["train_csv"] = out.stats_csv_path;
            d["best_epoch"] = out.result.best_epoch;
            d["best_val_acc"] = out.result.best_val_acc;
            d["wall_ms"] = out.result.total_wall_ms;
            return d;
        },
        py::arg("config_json"), py::arg("seed") = -1, py::arg("out_dir") = "",
        "Train one model; returns checkpoint and training-stats paths.");

    m.def(
        "attack",
        [](const std::string& config_json, const std::string& checkpoint,
           const std::string& out_dir) {
            tad::RunConfig cfg = config_from_text(config_json);
            const tad::AttackOutput out =
                tad::cmd_attack(cfg, checkpoint, out_dir);
            py::dict d;
            d["eval_csv"] = out.eval_csv_path;
            d["transcripts"] = out.transcript_paths;
            py::list records;
            for (const auto& r : out.records) records.append(eval_record_dict(r));
            d["records"] = records;
            d["apdr"] = out.apdr;
            return d;
        },
        py::arg("config_json"), py::arg("checkpoint"), py::arg("out_dir") = "",
        "Attack every test example with every configured attack.");

    m.def(
        "sweep_temperature",
        [](const std::string& config_json, const std::vector<double>& grid,
           const std::string& out_dir) {
            tad::RunConfig cfg = config_from_text(config_json);
            const auto rows = tad::cmd_sweep_temperature(cfg, grid, out_dir);
            py::list out;
            for (const auto& r : rows) {
                py::dict d;
                d["T"] = r.temperature;
                d["seed"] = r.seed;
                d["acc"] = r.acc;
                d["aua_tf"] = r.aua_tf;
                d["aua_tb"] = r.aua_tb;
                d["apdr"] = r.apdr;
                out.append(d);
            }
            return out;
        },
        py::arg("config_json"), py::arg("grid"), py::arg("out_dir") = "");

    m.def(
        "runtime_bench",
        [](const std::string& config_json,
           const std::vector<std::string>& defences, const std::string& out_dir) {
            tad::RunConfig cfg = config_from_text(config_json);
            const auto rows = tad::cmd_runtime_bench(cfg, defences, out_dir);
            py::list out;
            for (const auto& r : rows) {
                py::dict d;
                d["defence"] = r.defence;
                d["wall_ms"] = r.wall_ms;
                d["multiplier"] = r.multiplier;
                out.append(d);
            }
            return out;
        },
        py::arg("config_json"), py::arg("defences"), py::arg("out_dir") = "");

    m.def("report", &tad::cmd_report, py::arg("result_dir"),
          "Render every eval CSV under result_dir as markdown; returns it.");
}

// Copyright 2026 The hetembed Authors
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "hetembed/error.hpp"
#include "hetembed/gradsuite.hpp"
#include "hetembed/trainer.hpp"

namespace py = pybind11;
using namespace hetembed;

namespace {

py::dict report_dict(const MetricReport& report) {
  py::dict out;
  for (const auto& m : report.metrics) out[py::str(m.name)] = m.value;
  return out;
}

TrainConfig parse_config(const std::string& json, const std::string& base_dir) {
  return TrainConfig::from_json(json, base_dir);
}

Dataset split_of(const TrainConfig& cfg, const std::string& which) {
  const Dataset ds = load_dataset(cfg);
  if (which == "all") return ds;
  const DatasetSplit s = prepare_split(cfg, ds).raw;
  if (which == "train") return s.train;
  if (which == "val") return s.val;
  if (which == "test") return s.test;
  throw ConfigError("split must be train, val, test or all, got '" + which + "'");
}

TrainConfig checkpoint_config(const Checkpoint& ck, const std::optional<std::string>& config_json,
                              const std::string& base_dir) {
  return config_json ? parse_config(*config_json, base_dir) : ck.config();
}

std::vector<EvalInstance> instances(const std::vector<std::vector<double>>& scores,
                                    const std::vector<std::vector<int>>& truth, double threshold) {
  if (scores.size() != truth.size()) throw DataError("scores and labels have different row counts");
  std::vector<EvalInstance> out;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i].size() != truth[i].size()) throw DataError("row " + std::to_string(i) + ": label count differs");
    std::vector<std::uint8_t> bits(truth[i].begin(), truth[i].end());
    out.push_back({scores[i], LabelVector(std::move(bits)), predict_labels(scores[i], threshold)});
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_hetembed, m) {
  m.doc() = "Heterogeneous-domain multi-label embedding: training, evaluation and metrics";

  // Translators run newest first, so the base class goes in first.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  m.def(
      "load_config", [](const std::filesystem::path& path) { return load_config(path).to_json(); }, py::arg("path"),
      "Reads and validates a JSON config; returns it in canonical form.");

  m.def(
      "generate_data",
      [](const std::string& config_json, const std::filesystem::path& out_dir) {
        const TrainConfig cfg = parse_config(config_json, "");
        const Dataset ds = load_dataset(cfg);
        std::filesystem::create_directories(out_dir);
        for (const DomainSpec& s : ds.specs) write_domain_csv(out_dir / (s.name + ".csv"), ds, s.id);
        write_labels_csv(out_dir / "labels.csv", ds);
        return ds.m();
      },
      py::arg("config_json"), py::arg("out_dir"), "Writes the configured synthetic data as CSV files.");

  m.def(
      "train",
      [](const std::string& config_json, std::optional<std::filesystem::path> out_dir, const std::string& base_dir) {
        const TrainConfig cfg = parse_config(config_json, base_dir);
        TrainResult r;
        {
          py::gil_scoped_release release;
          r = train(cfg);
        }
        if (out_dir) write_training_outputs(cfg, r, *out_dir);
        py::list stage1, stage2;
        for (const auto& e : r.stage1) stage1.append(py::make_tuple(e.epoch, e.loss, e.holdout_accuracy));
        for (const auto& e : r.stage2) stage2.append(py::make_tuple(e.epoch, e.loss, e.val_average_precision));
        py::dict out;
        out["variant"] = variant_name(cfg.variant);
        out["stage1"] = stage1;
        out["stage2"] = stage2;
        out["val"] = report_dict(r.val_report);
        out["test"] = report_dict(r.test_report);
        out["split_checksum"] = r.split_checksum;
        const auto bytes = r.checkpoint(cfg).to_bytes();
        out["checkpoint"] = py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
        return out;
      },
      py::arg("config_json"), py::arg("out_dir") = py::none(), py::arg("base_dir") = "",
      "Runs both training stages. Returns histories, reports and the checkpoint bytes.");

  m.def(
      "evaluate",
      [](const std::filesystem::path& checkpoint, const std::string& split, std::optional<std::string> config_json,
         const std::string& base_dir) {
        const Checkpoint ck = Checkpoint::load(checkpoint);
        const Dataset ds = split_of(checkpoint_config(ck, config_json, base_dir), split);
        MetricReport report;
        {
          py::gil_scoped_release release;
          report = evaluate(ck, ds);
        }
        return report_dict(report);
      },
      py::arg("checkpoint"), py::arg("split") = "test", py::arg("config_json") = py::none(),
      py::arg("base_dir") = "", "Five-metric report for a checkpoint on one split of its data.");

  m.def(
      "predict",
      [](const std::filesystem::path& checkpoint, const std::string& split, std::optional<std::string> config_json,
         const std::string& base_dir) {
        const Checkpoint ck = Checkpoint::load(checkpoint);
        const Dataset ds = split_of(checkpoint_config(ck, config_json, base_dir), split);
        const auto preds = predict(ck, ds);
        py::list out;
        for (const auto& p : preds) {
          py::list labels;
          for (std::size_t j = 0; j < p.labels.size(); ++j) {
            if (p.labels.test(j)) labels.append(ck.label_names[j]);
          }
          py::dict row;
          row["id"] = p.id;
          row["logits"] = p.logits;
          row["labels"] = labels;
          out.append(row);
        }
        return out;
      },
      py::arg("checkpoint"), py::arg("split") = "all", py::arg("config_json") = py::none(),
      py::arg("base_dir") = "", "Per-record logits and predicted label names.");

  m.def(
      "ablate",
      [](const std::string& config_json, const std::string& base_dir) {
        const TrainConfig cfg = parse_config(config_json, base_dir);
        std::vector<AblationRow> rows;
        {
          py::gil_scoped_release release;
          rows = run_ablation_ladder(cfg);
        }
        py::list out;
        for (const auto& r : rows) {
          py::dict row;
          row["variant"] = variant_name(r.variant);
          row["val"] = report_dict(r.val);
          row["test"] = report_dict(r.test);
          row["split_checksum"] = r.split_checksum;
          out.append(row);
        }
        return out;
      },
      py::arg("config_json"), py::arg("base_dir") = "", "Trains the four ablation variants on one shared split.");

  m.def(
      "metrics",
      [](const std::vector<std::vector<double>>& scores, const std::vector<std::vector<int>>& truth,
         double threshold) { return report_dict(compute_report(instances(scores, truth, threshold))); },
      py::arg("scores"), py::arg("labels"), py::arg("threshold") = 0.5,
      "Five multi-label metrics from per-instance scores and 0/1 label rows.");

  m.def(
      "stage2_loss",
      [](const std::vector<double>& logits, const std::vector<int>& labels) {
        return stage2_loss(Tensor::vector(logits), LabelVector(std::vector<std::uint8_t>(labels.begin(), labels.end())))
            .item();
      },
      py::arg("logits"), py::arg("labels"), "Stable sigmoid cross-entropy summed over labels.");

  m.def(
      "gradcheck",
      [](std::uint64_t seed, std::size_t points) {
        std::vector<GradSuiteEntry> entries;
        {
          py::gil_scoped_release release;
          entries = run_grad_suite(seed, points);
        }
        py::dict out;
        for (const auto& e : entries) out[py::str(e.name)] = py::make_tuple(e.max_rel_error, e.tolerance, e.passed());
        return out;
      },
      py::arg("seed") = 0, py::arg("points") = 10,
      "Finite-difference check of every primitive: name -> (max_rel_error, tolerance, passed).");
}

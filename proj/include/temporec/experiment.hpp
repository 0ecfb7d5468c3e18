#pragma once

// End-to-end runs: corpus loading, splitting, fitting, evaluation and the
// result bundle on disk.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "temporec/config.hpp"
#include "temporec/corpus.hpp"
#include "temporec/metrics.hpp"
#include "temporec/moo.hpp"
#include "temporec/protocols.hpp"

namespace temporec {

std::string sha256_hex(std::string_view data);

// Reads or generates the raw log named by the config. Throws StageError("load").
InteractionLog load_log(const ExperimentConfig& config);

struct PreparedData {
  Corpus corpus;
  InteractionLog log;  // after preprocessing
  RecencyWeights weights;
  std::string corpus_sha256;  // of the preprocessed log in canonical CSV
  // Phase sets per validation protocol, all built from the same seed, so they
  // share training rows and validation users. Only the configured protocol
  // is present when the corpus has no time range.
  std::map<Protocol, PhaseSets> sets;

  const PhaseSets& primary(const ExperimentConfig& config) const {
    return sets.at(config.split.protocol);
  }
};

PreparedData prepare_data(const ExperimentConfig& config);

struct RunOptions {
  bool write_outputs = true;
  bool evaluate = true;  // false stops after training
  // Evaluate this VAE checkpoint instead of training a model.
  std::optional<std::filesystem::path> checkpoint;
};

struct ExperimentResult {
  nlohmann::json manifest;
  nlohmann::json metrics;              // the metrics.json document
  std::vector<MetricReport> reports;   // selected model on every split
  std::optional<TrainResult> training; // VAE runs only
};

// Result bundle under config.output_dir:
//   manifest.json      config text, config hash (output_dir excluded), corpus
//                      hash, stage seeds
//   metrics.json       reports of the selected model on every split
//   splits/*.json      split manifests
//   pareto.csv, train_log.ndjson, epochs.ndjson, checkpoints/  (VAE)
// Every stage failure surfaces as a StageError naming the stage.
ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

// Serialization used for metrics.json; stable for a fixed input.
std::string dump_stable(const nlohmann::json& j);

}  // namespace temporec

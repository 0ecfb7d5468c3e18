#include "temporec/experiment.hpp"

#include <fstream>
#include <memory>
#include <sstream>

#include <openssl/evp.h>

#include "temporec/error.hpp"
#include "temporec/models.hpp"
#include "temporec/rng.hpp"
#include "temporec/synthetic.hpp"
#include "temporec/vae.hpp"

namespace temporec {
namespace {

template <typename F>
auto in_stage(const char* stage, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

std::string canonical_csv(const InteractionLog& log) {
  std::ostringstream out;
  write_interactions(out, log);
  return out.str();
}

const Protocol kAllProtocols[] = {Protocol::traditional, Protocol::proportional,
                                  Protocol::strict_cutoff};

}  // namespace

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 computation failed");
  }
  static const char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < length; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

std::string dump_stable(const nlohmann::json& j) { return j.dump(2) + "\n"; }

InteractionLog load_log(const ExperimentConfig& config) {
  return in_stage("load", [&] {
    if (config.source == CorpusSource::synthetic) return generate_drift_corpus(config.synthetic);
    auto parsed = parse_interactions(config.corpus_path, config.schema, config.parse_mode);
    return std::move(parsed.log);
  });
}

PreparedData prepare_data(const ExperimentConfig& config) {
  PreparedData data;
  const InteractionLog raw = load_log(config);
  in_stage("preprocess", [&] {
    data.log = preprocess(raw, config.preprocess);
    data.corpus = build_corpus(data.log);
    data.corpus_sha256 = sha256_hex(canonical_csv(data.log));
    data.weights = build_recency_weights(data.corpus.catalog, config.recency);
  });
  in_stage("split", [&] {
    const bool timed = data.corpus.catalog.t_max > data.corpus.catalog.t_min;
    for (const Protocol p : kAllProtocols) {
      if (!timed && p != config.split.protocol) continue;
      SplitParams params = config.split;
      params.protocol = p;
      data.sets.emplace(p, assemble_phase_sets(data.corpus, params));
    }
  });
  return data;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  in_stage("config", [&] { validate(config); });
  const std::filesystem::path out_dir = config.output_dir;
  if (options.write_outputs) {
    in_stage("write", [&] {
      std::filesystem::create_directories(out_dir / "splits");
    });
  }

  const PreparedData data = prepare_data(config);
  const PhaseSets& primary = data.primary(config);

  ExperimentResult result;
  const std::string config_text = to_toml(config);
  auto& m = result.manifest;
  m["format"] = "temporec-bundle v1";
  m["name"] = config.name;
  // Where a run is written does not change what it computes.
  ExperimentConfig placeless = config;
  placeless.output_dir.clear();
  m["config_sha256"] = sha256_hex(to_toml(placeless));
  m["corpus_sha256"] = data.corpus_sha256;
  m["corpus"] = {{"users", data.corpus.num_users()},
                 {"items", data.corpus.num_items()},
                 {"interactions", data.log.size()},
                 {"t_min", data.corpus.catalog.t_min},
                 {"t_max", data.corpus.catalog.t_max}};
  m["seeds"] = {{"root", config.seed},
                {"split", config.split.seed},
                {"synthetic", config.synthetic.seed},
                {"svd", config.svd.seed},
                {"init", config.init_seed()},
                {"train", config.train.seed}};
  m["config"] = config_text;

  if (options.write_outputs) {
    in_stage("write", [&] {
      for (const auto& [protocol, sets] : data.sets) {
        SplitParams params = config.split;
        params.protocol = protocol;
        write_text(out_dir / "splits" / (sets.validation.name + ".json"),
                   dump_stable(split_manifest(sets.validation, params)));
      }
      if (primary.test) {
        write_text(out_dir / "splits" / (primary.test->name + ".json"),
                   dump_stable(split_manifest(*primary.test, config.split)));
      }
    });
  }

  std::unique_ptr<ScoreProvider> model;
  in_stage("train", [&] {
    if (options.checkpoint) {
      VaeParams params = read_checkpoint(*options.checkpoint);
      if (params.arch().items != data.corpus.num_items()) {
        throw ContractError("checkpoint has " + std::to_string(params.arch().items) +
                            " items, corpus has " + std::to_string(data.corpus.num_items()));
      }
      model = std::make_unique<VaeModel>(std::move(params));
      return;
    }
    switch (config.model) {
      case ModelKind::popularity:
        model = std::make_unique<PopularityModel>(PopularityModel::fit(primary.train));
        break;
      case ModelKind::svd:
        model = std::make_unique<SvdModel>(SvdModel::fit(primary.train, config.svd));
        break;
      case ModelKind::vae: {
        VaeArchitecture arch = config.vae;
        arch.items = data.corpus.num_items();
        Rng init_rng(config.init_seed());
        TrainConfig tc = config.train;
        tc.ks = config.ks;
        if (options.write_outputs) tc.checkpoint_dir = out_dir / "checkpoints";
        TrainResult trained = train(tc, VaeParams::initialize(arch, init_rng), primary.train,
                                    primary.train_users, primary.validation, data.weights);
        model = std::make_unique<VaeModel>(trained.best_params());
        result.training = std::move(trained);
        break;
      }
    }
  });

  if (result.training) {
    const TrainResult& t = *result.training;
    m["empirical_losses"] = {{"values", t.empirical.values},
                             {"sample_rows", t.empirical.sample_rows}};
    m["best_epoch"] = t.best_epoch;
    if (options.write_outputs) {
      in_stage("write", [&] {
        ParetoSet relative;
        for (ParetoEntry e : t.pareto.entries()) {
          e.checkpoint = "checkpoints/epoch_" + std::to_string(e.epoch) + ".ckpt";
          relative.offer(std::move(e));
        }
        std::ostringstream pareto;
        write_pareto_csv(pareto, relative);
        write_text(out_dir / "pareto.csv", pareto.str());
        std::string steps;
        for (const auto& s : t.steps) steps += to_json(s).dump() + "\n";
        write_text(out_dir / "train_log.ndjson", steps);
        std::string epochs;
        for (const auto& e : t.epochs) {
          nlohmann::json j{{"epoch", e.epoch}, {"recall", e.recall}, {"recency", e.recency}};
          for (const auto& r : e.validation) j["validation"].push_back(to_json(r));
          epochs += j.dump() + "\n";
        }
        write_text(out_dir / "epochs.ndjson", epochs);
        write_checkpoint(out_dir / "best.ckpt", t.best_params());
      });
    }
  }

  if (options.evaluate) {
    in_stage("evaluate", [&] {
      for (const Protocol p : kAllProtocols) {
        const auto it = data.sets.find(p);
        if (it == data.sets.end()) continue;
        const auto reports = evaluate(*model, it->second.validation, config.ks, data.weights);
        result.reports.insert(result.reports.end(), reports.begin(), reports.end());
      }
      if (primary.test) {
        const auto reports = evaluate(*model, *primary.test, config.ks, data.weights);
        result.reports.insert(result.reports.end(), reports.begin(), reports.end());
      }
    });
    auto& doc = result.metrics;
    doc["name"] = config.name;
    doc["model"] = std::string(to_string(config.model));
    doc["selection_protocol"] = std::string(to_string(config.split.protocol));
    if (result.training) doc["best_epoch"] = result.training->best_epoch;
    doc["reports"] = nlohmann::json::array();
    for (const auto& r : result.reports) doc["reports"].push_back(to_json(r));
    if (options.write_outputs) {
      in_stage("write", [&] { write_text(out_dir / "metrics.json", dump_stable(doc)); });
    }
  }

  if (options.write_outputs) {
    in_stage("write", [&] { write_text(out_dir / "manifest.json", dump_stable(m)); });
  }
  return result;
}

}  // namespace temporec

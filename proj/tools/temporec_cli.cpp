// temporec command line: one subcommand per pipeline stage, all outputs
// under --out.

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "temporec/config.hpp"
#include "temporec/error.hpp"
#include "temporec/experiment.hpp"
#include "temporec/report.hpp"
#include "temporec/synthetic.hpp"

namespace {

using namespace temporec;

struct Overrides {
  std::string config;
  std::string out;
  std::string protocol;
  std::string phase;
  std::string model;
  std::optional<double> holdout_fraction;
  std::optional<double> cutoff_quantile;
  std::optional<long long> cutoff_time;
  std::optional<unsigned long long> seed;
  std::optional<int> epochs;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "Experiment configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--protocol", o.protocol, "traditional | proportional | cutoff");
  cmd->add_option("--phase", o.phase, "development | deployment_ready");
  cmd->add_option("--model", o.model, "popularity | svd | vae");
  cmd->add_option("--holdout-frac", o.holdout_fraction, "Random/proportional holdout share");
  cmd->add_option("--cutoff-quantile", o.cutoff_quantile, "Test cutoff as a time quantile");
  cmd->add_option("--cutoff-time", o.cutoff_time, "Test cutoff timestamp");
  cmd->add_option("--seed", o.seed, "Root seed");
  cmd->add_option("--epochs", o.epochs, "Training epochs");
}

ExperimentConfig resolve(const Overrides& o) try {
  ExperimentConfig c;
  if (!o.config.empty()) c = load_experiment_config(o.config);
  if (!o.out.empty()) c.output_dir = o.out;
  if (!o.protocol.empty()) c.split.protocol = parse_protocol(o.protocol);
  if (!o.phase.empty()) c.split.phase = parse_phase(o.phase);
  if (!o.model.empty()) c.model = parse_model_kind(o.model);
  if (o.holdout_fraction) c.split.holdout_fraction = *o.holdout_fraction;
  if (o.cutoff_quantile) c.split.cutoff_quantile = *o.cutoff_quantile;
  if (o.cutoff_time) c.split.cutoff_time = *o.cutoff_time;
  if (o.seed) c.seed = *o.seed;
  if (o.epochs) c.train.epochs = *o.epochs;
  c.derive_stage_seeds();
  validate(c);
  return c;
} catch (const StageError&) {
  throw;
} catch (const std::exception& e) {
  throw StageError("config", e.what());
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw IoError("cannot write " + path.string());
}

void print_reports(const ExperimentResult& r) {
  for (const auto& rep : r.reports) {
    std::cout << rep.split << " K=" << rep.k << " users=" << rep.n_users
              << " recall=" << rep.recall << " precision=" << rep.precision
              << " recency=" << rep.recency << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temporally faithful offline evaluation of recommenders"};
  app.require_subcommand(1);

  Overrides o;
  std::string input_csv;
  std::string checkpoint;
  std::string front_a, front_b;
  std::vector<std::string> bundles;
  std::optional<std::size_t> syn_users, syn_items;
  std::optional<double> syn_affinity;

  auto* preprocess_cmd = app.add_subcommand("preprocess", "Parse, filter and index a CSV log");
  add_common(preprocess_cmd, o);
  preprocess_cmd->add_option("--input", input_csv, "Interaction CSV")->check(CLI::ExistingFile);

  auto* split_cmd = app.add_subcommand("split", "Build train/validation/test sets");
  add_common(split_cmd, o);

  auto* train_cmd = app.add_subcommand("train", "Fit the configured model");
  add_common(train_cmd, o);

  auto* eval_cmd = app.add_subcommand("evaluate", "Fit (or load) a model and report metrics");
  add_common(eval_cmd, o);
  eval_cmd->add_option("--checkpoint", checkpoint, "VAE checkpoint to evaluate")
      ->check(CLI::ExistingFile);

  auto* pareto_cmd = app.add_subcommand("pareto", "Export a front and compare two fronts");
  pareto_cmd->add_option("--out", o.out, "Output directory");
  pareto_cmd->add_option("--front-a", front_a, "Pareto CSV")->required();
  pareto_cmd->add_option("--front-b", front_b, "Second Pareto CSV");

  auto* report_cmd = app.add_subcommand("report", "Side-by-side metric tables");
  report_cmd->add_option("--out", o.out, "Output directory");
  report_cmd->add_option("bundles", bundles, "Result bundle directories")->required();

  auto* gen_cmd = app.add_subcommand("gen-synthetic", "Write a drift corpus as CSV");
  add_common(gen_cmd, o);
  gen_cmd->add_option("--users", syn_users, "Number of users");
  gen_cmd->add_option("--items", syn_items, "Number of items");
  gen_cmd->add_option("--affinity", syn_affinity, "Recency affinity strength");

  CLI11_PARSE(app, argc, argv);

  const std::string stage = app.get_subcommands().front()->get_name();
  const auto started = std::chrono::steady_clock::now();
  try {
    if (stage == "pareto" || stage == "report") {
      const std::filesystem::path out = o.out.empty() ? "." : o.out;
      std::filesystem::create_directories(out);
      if (stage == "pareto") {
        const auto a = load_front(front_a);
        write_file(out / "front_a.csv", front_points_csv(a));
        if (!front_b.empty()) {
          const auto b = load_front(front_b);
          write_file(out / "front_b.csv", front_points_csv(b));
          const auto verdict = std::string(to_string(compare_fronts(a, b)));
          write_file(out / "verdict.txt", verdict + "\n");
          std::cout << verdict << "\n";
        }
      } else {
        std::vector<Bundle> loaded;
        for (const auto& dir : bundles) loaded.push_back(load_bundle(dir));
        const auto tables = metric_tables(loaded);
        write_file(out / "report.txt", tables.text);
        write_file(out / "report.csv", tables.csv);
        std::cout << tables.text;
      }
    } else {
      ExperimentConfig config = resolve(o);
      std::filesystem::create_directories(config.output_dir);
      if (stage == "gen-synthetic") {
        if (syn_users) config.synthetic.users = *syn_users;
        if (syn_items) config.synthetic.items = *syn_items;
        if (syn_affinity) config.synthetic.recency_affinity = *syn_affinity;
        std::ostringstream csv;
        write_interactions(csv, generate_drift_corpus(config.synthetic));
        write_file(config.output_dir / "interactions.csv", csv.str());
      } else if (stage == "preprocess") {
        if (!input_csv.empty()) {
          config.source = CorpusSource::csv;
          config.corpus_path = input_csv;
        }
        const PreparedData data = prepare_data(config);
        write_snapshot(data.corpus, config.output_dir / "corpus");
        std::cout << "users=" << data.corpus.num_users() << " items=" << data.corpus.num_items()
                  << " interactions=" << data.log.size() << "\n";
      } else if (stage == "split") {
        const PreparedData data = prepare_data(config);
        const auto& sets = data.primary(config);
        std::filesystem::create_directories(config.output_dir / "splits");
        std::ofstream matrix(config.output_dir / "train.csr");
        write_matrix(matrix, sets.train);
        write_file(config.output_dir / "splits" / (sets.validation.name + ".json"),
                   dump_stable(split_manifest(sets.validation, config.split)));
        if (sets.test) {
          write_file(config.output_dir / "splits" / (sets.test->name + ".json"),
                     dump_stable(split_manifest(*sets.test, config.split)));
        }
        std::cout << "train_users=" << sets.train_users.size()
                  << " validation_users=" << sets.validation.users.size()
                  << " test_users=" << (sets.test ? sets.test->users.size() : 0) << "\n";
      } else if (stage == "train") {
        RunOptions opts;
        opts.evaluate = false;
        const auto r = run_experiment(config, opts);
        if (r.training) {
          std::cout << "pareto_entries=" << r.training->pareto.size()
                    << " best_epoch=" << r.training->best_epoch << "\n";
        }
      } else if (stage == "evaluate") {
        RunOptions opts;
        if (!checkpoint.empty()) opts.checkpoint = checkpoint;
        print_reports(run_experiment(config, opts));
      }
    }
  } catch (const StageError& e) {
    std::cerr << "temporec " << stage << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "temporec " << stage << ": [" << stage << "] " << e.what() << "\n";
    return 1;
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  std::cerr << "temporec " << stage << ": done in " << seconds << " s\n";
  return 0;
}

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <gtest/gtest.h>

#include "temporec/config.hpp"
#include "temporec/error.hpp"
#include "temporec/experiment.hpp"
#include "temporec/report.hpp"
#include "temporec/synthetic.hpp"

namespace temporec {
namespace {

namespace fs = std::filesystem;

ExperimentConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_experiment_config(in);
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("temporec_harness_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// ---- configuration -------------------------------------------------------

TEST(Config, ParsesSectionsCommentsAndArrays) {
  const auto c = parse(R"(# experiment
name = "demo"   # trailing comment
seed = 7
[synthetic]
users = 300
recency_affinity = 12.5
[split]
protocol = "proportional"
[model]
kind = "svd"
svd_dims = 16
[eval]
ks = [1, 5, 20]
)");
  EXPECT_EQ(c.name, "demo");
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.synthetic.users, 300u);
  EXPECT_DOUBLE_EQ(c.synthetic.recency_affinity, 12.5);
  EXPECT_EQ(c.split.protocol, Protocol::proportional);
  EXPECT_EQ(c.model, ModelKind::svd);
  EXPECT_EQ(c.ks, (std::vector<std::size_t>{1, 5, 20}));
}

TEST(Config, CanonicalTextRoundTrips) {
  auto c = parse(R"(seed = 3
[train]
epochs = 4
objectives = ["relevance", "recency"]
beta_max = 0.3
[eval]
ks = [10]
)");
  const std::string text = to_toml(c);
  const auto again = parse(text);
  EXPECT_EQ(to_toml(again), text);
  EXPECT_EQ(again.train.objectives.size(), 2u);
  EXPECT_DOUBLE_EQ(again.train.beta_max, 0.3);
}

TEST(Config, UnknownKeyReportsItsLine) {
  try {
    parse("seed = 1\n[model]\nkind = \"vae\"\nhiden = 40\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4u);
  }
}

TEST(Config, UnknownSectionIsRejected) {
  EXPECT_THROW(parse("[modle]\nkind = \"vae\"\n"), ParseError);
}

TEST(Config, WrongTypeIsRejected) {
  try {
    parse("[train]\nepochs = \"ten\"\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(Config, DuplicateKeyIsRejected) {
  EXPECT_THROW(parse("seed = 1\nseed = 2\n"), ParseError);
}

TEST(Config, RecencyObjectiveNeedsTimestamps) {
  EXPECT_THROW(parse(R"([corpus]
source = "csv"
path = "log.csv"
timestamp_column = ""
[train]
objectives = ["relevance", "recency"]
)"),
               ContractError);
}

TEST(Config, BaselinesTrainOnRelevanceOnly) {
  EXPECT_THROW(parse("[model]\nkind = \"popularity\"\n[train]\nobjectives = [\"recency\"]\n"),
               ContractError);
}

TEST(Config, StageSeedsAreDistinctAndStable) {
  ExperimentConfig a, b;
  a.seed = b.seed = 99;
  a.derive_stage_seeds();
  b.derive_stage_seeds();
  EXPECT_EQ(a.split.seed, b.split.seed);
  EXPECT_EQ(a.init_seed(), b.init_seed());
  EXPECT_NE(a.split.seed, a.train.seed);
  EXPECT_NE(a.svd.seed, a.synthetic.seed);
}

// ---- synthetic corpus ----------------------------------------------------

TEST(Synthetic, FixedSeedIsReproducible) {
  DriftCorpusSpec spec;
  spec.users = 50;
  spec.items = 40;
  spec.recency_affinity = 5.0;
  spec.seed = 11;
  EXPECT_EQ(generate_drift_corpus(spec), generate_drift_corpus(spec));
  auto other = spec;
  other.seed = 12;
  EXPECT_NE(generate_drift_corpus(spec), generate_drift_corpus(other));
}

TEST(Synthetic, RespectsArrivalsAndNeverRepeatsAnItem) {
  DriftCorpusSpec spec;
  spec.users = 80;
  spec.items = 60;
  spec.recency_affinity = 10.0;
  spec.seed = 5;
  const auto corpus = generate_drift(spec);
  std::unordered_map<std::string, std::size_t> item_no;
  for (std::size_t j = 0; j < corpus.item_ids.size(); ++j) item_no[corpus.item_ids[j]] = j;
  std::map<std::string, std::set<std::string>> seen;
  for (const auto& r : corpus.log.records) {
    EXPECT_GE(r.timestamp, corpus.arrivals.at(item_no.at(r.item)));
    EXPECT_LE(r.timestamp, spec.horizon);
    EXPECT_TRUE(seen[r.user].insert(r.item).second);
  }
  for (const auto& [user, items] : seen) {
    EXPECT_GE(items.size(), spec.min_events);
    EXPECT_LE(items.size(), spec.max_events);
  }
}

TEST(Synthetic, InvalidSpecsAreRejected) {
  DriftCorpusSpec spec;
  spec.users = 0;
  EXPECT_THROW(validate(spec), ContractError);
  spec = {};
  spec.recency_affinity = -1.0;
  EXPECT_THROW(validate(spec), ContractError);
  spec = {};
  spec.min_events = 10;
  spec.max_events = 5;
  EXPECT_THROW(validate(spec), ContractError);
}

// Draws one single-event user per corpus and bins the chosen item's arrival
// rank among the items available at that moment into deciles. Without a
// recency pull the popularity and taste weights are independent of arrival
// order, so the rank is uniform.
double arrival_rank_p_value(double affinity) {
  constexpr int kCorpora = 400;
  constexpr int kBins = 10;
  std::vector<double> observed(kBins, 0.0), expected(kBins, 0.0);
  for (int n = 0; n < kCorpora; ++n) {
    DriftCorpusSpec spec;
    spec.users = 1;
    spec.items = 60;
    spec.min_events = spec.max_events = 1;
    spec.recency_affinity = affinity;
    spec.seed = 1000 + static_cast<std::uint64_t>(n);
    const auto c = generate_drift(spec);
    const auto& event = c.log.records.at(0);
    std::vector<std::size_t> available;
    for (std::size_t j = 0; j < c.arrivals.size(); ++j) {
      if (c.arrivals[j] <= event.timestamp) available.push_back(j);
    }
    std::stable_sort(available.begin(), available.end(), [&](std::size_t a, std::size_t b) {
      return c.arrivals[a] < c.arrivals[b];
    });
    const std::size_t m = available.size();
    std::size_t rank = m;
    for (std::size_t r = 0; r < m; ++r) {
      if (c.item_ids[available[r]] == event.item) rank = r;
    }
    EXPECT_LT(rank, m);
    observed[rank * kBins / m] += 1.0;
    for (std::size_t r = 0; r < m; ++r) expected[r * kBins / m] += 1.0 / static_cast<double>(m);
  }
  double stat = 0.0;
  int cells = 0;
  for (int b = 0; b < kBins; ++b) {
    if (expected[b] <= 0.0) continue;
    stat += (observed[b] - expected[b]) * (observed[b] - expected[b]) / expected[b];
    ++cells;
  }
  boost::math::chi_squared dist(cells - 1);
  return boost::math::cdf(boost::math::complement(dist, stat));
}

TEST(Synthetic, NoAffinityMeansNoArrivalPreference) {
  EXPECT_GT(arrival_rank_p_value(0.0), 0.01);
}

TEST(Synthetic, ArrivalTestDetectsAffinity) {
  EXPECT_LT(arrival_rank_p_value(20.0), 0.01);
}

TEST(Synthetic, HighAffinityFavoursFreshItems) {
  auto mean_age = [](double affinity) {
    DriftCorpusSpec spec;
    spec.users = 200;
    spec.items = 100;
    spec.recency_affinity = affinity;
    spec.seed = 21;
    const auto c = generate_drift(spec);
    std::unordered_map<std::string, Timestamp> arrival;
    for (std::size_t j = 0; j < c.item_ids.size(); ++j) arrival[c.item_ids[j]] = c.arrivals[j];
    double sum = 0.0;
    for (const auto& r : c.log.records) sum += static_cast<double>(r.timestamp - arrival[r.item]);
    return sum / static_cast<double>(c.log.size());
  };
  EXPECT_LT(mean_age(20.0), 0.5 * mean_age(0.0));
}

// ---- experiment runner ---------------------------------------------------

ExperimentConfig tiny_csv_config(const fs::path& dir) {
  DriftCorpusSpec spec;
  spec.users = 120;
  spec.items = 60;
  spec.seed = 4;
  spec.recency_affinity = 5.0;
  write_interactions(dir / "log.csv", generate_drift_corpus(spec));
  ExperimentConfig c;
  c.name = "tiny";
  c.seed = 8;
  c.source = CorpusSource::csv;
  c.corpus_path = dir / "log.csv";
  c.schema.rating_column = "";
  c.model = ModelKind::popularity;
  c.split.protocol = Protocol::traditional;
  c.ks = {5, 10};
  c.output_dir = dir / "run";
  c.derive_stage_seeds();
  return c;
}

TEST(Experiment, PopularityRunReportsValidationAndTest) {
  const auto dir = scratch_dir("popularity");
  const auto config = tiny_csv_config(dir);
  const auto result = run_experiment(config);
  std::set<std::string> splits;
  for (const auto& r : result.reports) splits.insert(r.split);
  EXPECT_TRUE(splits.count("val_trad"));
  EXPECT_TRUE(splits.count("test_temporal"));
  EXPECT_TRUE(fs::exists(config.output_dir / "metrics.json"));
  EXPECT_TRUE(fs::exists(config.output_dir / "manifest.json"));
  const auto manifest = nlohmann::json::parse(read_file(config.output_dir / "manifest.json"));
  EXPECT_EQ(manifest["corpus_sha256"].get<std::string>().size(), 64u);
  auto elsewhere = config;
  elsewhere.output_dir = dir / "other";
  EXPECT_EQ(run_experiment(elsewhere).manifest["config_sha256"], manifest["config_sha256"]);
  EXPECT_EQ(manifest["format"], "temporec-bundle v1");
}

TEST(Experiment, RepeatedRunsAreByteIdentical) {
  const auto dir = scratch_dir("repeat");
  auto config = tiny_csv_config(dir);
  config.model = ModelKind::vae;
  config.vae.hidden = 16;
  config.vae.latent = 4;
  config.train.epochs = 2;
  config.train.batch_size = 20;
  config.train.objectives = {Objective::relevance, Objective::recency};
  config.split.protocol = Protocol::strict_cutoff;
  config.output_dir = dir / "a";
  run_experiment(config);
  config.output_dir = dir / "b";
  run_experiment(config);
  EXPECT_EQ(read_file(dir / "a" / "metrics.json"), read_file(dir / "b" / "metrics.json"));
  EXPECT_EQ(read_file(dir / "a" / "pareto.csv"), read_file(dir / "b" / "pareto.csv"));
  EXPECT_EQ(read_file(dir / "a" / "epochs.ndjson"), read_file(dir / "b" / "epochs.ndjson"));
}

TEST(Experiment, InvalidConfigFailsBeforeLoading) {
  ExperimentConfig c;
  c.source = CorpusSource::csv;
  c.corpus_path = "/nonexistent/log.csv";
  c.schema.timestamp_column = "";
  c.train.objectives = {Objective::relevance, Objective::recency};
  c.output_dir = scratch_dir("invalid") / "run";
  try {
    run_experiment(c);
    FAIL() << "expected StageError";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "config");
  }
  EXPECT_FALSE(fs::exists(c.output_dir));
}

TEST(Experiment, MissingInputNamesTheLoadStage) {
  ExperimentConfig c;
  c.source = CorpusSource::csv;
  c.corpus_path = "/nonexistent/log.csv";
  c.model = ModelKind::popularity;
  c.output_dir = scratch_dir("missing") / "run";
  try {
    run_experiment(c);
    FAIL() << "expected StageError";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "load");
  }
}

TEST(Experiment, Sha256MatchesKnownDigest) {
  EXPECT_EQ(sha256_hex("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

// ---- reports -------------------------------------------------------------

ParetoEntry point(double recall, double recency, int epoch = 0) {
  return {{recall, recency}, epoch, ""};
}

TEST(Report, FrontComparison) {
  const std::vector<ParetoEntry> a{point(0.13, 0.47)};
  const std::vector<ParetoEntry> b{point(0.11, 0.23)};
  EXPECT_EQ(compare_fronts(a, b), FrontVerdict::a_dominates_b);
  EXPECT_EQ(compare_fronts(b, a), FrontVerdict::b_dominates_a);
  EXPECT_EQ(compare_fronts(a, a), FrontVerdict::neither);
  const std::vector<ParetoEntry> c{point(0.2, 0.1), point(0.05, 0.6)};
  EXPECT_EQ(compare_fronts(a, c), FrontVerdict::neither);
}

TEST(Report, EmptyParetoFileIsAnError) {
  const auto dir = scratch_dir("pareto");
  std::ofstream(dir / "empty.csv") << "epoch,recall,recency,checkpoint\n";
  EXPECT_THROW(load_front(dir / "empty.csv"), ParseError);
  std::ofstream(dir / "blank.csv");
  EXPECT_THROW(load_front(dir / "blank.csv"), ParseError);
}

TEST(Report, FrontPointsAreSortedByRecall) {
  const auto csv = front_points_csv({point(0.75, 0.125, 4), point(0.25, 0.5, 2)});
  EXPECT_LT(csv.find("0.25,0.5,2"), csv.find("0.75,0.125,4"));
}

TEST(Report, TablesFromIdenticalBundles) {
  MetricReport r;
  r.split = "test_temporal";
  r.protocol = "cutoff";
  r.k = 20;
  r.n_users = 10;
  r.recall = 0.25;
  const std::vector<Bundle> bundles{{"a", {r}}, {"b", {r}}};
  const auto tables = metric_tables(bundles);
  EXPECT_NE(tables.text.find("test_temporal"), std::string::npos);
  EXPECT_EQ(std::count(tables.csv.begin(), tables.csv.end(), '\n'), 3);
}

TEST(Report, IncompatibleKsAreRejected) {
  MetricReport r20;
  r20.split = "test_temporal";
  r20.k = 20;
  MetricReport r10 = r20;
  r10.k = 10;
  const std::vector<Bundle> bundles{{"a", {r20}}, {"b", {r10}}};
  EXPECT_THROW(metric_tables(bundles), ContractError);
}

TEST(Report, LoadsBundleWrittenByARun) {
  const auto dir = scratch_dir("bundle");
  const auto config = tiny_csv_config(dir);
  const auto result = run_experiment(config);
  const auto bundle = load_bundle(config.output_dir);
  ASSERT_EQ(bundle.reports.size(), result.reports.size());
  EXPECT_DOUBLE_EQ(bundle.reports[0].recall, result.reports[0].recall);
}

}  // namespace
}  // namespace temporec

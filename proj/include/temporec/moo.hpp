#pragma once

// Multi-objective training: gradient normalization, the min-norm
// combination of objective gradients, Pareto-set bookkeeping and the
// epoch loop that ties them to the VAE.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "temporec/metrics.hpp"
#include "temporec/protocols.hpp"
#include "temporec/vae.hpp"

namespace temporec {

Eigen::VectorXd normalize_gradient(const Eigen::VectorXd& gradient,
                                   double empirical_loss);

struct MinNormSolution {
  std::vector<double> alpha;  // on the simplex, one weight per gradient
  std::size_t iterations = 0;
  double gap = 0.0;  // Frank-Wolfe duality gap at exit (0 when analytic)
};

// Convex combination of the gradients with the smallest norm. Two gradients
// use the closed form; more use Frank-Wolfe with away steps on the Gram
// matrix, followed by an exact solve on the final support.
MinNormSolution min_norm_weights(std::span<const Eigen::VectorXd> gradients);

// Same problem given only the Gram matrix G_ij = g_i . g_j.
MinNormSolution min_norm_frank_wolfe(const Eigen::MatrixXd& gram,
                                     std::size_t max_iterations = 100,
                                     double gap_tolerance = 1e-9);

// Closed form for two gradients; alpha weights the first one.
double min_norm_pair(const Eigen::VectorXd& g1, const Eigen::VectorXd& g2);

// a dominates b: a >= b everywhere and a != b. Larger is better.
bool pareto_dominates(std::span<const double> a, std::span<const double> b);

struct ParetoEntry {
  std::vector<double> metrics;
  int epoch = 0;
  std::string checkpoint;
};

// Incrementally maintained set of mutually non-dominated entries. Entries
// with identical metric vectors do not dominate one another and coexist.
class ParetoSet {
 public:
  // Returns false (set unchanged) when an existing entry dominates `entry`;
  // otherwise inserts it and evicts every entry it dominates.
  bool offer(ParetoEntry entry);

  const std::vector<ParetoEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

 private:
  std::vector<ParetoEntry> entries_;
};

// CSV: epoch,recall,recency,checkpoint (two-metric fronts).
void write_pareto_csv(std::ostream& out, const ParetoSet& set);
std::vector<ParetoEntry> read_pareto_csv(std::istream& in);

enum class OptimizerKind { adam, sgd };

struct TrainConfig {
  int epochs = 20;
  std::size_t batch_size = 100;
  double learning_rate = 1e-3;
  std::vector<Objective> objectives{Objective::relevance};
  OptimizerKind optimizer = OptimizerKind::adam;
  double beta_max = 0.2;
  double anneal_fraction = 0.4;  // share of steps over which beta ramps up
  bool recency_includes_kl = false;
  std::size_t empirical_batches = 10;
  std::vector<std::size_t> ks{20};
  std::size_t pareto_k = 20;
  std::uint64_t seed = 0;
  // When set, a checkpoint is written here for every Pareto entry.
  std::optional<std::filesystem::path> checkpoint_dir;
};

// Loss of each objective captured once, before the first update.
struct EmpiricalLosses {
  std::vector<double> values;
  std::size_t sample_rows = 0;
};

EmpiricalLosses capture_empirical_losses(const VaeParams& params,
                                         const SparseUserItemMatrix& train,
                                         std::span<const UserIndex> sample,
                                         const RecencyWeights& weights,
                                         std::span<const Objective> objectives,
                                         const LossOptions& opts);

class AdamState {
 public:
  explicit AdamState(std::size_t n) : m_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n))), v_(m_) {}
  void apply(Eigen::Ref<Eigen::VectorXd> params, const Eigen::VectorXd& grad,
             double learning_rate);

 private:
  Eigen::VectorXd m_;
  Eigen::VectorXd v_;
  long step_ = 0;
};

struct StepLog {
  int epoch = 0;
  std::size_t batch = 0;
  double beta = 0.0;
  std::vector<double> losses;
  std::vector<double> alpha;
  std::vector<double> grad_norms;  // of the normalized gradients
  double combined_norm = 0.0;
};

nlohmann::json to_json(const StepLog& log);

// One update: shared forward pass, per-objective gradients divided by their
// empirical losses, min-norm weights, then an Adam (or SGD) step on the
// combined direction.
StepLog smsgda_step(VaeParams& params, AdamState& adam,
                    const Eigen::MatrixXd& batch, const RecencyWeights& weights,
                    const LossOptions& loss_opts, const EmpiricalLosses& empirical,
                    const TrainConfig& config, Rng& rng);

struct EpochRecord {
  int epoch = 0;
  std::vector<MetricReport> validation;
  double recall = 0.0;   // at pareto_k
  double recency = 0.0;  // at pareto_k
};

struct TrainResult {
  ParetoSet pareto;
  EmpiricalLosses empirical;
  std::vector<StepLog> steps;
  std::vector<EpochRecord> epochs;
  std::map<int, VaeParams> checkpoints;  // epoch -> params, Pareto entries only
  int best_epoch = 0;                    // highest validation recall
  VaeParams final_params;

  const VaeParams& best_params() const { return checkpoints.at(best_epoch); }
};

// Runs the epoch loop: SMSGDA updates over shuffled training rows, then
// evaluation on `validation` and a Pareto update with (Recall@k, Recency@k).
TrainResult train(const TrainConfig& config, VaeParams init,
                  const SparseUserItemMatrix& train_matrix,
                  std::span<const UserIndex> train_users,
                  const EvalSplit& validation, const RecencyWeights& weights);

// beta after `step` of `total_steps` under linear annealing.
double annealed_beta(const TrainConfig& config, std::size_t step,
                     std::size_t total_steps);

}  // namespace temporec

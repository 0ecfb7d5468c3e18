#include "temporec/moo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "temporec/error.hpp"

namespace temporec {

namespace {

double quadratic(const Eigen::MatrixXd& gram, const Eigen::VectorXd& alpha) {
  return alpha.dot(gram * alpha);
}

// Minimizes alpha^T G alpha over the affine hull of the support with
// sum(alpha) = 1. Returns nullopt if the KKT system is singular or the
// solution leaves the simplex.
std::optional<Eigen::VectorXd> solve_on_support(const Eigen::MatrixXd& gram,
                                                const Eigen::VectorXd& alpha) {
  std::vector<Eigen::Index> support;
  for (Eigen::Index i = 0; i < alpha.size(); ++i) {
    if (alpha(i) > 0.0) support.push_back(i);
  }
  const auto m = static_cast<Eigen::Index>(support.size());
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(m + 1, m + 1);
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = 0; b < m; ++b) kkt(a, b) = gram(support[a], support[b]);
    kkt(a, m) = 1.0;
    kkt(m, a) = 1.0;
  }
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m + 1);
  rhs(m) = 1.0;
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
  if (!lu.isInvertible()) return std::nullopt;
  const Eigen::VectorXd sol = lu.solve(rhs);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(alpha.size());
  for (Eigen::Index a = 0; a < m; ++a) {
    if (!std::isfinite(sol(a)) || sol(a) < 0.0) return std::nullopt;
    out(support[a]) = sol(a);
  }
  out /= out.sum();
  return out;
}

double fw_gap(const Eigen::MatrixXd& gram, const Eigen::VectorXd& alpha) {
  const Eigen::VectorXd g_alpha = gram * alpha;
  return alpha.dot(g_alpha) - g_alpha.minCoeff();
}

}  // namespace

Eigen::VectorXd normalize_gradient(const Eigen::VectorXd& gradient,
                                   double empirical_loss) {
  if (!(empirical_loss > 0.0) || !std::isfinite(empirical_loss)) {
    throw ContractError("empirical loss must be positive and finite");
  }
  return gradient / empirical_loss;
}

double min_norm_pair(const Eigen::VectorXd& g1, const Eigen::VectorXd& g2) {
  const Eigen::VectorXd diff = g1 - g2;
  const double denom = diff.squaredNorm();
  if (denom == 0.0) return 0.5;
  return std::clamp((g2 - g1).dot(g2) / denom, 0.0, 1.0);
}

MinNormSolution min_norm_frank_wolfe(const Eigen::MatrixXd& gram,
                                     std::size_t max_iterations,
                                     double gap_tolerance) {
  const Eigen::Index n = gram.rows();
  if (n == 0 || gram.cols() != n) throw ContractError("empty or non-square Gram matrix");
  Eigen::VectorXd alpha = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  MinNormSolution sol;
  for (; sol.iterations < max_iterations; ++sol.iterations) {
    const Eigen::VectorXd g_alpha = gram * alpha;
    const double value = alpha.dot(g_alpha);
    Eigen::Index toward = 0;
    g_alpha.minCoeff(&toward);
    const double gap = value - g_alpha(toward);
    if (gap <= gap_tolerance) break;

    // Away vertex: the supported coordinate with the largest gradient.
    Eigen::Index away = -1;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (alpha(i) > 0.0 && (away < 0 || g_alpha(i) > g_alpha(away))) away = i;
    }
    const double away_gap = g_alpha(away) - value;

    Eigen::VectorXd direction;
    double step_max = 1.0;
    if (gap >= away_gap || alpha(away) >= 1.0) {
      direction = -alpha;
      direction(toward) += 1.0;
    } else {
      direction = alpha;
      direction(away) -= 1.0;
      step_max = alpha(away) / (1.0 - alpha(away));
    }
    const double curvature = direction.dot(gram * direction);
    const double slope = direction.dot(g_alpha);
    double step = curvature > 0.0 ? -slope / curvature : step_max;
    step = std::clamp(step, 0.0, step_max);
    alpha += step * direction;
    alpha = alpha.cwiseMax(0.0);
    if (step == step_max && step_max < 1.0) alpha(away) = 0.0;
    alpha /= alpha.sum();
  }

  // Polish: the iterate has found the active face, solve on it exactly.
  if (const auto exact = solve_on_support(gram, alpha)) {
    if (quadratic(gram, *exact) <= quadratic(gram, alpha) &&
        fw_gap(gram, *exact) <= fw_gap(gram, alpha)) {
      alpha = *exact;
    }
  }
  sol.gap = fw_gap(gram, alpha);
  sol.alpha.assign(alpha.data(), alpha.data() + n);
  return sol;
}

MinNormSolution min_norm_weights(std::span<const Eigen::VectorXd> gradients) {
  if (gradients.empty()) throw ContractError("no gradients to combine");
  for (const auto& g : gradients) {
    if (g.size() != gradients.front().size()) {
      throw ContractError("gradients differ in length");
    }
  }
  MinNormSolution sol;
  if (gradients.size() == 1) {
    sol.alpha = {1.0};
    return sol;
  }
  if (gradients.size() == 2) {
    const double a = min_norm_pair(gradients[0], gradients[1]);
    sol.alpha = {a, 1.0 - a};
    return sol;
  }
  const auto n = static_cast<Eigen::Index>(gradients.size());
  Eigen::MatrixXd gram(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      gram(i, j) = gram(j, i) = gradients[i].dot(gradients[j]);
    }
  }
  return min_norm_frank_wolfe(gram);
}

bool pareto_dominates(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ContractError("metric vectors differ in length");
  bool strictly = false;
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (a[j] < b[j]) return false;
    if (a[j] > b[j]) strictly = true;
  }
  return strictly;
}

bool ParetoSet::offer(ParetoEntry entry) {
  for (const auto& e : entries_) {
    if (pareto_dominates(e.metrics, entry.metrics)) return false;
  }
  std::erase_if(entries_, [&](const ParetoEntry& e) {
    return pareto_dominates(entry.metrics, e.metrics);
  });
  entries_.push_back(std::move(entry));
  return true;
}

void write_pareto_csv(std::ostream& out, const ParetoSet& set) {
  out << "epoch,recall,recency,checkpoint\n";
  auto entries = set.entries();
  std::sort(entries.begin(), entries.end(),
            [](const ParetoEntry& a, const ParetoEntry& b) { return a.epoch < b.epoch; });
  out.precision(17);
  for (const auto& e : entries) {
    if (e.metrics.size() != 2) throw ContractError("Pareto CSV holds two metrics");
    out << e.epoch << ',' << e.metrics[0] << ',' << e.metrics[1] << ','
        << e.checkpoint << '\n';
  }
}

std::vector<ParetoEntry> read_pareto_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "empty Pareto file");
  std::vector<ParetoEntry> entries;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::stringstream row(line);
    std::string epoch, recall, recency, checkpoint;
    if (!std::getline(row, epoch, ',') || !std::getline(row, recall, ',') ||
        !std::getline(row, recency, ',')) {
      throw ParseError(line_no, "malformed Pareto row");
    }
    std::getline(row, checkpoint);
    try {
      entries.push_back(
          {{std::stod(recall), std::stod(recency)}, std::stoi(epoch), checkpoint});
    } catch (const std::exception&) {
      throw ParseError(line_no, "malformed Pareto row");
    }
  }
  if (entries.empty()) throw ParseError(line_no, "Pareto file has no entries");
  return entries;
}

EmpiricalLosses capture_empirical_losses(const VaeParams& params,
                                         const SparseUserItemMatrix& train,
                                         std::span<const UserIndex> sample,
                                         const RecencyWeights& weights,
                                         std::span<const Objective> objectives,
                                         const LossOptions& opts) {
  if (sample.empty()) throw ContractError("empty sample for empirical losses");
  const Eigen::MatrixXd rows = dense_rows(train, sample);
  const auto fwd = vae_forward(
      params, rows, inference_noise(params.arch(), rows.cols()));
  const LossPair loss = vae_losses(fwd, rows, weights, opts);
  EmpiricalLosses out;
  out.sample_rows = sample.size();
  for (const Objective o : objectives) {
    const double v = loss.get(o);
    if (!std::isfinite(v) || v <= 0.0) {
      throw NumericError("empirical " + std::string(to_string(o)) +
                         " loss is " + std::to_string(v) +
                         "; gradient normalization needs a positive value");
    }
    out.values.push_back(v);
  }
  return out;
}

void AdamState::apply(Eigen::Ref<Eigen::VectorXd> params,
                      const Eigen::VectorXd& grad, double learning_rate) {
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  ++step_;
  m_ = kBeta1 * m_ + (1.0 - kBeta1) * grad;
  v_ = kBeta2 * v_ + (1.0 - kBeta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(step_));
  params.array() -= learning_rate * (m_.array() / c1) /
                    ((v_.array() / c2).sqrt() + kEps);
}

nlohmann::json to_json(const StepLog& log) {
  return {{"epoch", log.epoch},       {"batch", log.batch},
          {"beta", log.beta},         {"losses", log.losses},
          {"alpha", log.alpha},       {"grad_norms", log.grad_norms},
          {"combined_norm", log.combined_norm}};
}

StepLog smsgda_step(VaeParams& params, AdamState& adam,
                    const Eigen::MatrixXd& batch, const RecencyWeights& weights,
                    const LossOptions& loss_opts, const EmpiricalLosses& empirical,
                    const TrainConfig& config, Rng& rng) {
  if (empirical.values.size() != config.objectives.size()) {
    throw ContractError("one empirical loss per objective required");
  }
  StepLog log;
  log.beta = loss_opts.beta;
  const VaeNoise noise = sample_noise(params.arch(), batch.cols(), rng);
  const VaeForward fwd = vae_forward(params, batch, noise);
  const LossPair loss = vae_losses(fwd, batch, weights, loss_opts);

  std::vector<Eigen::VectorXd> normalized;
  normalized.reserve(config.objectives.size());
  for (std::size_t i = 0; i < config.objectives.size(); ++i) {
    const Objective o = config.objectives[i];
    const double value = loss.get(o);
    if (!std::isfinite(value)) {
      throw NumericError(std::string(to_string(o)) + " loss is not finite (nll=" +
                         std::to_string(loss.nll) + ", kl=" +
                         std::to_string(loss.kl) + ")");
    }
    log.losses.push_back(value);
    normalized.push_back(normalize_gradient(
        vae_gradient(params, fwd, batch, weights, loss_opts, o),
        empirical.values[i]));
    log.grad_norms.push_back(normalized.back().norm());
  }
  log.alpha = min_norm_weights(normalized).alpha;
  Eigen::VectorXd combined = log.alpha[0] * normalized[0];
  for (std::size_t i = 1; i < normalized.size(); ++i) {
    combined += log.alpha[i] * normalized[i];
  }
  log.combined_norm = combined.norm();

  if (config.optimizer == OptimizerKind::adam) {
    adam.apply(params.flat(), combined, config.learning_rate);
  } else {
    params.flat() -= config.learning_rate * combined;
  }
  return log;
}

double annealed_beta(const TrainConfig& config, std::size_t step,
                     std::size_t total_steps) {
  const double ramp = config.anneal_fraction * static_cast<double>(total_steps);
  if (ramp <= 0.0) return config.beta_max;
  return config.beta_max * std::min(1.0, static_cast<double>(step) / ramp);
}

TrainResult train(const TrainConfig& config, VaeParams init,
                  const SparseUserItemMatrix& train_matrix,
                  std::span<const UserIndex> train_users,
                  const EvalSplit& validation, const RecencyWeights& weights) {
  if (config.epochs < 1) throw ContractError("epochs must be at least 1");
  if (!(config.learning_rate > 0.0)) {
    throw ContractError("learning rate must be positive");
  }
  if (config.objectives.empty()) throw ContractError("no objectives configured");
  if (config.batch_size == 0) throw ContractError("batch size must be positive");

  std::vector<UserIndex> users;
  for (const UserIndex u : train_users) {
    if (!train_matrix.row(u).empty()) users.push_back(u);
  }
  if (users.empty()) throw EmptyCorpusError("no training rows");

  TrainResult result;
  VaeParams params = std::move(init);
  const std::size_t batches =
      (users.size() + config.batch_size - 1) / config.batch_size;
  const std::size_t total_steps = batches * static_cast<std::size_t>(config.epochs);

  LossOptions loss_opts;
  loss_opts.recency_includes_kl = config.recency_includes_kl;
  loss_opts.beta = annealed_beta(config, 0, total_steps);
  {
    std::vector<UserIndex> sample = users;
    Rng rng(derive_seed(config.seed, "empirical-sample"));
    shuffle_in_place(sample, rng);
    sample.resize(std::min(sample.size(),
                           config.empirical_batches * config.batch_size));
    result.empirical = capture_empirical_losses(params, train_matrix, sample,
                                                weights, config.objectives,
                                                loss_opts);
  }

  std::vector<std::size_t> ks = config.ks;
  if (std::find(ks.begin(), ks.end(), config.pareto_k) == ks.end()) {
    ks.push_back(config.pareto_k);
  }
  const auto pareto_slot = static_cast<std::size_t>(
      std::find(ks.begin(), ks.end(), config.pareto_k) - ks.begin());

  AdamState adam(params.size());
  Rng noise_rng(derive_seed(config.seed, "step-noise"));
  std::size_t step = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::vector<UserIndex> order = users;
    Rng shuffle_rng(derive_seed(derive_seed(config.seed, "epoch-order"),
                                static_cast<std::uint64_t>(epoch)));
    shuffle_in_place(order, shuffle_rng);
    for (std::size_t b = 0; b < batches; ++b) {
      const std::size_t begin = b * config.batch_size;
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      const Eigen::MatrixXd batch = dense_rows(
          train_matrix, std::span<const UserIndex>(order).subspan(begin, end - begin));
      loss_opts.beta = annealed_beta(config, step, total_steps);
      StepLog log = smsgda_step(params, adam, batch, weights, loss_opts,
                                result.empirical, config, noise_rng);
      log.epoch = epoch;
      log.batch = b;
      result.steps.push_back(std::move(log));
      ++step;
    }

    EpochRecord record;
    record.epoch = epoch;
    record.validation = evaluate(VaeModel(params), validation, ks, weights);
    record.recall = record.validation[pareto_slot].recall;
    record.recency = record.validation[pareto_slot].recency;

    ParetoEntry entry{{record.recall, record.recency}, epoch, {}};
    if (config.checkpoint_dir) {
      entry.checkpoint =
          (*config.checkpoint_dir / ("epoch_" + std::to_string(epoch) + ".ckpt"))
              .string();
    }
    if (result.pareto.offer(entry)) {
      result.checkpoints.insert_or_assign(epoch, params);
      if (config.checkpoint_dir) {
        std::filesystem::create_directories(*config.checkpoint_dir);
        write_checkpoint(std::filesystem::path(entry.checkpoint), params);
      }
      std::erase_if(result.checkpoints, [&](const auto& kv) {
        const auto& es = result.pareto.entries();
        return std::none_of(es.begin(), es.end(), [&](const ParetoEntry& e) {
          return e.epoch == kv.first;
        });
      });
    }
    result.epochs.push_back(std::move(record));
  }

  // Best model: highest recall, then highest recency, then earliest epoch.
  const auto& entries = result.pareto.entries();
  const auto best = std::min_element(
      entries.begin(), entries.end(), [](const ParetoEntry& a, const ParetoEntry& b) {
        if (a.metrics[0] != b.metrics[0]) return a.metrics[0] > b.metrics[0];
        if (a.metrics[1] != b.metrics[1]) return a.metrics[1] > b.metrics[1];
        return a.epoch < b.epoch;
      });
  result.best_epoch = best->epoch;
  result.final_params = std::move(params);
  return result;
}

}  // namespace temporec

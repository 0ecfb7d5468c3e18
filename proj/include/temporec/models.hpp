#pragma once

// Non-neural baselines: item popularity and truncated SVD.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "temporec/corpus.hpp"
#include "temporec/metrics.hpp"

namespace temporec {

// Scores every item by its number of training interactions, the same vector
// for every user.
class PopularityModel : public ScoreProvider {
 public:
  static PopularityModel fit(const SparseUserItemMatrix& train);

  std::size_t num_items() const override { return counts_.size(); }
  std::vector<double> score(std::span<const ItemIndex> inputs) const override;
  const std::vector<double>& counts() const { return counts_; }

 private:
  std::vector<double> counts_;
};

struct SvdOptions {
  std::size_t dims = 100;
  std::size_t power_iters = 4;
  std::size_t oversample = 10;
  std::uint64_t seed = 0;
};

// Rank-d factorization X ~ U S V^T of the binary training matrix. A user with
// input row x is scored by (x V) V^T.
class SvdModel : public ScoreProvider {
 public:
  // Randomized subspace iteration. Throws ContractError if dims exceeds
  // min(rows, cols).
  static SvdModel fit(const SparseUserItemMatrix& train, const SvdOptions& opts);

  std::size_t num_items() const override {
    return static_cast<std::size_t>(item_factors_.rows());
  }
  std::vector<double> score(std::span<const ItemIndex> inputs) const override;

  const Eigen::MatrixXd& item_factors() const { return item_factors_; }  // I x d
  const Eigen::VectorXd& singular_values() const { return singular_values_; }

 private:
  Eigen::MatrixXd item_factors_;
  Eigen::VectorXd singular_values_;
};

}  // namespace temporec

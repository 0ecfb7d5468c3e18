#include "temporec/models.hpp"

#include <algorithm>

#include <Eigen/QR>
#include <Eigen/SVD>
#include <Eigen/SparseCore>

#include "temporec/error.hpp"
#include "temporec/rng.hpp"

namespace temporec {

namespace {

using SparseRows = Eigen::SparseMatrix<double, Eigen::RowMajor>;

SparseRows to_eigen(const SparseUserItemMatrix& m) {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(m.nnz());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (const ItemIndex c : m.row(r)) {
      triplets.emplace_back(static_cast<int>(r), static_cast<int>(c), 1.0);
    }
  }
  SparseRows x(static_cast<Eigen::Index>(m.rows()),
               static_cast<Eigen::Index>(m.cols()));
  x.setFromTriplets(triplets.begin(), triplets.end());
  return x;
}

// Orthonormal basis for the column space of y (thin Q of a QR).
Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& y) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(y);
  return qr.householderQ() * Eigen::MatrixXd::Identity(y.rows(), y.cols());
}

}  // namespace

PopularityModel PopularityModel::fit(const SparseUserItemMatrix& train) {
  if (train.nnz() == 0) throw ContractError("popularity fit on an empty matrix");
  PopularityModel model;
  const auto counts = train.column_counts();
  model.counts_.assign(counts.begin(), counts.end());
  return model;
}

std::vector<double> PopularityModel::score(std::span<const ItemIndex>) const {
  return counts_;
}

SvdModel SvdModel::fit(const SparseUserItemMatrix& train,
                       const SvdOptions& opts) {
  const std::size_t full = std::min(train.rows(), train.cols());
  if (opts.dims == 0 || opts.dims > full) {
    throw ContractError("SVD rank " + std::to_string(opts.dims) +
                        " must lie in [1, " + std::to_string(full) + "]");
  }
  const SparseRows x = to_eigen(train);
  const auto width = static_cast<Eigen::Index>(
      std::min(opts.dims + opts.oversample, full));

  Rng rng(opts.seed);
  Eigen::MatrixXd omega(x.cols(), width);
  for (Eigen::Index j = 0; j < omega.cols(); ++j) {
    for (Eigen::Index i = 0; i < omega.rows(); ++i) omega(i, j) = rng.normal();
  }

  // Power iterations with re-orthonormalization on both sides.
  Eigen::MatrixXd q = orthonormalize(x * omega);
  for (std::size_t it = 0; it < opts.power_iters; ++it) {
    const Eigen::MatrixXd z = orthonormalize(x.transpose() * q);
    q = orthonormalize(x * z);
  }

  const Eigen::MatrixXd b = q.transpose() * x;  // width x I
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(b, Eigen::ComputeThinV);
  const auto d = static_cast<Eigen::Index>(opts.dims);

  SvdModel model;
  model.item_factors_ = svd.matrixV().leftCols(d);
  model.singular_values_ = svd.singularValues().head(d);
  // Fix the sign of each factor so the largest-magnitude entry is positive.
  for (Eigen::Index j = 0; j < d; ++j) {
    Eigen::Index arg = 0;
    model.item_factors_.col(j).cwiseAbs().maxCoeff(&arg);
    if (model.item_factors_(arg, j) < 0) model.item_factors_.col(j) *= -1.0;
  }
  return model;
}

std::vector<double> SvdModel::score(std::span<const ItemIndex> inputs) const {
  Eigen::VectorXd latent = Eigen::VectorXd::Zero(item_factors_.cols());
  for (const ItemIndex i : inputs) {
    if (i >= num_items()) throw ContractError("input item out of range");
    latent += item_factors_.row(i).transpose();
  }
  const Eigen::VectorXd s = item_factors_ * latent;
  return {s.data(), s.data() + s.size()};
}

}  // namespace temporec

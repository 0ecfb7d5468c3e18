#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "support/oracles.hpp"
#include "temporec/error.hpp"
#include "temporec/models.hpp"
#include "temporec/vae.hpp"

namespace temporec {
namespace {

SparseUserItemMatrix random_binary(std::size_t rows, std::size_t cols, double density,
                                   std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<ItemIndex>> lists(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (rng.bernoulli(density)) lists[r].push_back(static_cast<ItemIndex>(c));
    }
  }
  return SparseUserItemMatrix::from_rows(cols, lists);
}

Eigen::MatrixXd to_dense(const SparseUserItemMatrix& m) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m.rows()),
                                            static_cast<Eigen::Index>(m.cols()));
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (const auto c : m.row(r)) d(static_cast<Eigen::Index>(r), c) = 1.0;
  }
  return d;
}

std::vector<UserIndex> all_rows(std::size_t n) {
  std::vector<UserIndex> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<UserIndex>(i);
  return v;
}

TEST(Popularity, ScoresAreColumnCounts) {
  const auto m = SparseUserItemMatrix::from_rows(3, {{0, 1}, {1}, {1, 2}});
  const auto model = PopularityModel::fit(m);
  const std::vector<ItemIndex> none;
  EXPECT_EQ(model.score(none), (std::vector<double>{1, 3, 1}));
  EXPECT_EQ(top_k(model.score(none), none, 1), std::vector<ItemIndex>{1});
}

TEST(Svd, FullRankReconstructsTrainingRows) {
  const auto m = random_binary(12, 8, 0.4, 1);
  SvdOptions opts;
  opts.dims = 8;
  const auto model = SvdModel::fit(m, opts);
  const Eigen::MatrixXd x = to_dense(m);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto scores = model.score(m.row(r));
    for (std::size_t c = 0; c < m.cols(); ++c) {
      EXPECT_NEAR(scores[c], x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)),
                  1e-6);
    }
  }
}

TEST(Svd, SingularValuesMatchEigenvaluesOfGram) {
  const auto m = SparseUserItemMatrix::from_rows(3, {{0, 1}, {1, 2}, {0, 1, 2}});
  SvdOptions opts;
  opts.dims = 3;
  const auto model = SvdModel::fit(m, opts);
  const Eigen::MatrixXd x = to_dense(m);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(x.transpose() * x);
  std::vector<double> expected;
  for (Eigen::Index k = 0; k < 3; ++k) {
    expected.push_back(std::sqrt(std::max(0.0, eig.eigenvalues()(k))));
  }
  std::sort(expected.rbegin(), expected.rend());
  for (Eigen::Index k = 0; k < 3; ++k) {
    EXPECT_NEAR(model.singular_values()(k), expected[static_cast<std::size_t>(k)], 1e-8);
  }
}

TEST(Svd, RankOneMatrixHasOneComponent) {
  const auto m = SparseUserItemMatrix::from_rows(4, {{0, 2}, {0, 2}, {0, 2}});
  SvdOptions opts;
  opts.dims = 1;
  const auto model = SvdModel::fit(m, opts);
  EXPECT_NEAR(model.singular_values()(0), std::sqrt(6.0), 1e-10);
  const auto scores = model.score(m.row(0));
  EXPECT_NEAR(scores[0], 1.0, 1e-10);
  EXPECT_NEAR(scores[1], 0.0, 1e-10);
}

TEST(Svd, FactorsAreOrthonormal) {
  const auto m = random_binary(60, 40, 0.2, 3);
  SvdOptions opts;
  opts.dims = 10;
  const auto model = SvdModel::fit(m, opts);
  const Eigen::MatrixXd vtv = model.item_factors().transpose() * model.item_factors();
  EXPECT_LE((vtv - Eigen::MatrixXd::Identity(10, 10)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Svd, TooManyDimsIsError) {
  const auto m = random_binary(5, 4, 0.5, 2);
  SvdOptions opts;
  opts.dims = 5;
  EXPECT_THROW(SvdModel::fit(m, opts), ContractError);
}

TEST(Vae, ForwardShapesAndNormalizedInput) {
  VaeArchitecture arch{10, 6, 3, 0.5};
  Rng rng(1);
  const auto params = VaeParams::initialize(arch, rng);
  EXPECT_EQ(params.size(), arch.num_params());
  const auto m = random_binary(4, 10, 0.5, 5);
  const auto rows = dense_rows(m, all_rows(4));
  const auto fwd = vae_forward(params, rows, inference_noise(arch, 4));
  EXPECT_EQ(fwd.logits.rows(), 10);
  EXPECT_EQ(fwd.logits.cols(), 4);
  for (Eigen::Index b = 0; b < 4; ++b) {
    if (rows.col(b).sum() > 0) EXPECT_NEAR(fwd.input.col(b).norm(), 1.0, 1e-12);
  }
  // Inference noise leaves z at the mean.
  EXPECT_EQ(fwd.z, fwd.mu);
}

TEST(Vae, UniformWeightsMakeObjectivesEqual) {
  VaeArchitecture arch{8, 5, 2, 0.0};
  Rng rng(2);
  const auto params = VaeParams::initialize(arch, rng);
  const auto rows = dense_rows(random_binary(3, 8, 0.5, 6), all_rows(3));
  const auto fwd = vae_forward(params, rows, sample_noise(arch, 3, rng));
  LossOptions opts;
  opts.recency_includes_kl = true;
  const auto losses = vae_losses(fwd, rows, RecencyWeights::uniform(8), opts);
  EXPECT_DOUBLE_EQ(losses.relevance, losses.recency);
  EXPECT_GE(losses.kl, 0.0);
}

TEST(Vae, NonFiniteActivationNamesLayer) {
  VaeArchitecture arch{6, 4, 2, 0.0};
  Rng rng(3);
  auto params = VaeParams::initialize(arch, rng);
  params.enc_weight()(0, 0) = std::numeric_limits<double>::quiet_NaN();
  const auto rows = dense_rows(SparseUserItemMatrix::from_rows(6, {{0, 1}}), all_rows(1));
  EXPECT_THROW(vae_forward(params, rows, inference_noise(arch, 1)), NumericError);
}

TEST(Vae, GradientsMatchFiniteDifferences) {
  Rng rng(77);
  for (int trial = 0; trial < 6; ++trial) {
    VaeArchitecture arch{4 + rng.uniform_index(9), 2 + rng.uniform_index(5),
                         1 + rng.uniform_index(3), 0.3};
    const auto params = VaeParams::initialize(arch, rng);
    const auto batch = static_cast<Eigen::Index>(1 + rng.uniform_index(4));
    auto rows = dense_rows(random_binary(static_cast<std::size_t>(batch), arch.items,
                                         0.4, 100 + trial),
                           all_rows(static_cast<std::size_t>(batch)));
    rows(0, 0) = 1.0;
    const auto noise = sample_noise(arch, batch, rng);
    RecencyWeights weights;
    for (std::size_t i = 0; i < arch.items; ++i) weights.weights.push_back(0.05 + rng.uniform());
    LossOptions opts;
    opts.beta = 0.3;
    opts.recency_includes_kl = trial % 2 == 1;
    const auto fwd = vae_forward(params, rows, noise);
    for (const auto objective : {Objective::relevance, Objective::recency}) {
      const auto analytic = vae_gradient(params, fwd, rows, weights, opts, objective);
      const auto numeric = oracle::finite_difference_gradient(params, rows, noise, weights,
                                                              opts, objective, 1e-4);
      EXPECT_LE(oracle::max_relative_error(analytic, numeric), 1e-4)
          << "trial " << trial << " " << to_string(objective);
    }
  }
}

TEST(Vae, CheckpointRoundTripIsExact) {
  VaeArchitecture arch{7, 5, 3, 0.5};
  Rng rng(4);
  const auto params = VaeParams::initialize(arch, rng);
  std::stringstream buffer;
  write_checkpoint(buffer, params);
  EXPECT_EQ(read_checkpoint(buffer), params);
}

TEST(Vae, CheckpointWithoutTagIsRejected) {
  std::istringstream in("7 5 3 0.5\n");
  EXPECT_THROW(read_checkpoint(in), ParseError);
}

TEST(Vae, ModelScoresMatchBatchScores) {
  VaeArchitecture arch{9, 4, 2, 0.5};
  Rng rng(8);
  const VaeModel model(VaeParams::initialize(arch, rng));
  const auto m = random_binary(3, 9, 0.4, 9);
  const auto batch = model.score_batch(dense_rows(m, all_rows(3)));
  for (std::size_t r = 0; r < 3; ++r) {
    const auto s = model.score(m.row(r));
    for (std::size_t i = 0; i < 9; ++i) {
      EXPECT_DOUBLE_EQ(s[i], batch(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(r)));
    }
  }
}

}  // namespace
}  // namespace temporec

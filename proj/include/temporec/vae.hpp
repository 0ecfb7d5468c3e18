#pragma once

// Multinomial variational autoencoder for collaborative filtering with
// hand-derived gradients for the relevance and recency-weighted objectives.
//
// Layout: input I -> tanh hidden H -> (mu, logvar) in R^L each;
// z = mu + exp(logvar / 2) * eps; z -> tanh hidden H -> logits I.
// Batches are column-major: one user per column.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "temporec/corpus.hpp"
#include "temporec/metrics.hpp"
#include "temporec/rng.hpp"

namespace temporec {

struct VaeArchitecture {
  std::size_t items = 0;
  std::size_t hidden = 200;
  std::size_t latent = 64;
  double dropout = 0.5;

  std::size_t num_params() const;
  bool operator==(const VaeArchitecture&) const = default;
};

// All weights live in one flat buffer; the structured accessors are views
// into it, so gradients and optimizer state can share the layout.
class VaeParams {
 public:
  using MatrixMap = Eigen::Map<Eigen::MatrixXd>;
  using ConstMatrixMap = Eigen::Map<const Eigen::MatrixXd>;
  using VectorMap = Eigen::Map<Eigen::VectorXd>;
  using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

  VaeParams() = default;
  explicit VaeParams(const VaeArchitecture& arch);  // zero-filled

  // Xavier-uniform weights, N(0, 0.001^2) biases.
  static VaeParams initialize(const VaeArchitecture& arch, Rng& rng);

  const VaeArchitecture& arch() const { return arch_; }
  std::size_t size() const { return data_.size(); }
  VectorMap flat() { return {data_.data(), static_cast<Eigen::Index>(data_.size())}; }
  ConstVectorMap flat() const {
    return {data_.data(), static_cast<Eigen::Index>(data_.size())};
  }

  MatrixMap enc_weight() { return matrix(0, arch_.hidden, arch_.items); }
  VectorMap enc_bias() { return vector(offsets_[1], arch_.hidden); }
  MatrixMap head_weight() { return matrix(offsets_[2], 2 * arch_.latent, arch_.hidden); }
  VectorMap head_bias() { return vector(offsets_[3], 2 * arch_.latent); }
  MatrixMap dec_weight() { return matrix(offsets_[4], arch_.hidden, arch_.latent); }
  VectorMap dec_bias() { return vector(offsets_[5], arch_.hidden); }
  MatrixMap out_weight() { return matrix(offsets_[6], arch_.items, arch_.hidden); }
  VectorMap out_bias() { return vector(offsets_[7], arch_.items); }

  ConstMatrixMap enc_weight() const { return matrix(0, arch_.hidden, arch_.items); }
  ConstVectorMap enc_bias() const { return vector(offsets_[1], arch_.hidden); }
  ConstMatrixMap head_weight() const {
    return matrix(offsets_[2], 2 * arch_.latent, arch_.hidden);
  }
  ConstVectorMap head_bias() const { return vector(offsets_[3], 2 * arch_.latent); }
  ConstMatrixMap dec_weight() const {
    return matrix(offsets_[4], arch_.hidden, arch_.latent);
  }
  ConstVectorMap dec_bias() const { return vector(offsets_[5], arch_.hidden); }
  ConstMatrixMap out_weight() const {
    return matrix(offsets_[6], arch_.items, arch_.hidden);
  }
  ConstVectorMap out_bias() const { return vector(offsets_[7], arch_.items); }

  bool operator==(const VaeParams& other) const {
    return arch_ == other.arch_ && data_ == other.data_;
  }

 private:
  MatrixMap matrix(std::size_t off, std::size_t rows, std::size_t cols) {
    return {data_.data() + off, static_cast<Eigen::Index>(rows),
            static_cast<Eigen::Index>(cols)};
  }
  ConstMatrixMap matrix(std::size_t off, std::size_t rows, std::size_t cols) const {
    return {data_.data() + off, static_cast<Eigen::Index>(rows),
            static_cast<Eigen::Index>(cols)};
  }
  VectorMap vector(std::size_t off, std::size_t n) {
    return {data_.data() + off, static_cast<Eigen::Index>(n)};
  }
  ConstVectorMap vector(std::size_t off, std::size_t n) const {
    return {data_.data() + off, static_cast<Eigen::Index>(n)};
  }

  VaeArchitecture arch_;
  std::vector<double> data_;
  std::size_t offsets_[8] = {};
};

// Random quantities of one training step, shared by every objective.
struct VaeNoise {
  Eigen::MatrixXd keep_mask;  // I x B of 0/1; empty means no dropout
  Eigen::MatrixXd eps;        // L x B
};

VaeNoise sample_noise(const VaeArchitecture& arch, Eigen::Index batch, Rng& rng);
VaeNoise inference_noise(const VaeArchitecture& arch, Eigen::Index batch);

struct VaeForward {
  Eigen::MatrixXd input;       // dropped-out, L2-normalized rows
  Eigen::MatrixXd enc_hidden;  // H x B
  Eigen::MatrixXd mu;          // L x B
  Eigen::MatrixXd logvar;      // L x B
  Eigen::MatrixXd eps;         // L x B
  Eigen::MatrixXd z;           // L x B
  Eigen::MatrixXd dec_hidden;  // H x B
  Eigen::MatrixXd logits;      // I x B
};

// `rows` holds the users' binary input rows as columns (I x B). Throws
// NumericError naming the layer if a non-finite value appears.
VaeForward vae_forward(const VaeParams& params, const Eigen::MatrixXd& rows,
                       const VaeNoise& noise);

enum class Objective { relevance, recency };

std::string_view to_string(Objective o);
Objective parse_objective(std::string_view s);

struct LossOptions {
  double beta = 0.2;
  // Whether beta * KL is added to the recency objective too.
  bool recency_includes_kl = false;
};

// Batch means. relevance = NLL + beta * KL, recency = weighted NLL
// (+ beta * KL if configured).
struct LossPair {
  double relevance = 0.0;
  double recency = 0.0;
  double nll = 0.0;
  double weighted_nll = 0.0;
  double kl = 0.0;

  double get(Objective o) const {
    return o == Objective::relevance ? relevance : recency;
  }
};

LossPair vae_losses(const VaeForward& fwd, const Eigen::MatrixXd& targets,
                    const RecencyWeights& weights, const LossOptions& opts);

// Exact gradient of the batch-mean objective with respect to the flattened
// parameters, reusing the activations of `fwd`.
Eigen::VectorXd vae_gradient(const VaeParams& params, const VaeForward& fwd,
                             const Eigen::MatrixXd& targets,
                             const RecencyWeights& weights,
                             const LossOptions& opts, Objective objective);

// Dense I x B batch from the given matrix rows.
Eigen::MatrixXd dense_rows(const SparseUserItemMatrix& matrix,
                           std::span<const UserIndex> rows);

// Inference scorer: no dropout, eps = 0, scores are the logits.
class VaeModel : public ScoreProvider {
 public:
  explicit VaeModel(VaeParams params) : params_(std::move(params)) {}

  std::size_t num_items() const override { return params_.arch().items; }
  std::vector<double> score(std::span<const ItemIndex> inputs) const override;
  Eigen::MatrixXd score_batch(const Eigen::MatrixXd& rows) const;
  const VaeParams& params() const { return params_; }

 private:
  VaeParams params_;
};

// Text checkpoint: format tag, architecture header, one parameter per line
// in shortest round-trip form.
inline constexpr const char* kVaeCheckpointTag = "temporec-vae v1";
void write_checkpoint(std::ostream& out, const VaeParams& params);
VaeParams read_checkpoint(std::istream& in);
void write_checkpoint(const std::filesystem::path& path, const VaeParams& params);
VaeParams read_checkpoint(const std::filesystem::path& path);

}  // namespace temporec

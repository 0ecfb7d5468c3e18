#include "temporec/vae.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "temporec/error.hpp"

namespace temporec {

namespace {

void check_finite(const Eigen::MatrixXd& m, const char* layer) {
  if (!m.allFinite()) {
    throw NumericError(std::string("non-finite values in VAE layer '") + layer +
                       "'");
  }
}

// Column-wise log-softmax.
Eigen::MatrixXd log_softmax(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index b = 0; b < logits.cols(); ++b) {
    const double peak = logits.col(b).maxCoeff();
    const double lse =
        peak + std::log((logits.col(b).array() - peak).exp().sum());
    out.col(b) = logits.col(b).array() - lse;
  }
  return out;
}

// Per-item weights of the negative log-likelihood for an objective.
Eigen::VectorXd objective_weights(const RecencyWeights& weights, Eigen::Index items,
                                  Objective objective) {
  if (objective == Objective::relevance) return Eigen::VectorXd::Ones(items);
  if (static_cast<Eigen::Index>(weights.size()) != items) {
    throw ContractError("recency weights do not match the catalog size");
  }
  return Eigen::Map<const Eigen::VectorXd>(weights.weights.data(), items);
}

bool includes_kl(const LossOptions& opts, Objective objective) {
  return objective == Objective::relevance || opts.recency_includes_kl;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

std::size_t VaeArchitecture::num_params() const {
  const std::size_t h = hidden, l = latent, i = items;
  return h * i + h + 2 * l * h + 2 * l + h * l + h + i * h + i;
}

VaeParams::VaeParams(const VaeArchitecture& arch)
    : arch_(arch), data_(arch.num_params(), 0.0) {
  const std::size_t h = arch.hidden, l = arch.latent, i = arch.items;
  const std::size_t sizes[8] = {h * i, h, 2 * l * h, 2 * l, h * l, h, i * h, i};
  std::size_t off = 0;
  for (int k = 0; k < 8; ++k) {
    offsets_[k] = off;
    off += sizes[k];
  }
}

VaeParams VaeParams::initialize(const VaeArchitecture& arch, Rng& rng) {
  VaeParams p(arch);
  const auto xavier = [&rng](auto m) {
    const double bound = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      for (Eigen::Index i = 0; i < m.rows(); ++i) {
        m(i, j) = (2.0 * rng.uniform() - 1.0) * bound;
      }
    }
  };
  const auto bias = [&rng](auto v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = 0.001 * rng.normal();
  };
  xavier(p.enc_weight());
  bias(p.enc_bias());
  xavier(p.head_weight());
  bias(p.head_bias());
  xavier(p.dec_weight());
  bias(p.dec_bias());
  xavier(p.out_weight());
  bias(p.out_bias());
  return p;
}

VaeNoise sample_noise(const VaeArchitecture& arch, Eigen::Index batch, Rng& rng) {
  VaeNoise noise;
  const auto items = static_cast<Eigen::Index>(arch.items);
  const auto latent = static_cast<Eigen::Index>(arch.latent);
  if (arch.dropout > 0.0) {
    noise.keep_mask.resize(items, batch);
    for (Eigen::Index b = 0; b < batch; ++b) {
      for (Eigen::Index i = 0; i < items; ++i) {
        noise.keep_mask(i, b) = rng.bernoulli(arch.dropout) ? 0.0 : 1.0;
      }
    }
  }
  noise.eps.resize(latent, batch);
  for (Eigen::Index b = 0; b < batch; ++b) {
    for (Eigen::Index l = 0; l < latent; ++l) noise.eps(l, b) = rng.normal();
  }
  return noise;
}

VaeNoise inference_noise(const VaeArchitecture& arch, Eigen::Index batch) {
  return {Eigen::MatrixXd(),
          Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(arch.latent), batch)};
}

VaeForward vae_forward(const VaeParams& params, const Eigen::MatrixXd& rows,
                       const VaeNoise& noise) {
  const auto& arch = params.arch();
  const auto latent = static_cast<Eigen::Index>(arch.latent);
  if (rows.rows() != static_cast<Eigen::Index>(arch.items)) {
    throw ContractError("input rows have " + std::to_string(rows.rows()) +
                        " items, model expects " + std::to_string(arch.items));
  }
  if (noise.eps.rows() != latent || noise.eps.cols() != rows.cols()) {
    throw ContractError("noise shape does not match the batch");
  }
  VaeForward f;
  f.input = rows;
  if (noise.keep_mask.size() != 0) {
    if (noise.keep_mask.rows() != rows.rows() ||
        noise.keep_mask.cols() != rows.cols()) {
      throw ContractError("dropout mask shape does not match the batch");
    }
    f.input = f.input.cwiseProduct(noise.keep_mask);
  }
  for (Eigen::Index b = 0; b < f.input.cols(); ++b) {
    const double norm = f.input.col(b).norm();
    if (norm > 0.0) f.input.col(b) /= norm;
  }
  check_finite(f.input, "input");

  f.enc_hidden = ((params.enc_weight() * f.input).colwise() + params.enc_bias())
                     .array()
                     .tanh();
  check_finite(f.enc_hidden, "encoder hidden");
  const Eigen::MatrixXd head =
      (params.head_weight() * f.enc_hidden).colwise() + params.head_bias();
  check_finite(head, "encoder head");
  f.mu = head.topRows(latent);
  f.logvar = head.bottomRows(latent);
  f.eps = noise.eps;
  f.z = f.mu.array() + (0.5 * f.logvar.array()).exp() * f.eps.array();
  check_finite(f.z, "latent sample");
  f.dec_hidden =
      ((params.dec_weight() * f.z).colwise() + params.dec_bias()).array().tanh();
  check_finite(f.dec_hidden, "decoder hidden");
  f.logits = (params.out_weight() * f.dec_hidden).colwise() + params.out_bias();
  check_finite(f.logits, "logits");
  return f;
}

std::string_view to_string(Objective o) {
  return o == Objective::relevance ? "relevance" : "recency";
}

Objective parse_objective(std::string_view s) {
  if (s == "relevance") return Objective::relevance;
  if (s == "recency") return Objective::recency;
  throw ContractError("unknown objective '" + std::string(s) + "'");
}

LossPair vae_losses(const VaeForward& fwd, const Eigen::MatrixXd& targets,
                    const RecencyWeights& weights, const LossOptions& opts) {
  if (targets.rows() != fwd.logits.rows() || targets.cols() != fwd.logits.cols()) {
    throw ContractError("targets do not match the logits shape");
  }
  const Eigen::MatrixXd ls = log_softmax(fwd.logits);
  const Eigen::VectorXd f =
      objective_weights(weights, ls.rows(), Objective::recency);
  const auto batch = static_cast<double>(targets.cols());

  LossPair loss;
  loss.nll = -(targets.array() * ls.array()).sum() / batch;
  loss.weighted_nll =
      -((targets.array().colwise() * f.array()) * ls.array()).sum() / batch;
  loss.kl = 0.5 *
            (fwd.logvar.array().exp() + fwd.mu.array().square() - 1.0 -
             fwd.logvar.array())
                .sum() /
            batch;
  loss.relevance = loss.nll + opts.beta * loss.kl;
  loss.recency = loss.weighted_nll;
  if (opts.recency_includes_kl) loss.recency += opts.beta * loss.kl;
  return loss;
}

Eigen::VectorXd vae_gradient(const VaeParams& params, const VaeForward& fwd,
                             const Eigen::MatrixXd& targets,
                             const RecencyWeights& weights,
                             const LossOptions& opts, Objective objective) {
  const auto latent = static_cast<Eigen::Index>(params.arch().latent);
  const double inv_batch = 1.0 / static_cast<double>(targets.cols());
  const Eigen::VectorXd c = objective_weights(weights, targets.rows(), objective);

  // d(-sum_i c_i x_i log softmax_i) / d logits = softmax * sum(c x) - c x
  const Eigen::MatrixXd weighted_targets = targets.array().colwise() * c.array();
  const Eigen::MatrixXd softmax = log_softmax(fwd.logits).array().exp();
  const Eigen::RowVectorXd mass = weighted_targets.colwise().sum();
  const Eigen::MatrixXd d_logits =
      (softmax.array().rowwise() * mass.array() - weighted_targets.array()) *
      inv_batch;

  VaeParams grad(params.arch());
  grad.out_weight() = d_logits * fwd.dec_hidden.transpose();
  grad.out_bias() = d_logits.rowwise().sum();
  const Eigen::MatrixXd d_dec_pre =
      (params.out_weight().transpose() * d_logits).array() *
      (1.0 - fwd.dec_hidden.array().square());
  grad.dec_weight() = d_dec_pre * fwd.z.transpose();
  grad.dec_bias() = d_dec_pre.rowwise().sum();
  const Eigen::MatrixXd d_z = params.dec_weight().transpose() * d_dec_pre;

  // Reparameterization z = mu + exp(logvar / 2) * eps.
  const Eigen::ArrayXXd sigma = (0.5 * fwd.logvar.array()).exp();
  Eigen::MatrixXd d_head(2 * latent, targets.cols());
  d_head.topRows(latent) = d_z;
  d_head.bottomRows(latent) = d_z.array() * fwd.eps.array() * 0.5 * sigma;
  if (includes_kl(opts, objective)) {
    const double scale = opts.beta * inv_batch;
    d_head.topRows(latent) += scale * fwd.mu;
    d_head.bottomRows(latent).array() += scale * 0.5 * (sigma.square() - 1.0);
  }

  grad.head_weight() = d_head * fwd.enc_hidden.transpose();
  grad.head_bias() = d_head.rowwise().sum();
  const Eigen::MatrixXd d_enc_pre =
      (params.head_weight().transpose() * d_head).array() *
      (1.0 - fwd.enc_hidden.array().square());
  grad.enc_weight() = d_enc_pre * fwd.input.transpose();
  grad.enc_bias() = d_enc_pre.rowwise().sum();
  return grad.flat();
}

Eigen::MatrixXd dense_rows(const SparseUserItemMatrix& matrix,
                           std::span<const UserIndex> rows) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(
      static_cast<Eigen::Index>(matrix.cols()),
      static_cast<Eigen::Index>(rows.size()));
  for (std::size_t b = 0; b < rows.size(); ++b) {
    for (const ItemIndex i : matrix.row(rows[b])) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(b)) = 1.0;
    }
  }
  return out;
}

std::vector<double> VaeModel::score(std::span<const ItemIndex> inputs) const {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(
      static_cast<Eigen::Index>(num_items()), 1);
  for (const ItemIndex i : inputs) {
    if (i >= num_items()) throw ContractError("input item out of range");
    x(static_cast<Eigen::Index>(i), 0) = 1.0;
  }
  const Eigen::MatrixXd s = score_batch(x);
  return {s.data(), s.data() + s.size()};
}

Eigen::MatrixXd VaeModel::score_batch(const Eigen::MatrixXd& rows) const {
  return vae_forward(params_, rows, inference_noise(params_.arch(), rows.cols()))
      .logits;
}

void write_checkpoint(std::ostream& out, const VaeParams& params) {
  const auto& a = params.arch();
  out << kVaeCheckpointTag << '\n'
      << "items " << a.items << " hidden " << a.hidden << " latent "
      << a.latent << " dropout " << format_double(a.dropout) << '\n'
      << "params " << params.size() << '\n';
  const auto flat = params.flat();
  for (Eigen::Index k = 0; k < flat.size(); ++k) {
    out << format_double(flat(k)) << '\n';
  }
}

VaeParams read_checkpoint(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kVaeCheckpointTag) {
    throw ParseError(1, "missing VAE checkpoint tag");
  }
  VaeArchitecture arch;
  std::string k1, k2, k3, k4, dropout;
  if (!(in >> k1 >> arch.items >> k2 >> arch.hidden >> k3 >> arch.latent >>
        k4 >> dropout) ||
      k1 != "items" || k2 != "hidden" || k3 != "latent" || k4 != "dropout") {
    throw ParseError(2, "malformed architecture header");
  }
  std::from_chars(dropout.data(), dropout.data() + dropout.size(), arch.dropout);
  std::string tag;
  std::size_t count = 0;
  if (!(in >> tag >> count) || tag != "params" || count != arch.num_params()) {
    throw ParseError(3, "parameter count does not match the architecture");
  }
  VaeParams params(arch);
  auto flat = params.flat();
  std::string token;
  for (std::size_t k = 0; k < count; ++k) {
    if (!(in >> token)) throw ParseError(4 + k, "truncated checkpoint");
    double v = 0.0;
    const auto [ptr, ec] =
        std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || ptr != token.data() + token.size()) {
      throw ParseError(4 + k, "malformed parameter '" + token + "'");
    }
    flat(static_cast<Eigen::Index>(k)) = v;
  }
  return params;
}

void write_checkpoint(const std::filesystem::path& path, const VaeParams& params) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_checkpoint(out, params);
}

VaeParams read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_checkpoint(in);
}

}  // namespace temporec

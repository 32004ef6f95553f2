#include "fiberpinn/network.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "fiberpinn/error.hpp"

namespace fiberpinn {

namespace {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic>;
using ConstMatrixMap = Eigen::Map<const Matrix>;
using MatrixMap = Eigen::Map<Matrix>;

// Points are processed in chunks; every jet matrix holds five column blocks
// of chunk width: value | d_t | d_tt | d_ttt | d_zeta.
constexpr std::size_t kChunk = 128;
enum Block : Eigen::Index { kValue = 0, kT = 1, kTT = 2, kTTT = 3, kZeta = 4 };
constexpr Eigen::Index kBlocks = 5;

struct JetPass {
  std::vector<Matrix> inputs;    // input jet of each layer
  std::vector<Matrix> preacts;   // pre-activation jet of each hidden layer
  Matrix output;                 // 2 x 5B
};

// Jet of y = tanh(a) from the jet of a, columns [0, B) of each block.
void tanh_jet(const Matrix& a, Matrix& y, Eigen::Index b) {
  y.resize(a.rows(), a.cols());
  for (Eigen::Index c = 0; c < b; ++c) {
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
      const double a1 = a(r, kT * b + c);
      const double a2 = a(r, kTT * b + c);
      const double a3 = a(r, kTTT * b + c);
      const double s = std::tanh(a(r, c));
      const double d1 = 1.0 - s * s;
      const double d2 = -2.0 * s * d1;
      const double d3 = -2.0 * d1 * (d1 - 2.0 * s * s);
      y(r, c) = s;
      y(r, kT * b + c) = d1 * a1;
      y(r, kTT * b + c) = d2 * a1 * a1 + d1 * a2;
      y(r, kTTT * b + c) = d3 * a1 * a1 * a1 + 3.0 * d2 * a1 * a2 + d1 * a3;
      y(r, kZeta * b + c) = d1 * a(r, kZeta * b + c);
    }
  }
}

// Reverse of tanh_jet: adjoint of the pre-activation jet from the adjoint of
// the activation jet. y holds the forward activations (for tanh values).
void tanh_jet_adjoint(const Matrix& a, const Matrix& y, const Matrix& y_bar,
                      Matrix& a_bar, Eigen::Index b) {
  a_bar.resize(a.rows(), a.cols());
  for (Eigen::Index c = 0; c < b; ++c) {
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
      const double a1 = a(r, kT * b + c);
      const double a2 = a(r, kTT * b + c);
      const double a3 = a(r, kTTT * b + c);
      const double az = a(r, kZeta * b + c);
      const double s = y(r, c);
      const double d1 = 1.0 - s * s;
      const double d2 = -2.0 * s * d1;
      const double d3 = -2.0 * d1 * (d1 - 2.0 * s * s);
      const double d4 = -4.0 * d1 * d2 + 8.0 * s * d1 * d1 + 4.0 * s * s * d2;
      const double g0 = y_bar(r, c);
      const double g1 = y_bar(r, kT * b + c);
      const double g2 = y_bar(r, kTT * b + c);
      const double g3 = y_bar(r, kTTT * b + c);
      const double gz = y_bar(r, kZeta * b + c);
      a_bar(r, c) = g0 * d1 + g1 * d2 * a1 + g2 * (d3 * a1 * a1 + d2 * a2) +
                    g3 * (d4 * a1 * a1 * a1 + 3.0 * d3 * a1 * a2 + d2 * a3) +
                    gz * d2 * az;
      a_bar(r, kT * b + c) = g1 * d1 + 2.0 * g2 * d2 * a1 +
                             g3 * (3.0 * d3 * a1 * a1 + 3.0 * d2 * a2);
      a_bar(r, kTT * b + c) = g2 * d1 + 3.0 * g3 * d2 * a1;
      a_bar(r, kTTT * b + c) = g3 * d1;
      a_bar(r, kZeta * b + c) = gz * d1;
    }
  }
}

void run_forward(const NetworkParams& p, std::span<const CollocationPoint> pts,
                 JetPass& pass) {
  const auto b = static_cast<Eigen::Index>(pts.size());
  const std::size_t n_layers = p.layer_count();
  pass.inputs.resize(n_layers);
  pass.preacts.resize(n_layers);

  Matrix& h0 = pass.inputs[0];
  h0.setZero(2, kBlocks * b);
  for (Eigen::Index c = 0; c < b; ++c) {
    h0(0, c) = pts[static_cast<std::size_t>(c)].t;
    h0(1, c) = pts[static_cast<std::size_t>(c)].zeta;
    h0(0, kT * b + c) = 1.0;
    h0(1, kZeta * b + c) = 1.0;
  }

  for (std::size_t l = 0; l < n_layers; ++l) {
    const auto n_in = static_cast<Eigen::Index>(p.layer_sizes[l]);
    const auto n_out = static_cast<Eigen::Index>(p.layer_sizes[l + 1]);
    const LayerOffsets off = layer_offsets(p, l);
    const Matrix w = ConstMatrixMap(p.values.data() + off.weights, n_out, n_in);
    const Eigen::VectorXd bias = Eigen::Map<const Eigen::VectorXd>(p.values.data() + off.biases, n_out);
    Matrix& a = (l + 1 == n_layers) ? pass.output : pass.preacts[l];
    a.noalias() = w * pass.inputs[l];
    a.leftCols(b).colwise() += bias;
    if (l + 1 < n_layers) tanh_jet(a, pass.inputs[l + 1], b);
  }
}

DerivativeBundle bundle_from_output(const Matrix& y, Eigen::Index c,
                                    Eigen::Index b) {
  DerivativeBundle d;
  for (Eigen::Index k = 0; k < 2; ++k) {
    const auto i = static_cast<std::size_t>(k);
    d.value[i] = y(k, c);
    d.d_t[i] = y(k, kT * b + c);
    d.d_tt[i] = y(k, kTT * b + c);
    d.d_ttt[i] = y(k, kTTT * b + c);
    d.d_zeta[i] = y(k, kZeta * b + c);
  }
  return d;
}

}  // namespace

std::size_t parameter_count(std::span<const std::size_t> layer_sizes) {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    n += layer_sizes[l] * layer_sizes[l + 1] + layer_sizes[l + 1];
  }
  return n;
}

void validate_architecture(std::span<const std::size_t> layer_sizes) {
  if (layer_sizes.size() < 2 || layer_sizes.front() != 2 || layer_sizes.back() != 2) {
    throw Error(ErrorCode::kInvalidArchitecture,
                "layer sizes must start with 2 inputs and end with 2 outputs");
  }
  for (std::size_t n : layer_sizes) {
    if (n < 1) throw Error(ErrorCode::kInvalidArchitecture, "layer size must be >= 1");
  }
}

NetworkParams zero_network(std::vector<std::size_t> layer_sizes) {
  validate_architecture(layer_sizes);
  NetworkParams p;
  p.values.assign(parameter_count(layer_sizes), 0.0);
  p.layer_sizes = std::move(layer_sizes);
  return p;
}

NetworkParams init_network(std::vector<std::size_t> layer_sizes,
                           std::uint64_t seed) {
  NetworkParams p = zero_network(std::move(layer_sizes));
  p.seed = seed;
  std::mt19937_64 engine(seed);
  for (std::size_t l = 0; l < p.layer_count(); ++l) {
    const std::size_t n_in = p.layer_sizes[l];
    const std::size_t n_out = p.layer_sizes[l + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(n_in + n_out));
    const LayerOffsets off = layer_offsets(p, l);
    for (std::size_t k = 0; k < n_in * n_out; ++k) {
      // 53 random bits -> [0, 1), mapped to [-limit, limit).
      const double u = static_cast<double>(engine() >> 11) * 0x1.0p-53;
      p.values[off.weights + k] = limit * (2.0 * u - 1.0);
    }
  }
  return p;
}

LayerOffsets layer_offsets(const NetworkParams& params, std::size_t layer) {
  std::size_t offset = 0;
  for (std::size_t l = 0; l < layer; ++l) {
    offset += params.layer_sizes[l] * params.layer_sizes[l + 1] + params.layer_sizes[l + 1];
  }
  return {offset, offset + params.layer_sizes[layer] * params.layer_sizes[layer + 1]};
}

DerivativeBundle& DerivativeBundle::operator+=(const DerivativeBundle& o) {
  add_scaled(o, 1.0);
  return *this;
}

DerivativeBundle& DerivativeBundle::operator*=(double scale) {
  for (std::size_t k = 0; k < 2; ++k) {
    value[k] *= scale;
    d_t[k] *= scale;
    d_tt[k] *= scale;
    d_ttt[k] *= scale;
    d_zeta[k] *= scale;
  }
  return *this;
}

void DerivativeBundle::add_scaled(const DerivativeBundle& o, double scale) {
  for (std::size_t k = 0; k < 2; ++k) {
    value[k] += scale * o.value[k];
    d_t[k] += scale * o.d_t[k];
    d_tt[k] += scale * o.d_tt[k];
    d_ttt[k] += scale * o.d_ttt[k];
    d_zeta[k] += scale * o.d_zeta[k];
  }
}

double DerivativeBundle::dot(const DerivativeBundle& o) const {
  double s = 0.0;
  for (std::size_t k = 0; k < 2; ++k) {
    s += value[k] * o.value[k] + d_t[k] * o.d_t[k] + d_tt[k] * o.d_tt[k] +
         d_ttt[k] * o.d_ttt[k] + d_zeta[k] * o.d_zeta[k];
  }
  return s;
}

std::array<double, 2> forward(const NetworkParams& params, double t,
                              double zeta) {
  std::vector<double> h{t, zeta};
  std::vector<double> next;
  for (std::size_t l = 0; l < params.layer_count(); ++l) {
    const std::size_t n_in = params.layer_sizes[l];
    const std::size_t n_out = params.layer_sizes[l + 1];
    const LayerOffsets off = layer_offsets(params, l);
    next.assign(n_out, 0.0);
    for (std::size_t o = 0; o < n_out; ++o) {
      double acc = params.values[off.biases + o];
      for (std::size_t i = 0; i < n_in; ++i) {
        acc += params.values[off.weights + i * n_out + o] * h[i];
      }
      next[o] = (l + 1 < params.layer_count()) ? std::tanh(acc) : acc;
    }
    h.swap(next);
  }
  return {h[0], h[1]};
}

DerivativeBundle input_derivatives(const NetworkParams& params, double t,
                                   double zeta) {
  const CollocationPoint p{t, zeta};
  return input_derivatives(params, std::span<const CollocationPoint>(&p, 1)).front();
}

std::vector<DerivativeBundle> input_derivatives(
    const NetworkParams& params, std::span<const CollocationPoint> points) {
  validate_architecture(params.layer_sizes);
  std::vector<DerivativeBundle> out;
  out.reserve(points.size());
  JetPass pass;
  for (std::size_t start = 0; start < points.size(); start += kChunk) {
    const auto chunk = points.subspan(start, std::min(kChunk, points.size() - start));
    run_forward(params, chunk, pass);
    const auto b = static_cast<Eigen::Index>(chunk.size());
    for (Eigen::Index c = 0; c < b; ++c) out.push_back(bundle_from_output(pass.output, c, b));
  }
  return out;
}

LossGradient loss_gradient(const NetworkParams& params,
                           std::span<const CollocationPoint> points,
                           const PointLoss& point_loss) {
  validate_architecture(params.layer_sizes);
  LossGradient result;
  result.gradient.assign(params.values.size(), 0.0);
  const std::size_t n_layers = params.layer_count();

  JetPass pass;
  Matrix g;      // adjoint of the current layer's pre-activation jet
  Matrix h_bar;  // adjoint of the current layer's input jet
  for (std::size_t start = 0; start < points.size(); start += kChunk) {
    const auto chunk = points.subspan(start, std::min(kChunk, points.size() - start));
    const auto b = static_cast<Eigen::Index>(chunk.size());
    run_forward(params, chunk, pass);

    g.setZero(2, kBlocks * b);
    for (Eigen::Index c = 0; c < b; ++c) {
      const PointTerm term = point_loss(start + static_cast<std::size_t>(c),
                                        bundle_from_output(pass.output, c, b));
      result.loss += term.value;
      const DerivativeBundle& adj = term.adjoint;
      for (Eigen::Index k = 0; k < 2; ++k) {
        const auto i = static_cast<std::size_t>(k);
        g(k, c) = adj.value[i];
        g(k, kT * b + c) = adj.d_t[i];
        g(k, kTT * b + c) = adj.d_tt[i];
        g(k, kTTT * b + c) = adj.d_ttt[i];
        g(k, kZeta * b + c) = adj.d_zeta[i];
      }
    }

    for (std::size_t l = n_layers; l-- > 0;) {
      const auto n_in = static_cast<Eigen::Index>(params.layer_sizes[l]);
      const auto n_out = static_cast<Eigen::Index>(params.layer_sizes[l + 1]);
      const LayerOffsets off = layer_offsets(params, l);
      Matrix gw_chunk;
      gw_chunk.noalias() = g * pass.inputs[l].transpose();
      const Eigen::VectorXd gb_chunk = g.leftCols(b).rowwise().sum();
      MatrixMap(result.gradient.data() + off.weights, n_out, n_in) += gw_chunk;
      Eigen::Map<Eigen::VectorXd>(result.gradient.data() + off.biases, n_out) += gb_chunk;
      if (l == 0) break;
      const Matrix w = ConstMatrixMap(params.values.data() + off.weights, n_out, n_in);
      h_bar.noalias() = w.transpose() * g;
      Matrix next;
      tanh_jet_adjoint(pass.preacts[l - 1], pass.inputs[l], h_bar, next, b);
      g.swap(next);
    }
  }
  if (!std::isfinite(result.loss)) {
    std::ostringstream msg;
    msg << "loss is not finite (" << result.loss << ")";
    throw Error(ErrorCode::kDivergence, msg.str());
  }
  return result;
}

}  // namespace fiberpinn

#include "spiro/lstm.hpp"

#include "spiro/error.hpp"
#include "spiro/numeric.hpp"

#include <cmath>

namespace spiro {
namespace {

LstmDirectionParams direction_zeros(int input_size, int hidden) {
  return {Eigen::MatrixXd::Zero(4 * hidden, input_size + hidden), Eigen::VectorXd::Zero(4 * hidden)};
}

LstmDirectionParams direction_random(int input_size, int hidden, std::mt19937_64& rng) {
  LstmDirectionParams p = direction_zeros(input_size, hidden);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  const double scale = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (Eigen::Index j = 0; j < p.w.cols(); ++j)
    for (Eigen::Index i = 0; i < p.w.rows(); ++i) p.w(i, j) = scale * dist(rng);
  p.b.segment(hidden, hidden).setOnes();  // forget-gate bias
  return p;
}

LstmStepCache step(const LstmDirectionParams& p, int hidden, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& h_prev, const Eigen::VectorXd& c_prev) {
  LstmStepCache s;
  s.input.resize(x.size() + hidden);
  s.input << x, h_prev;
  s.gates = p.w * s.input + p.b;
  for (int r = 0; r < 4 * hidden; ++r) {
    s.gates(r) = (r >= 2 * hidden && r < 3 * hidden) ? std::tanh(s.gates(r)) : sigmoid(s.gates(r));
  }
  const auto i = s.gates.segment(0, hidden).array();
  const auto f = s.gates.segment(hidden, hidden).array();
  const auto g = s.gates.segment(2 * hidden, hidden).array();
  s.c_prev = c_prev;
  s.c = (f * c_prev.array() + i * g).matrix();
  return s;
}

Eigen::VectorXd hidden_of(const LstmStepCache& s, int hidden) {
  return (s.gates.segment(3 * hidden, hidden).array() * s.c.array().tanh()).matrix();
}

// Runs one direction over rows [begin, end) of `x`, visiting them in
// ascending order when `reverse` is false.
void run_direction(const LstmDirectionParams& p, int hidden, const Eigen::MatrixXd& x, int begin,
                   int end, bool reverse, Eigen::MatrixXd& out, int out_col,
                   std::vector<LstmStepCache>* cache) {
  Eigen::VectorXd h = Eigen::VectorXd::Zero(hidden);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(hidden);
  for (int n = 0; n < end - begin; ++n) {
    const int row = reverse ? end - 1 - n : begin + n;
    LstmStepCache s = step(p, hidden, x.row(row).transpose(), h, c);
    h = hidden_of(s, hidden);
    c = s.c;
    out.block(row, out_col, 1, hidden) = h.transpose();
    if (cache) (*cache)[row] = std::move(s);
  }
}

void backprop_direction(const LstmDirectionParams& p, LstmDirectionParams& grad, int hidden,
                        int input_size, int begin, int end, bool reverse,
                        const std::vector<LstmStepCache>& cache, const Eigen::MatrixXd& d_out,
                        int out_col, Eigen::MatrixXd& d_x) {
  Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(hidden);
  Eigen::VectorXd dc_next = Eigen::VectorXd::Zero(hidden);
  Eigen::VectorXd dz(4 * hidden);
  for (int n = end - begin - 1; n >= 0; --n) {
    const int row = reverse ? end - 1 - n : begin + n;
    const LstmStepCache& s = cache[row];
    const Eigen::ArrayXd i = s.gates.segment(0, hidden).array();
    const Eigen::ArrayXd f = s.gates.segment(hidden, hidden).array();
    const Eigen::ArrayXd g = s.gates.segment(2 * hidden, hidden).array();
    const Eigen::ArrayXd o = s.gates.segment(3 * hidden, hidden).array();
    const Eigen::ArrayXd tc = s.c.array().tanh();

    const Eigen::ArrayXd dh = d_out.block(row, out_col, 1, hidden).transpose().array() + dh_next.array();
    const Eigen::ArrayXd dc = dc_next.array() + dh * o * (1.0 - tc.square());
    dz.segment(0, hidden) = (dc * g * i * (1.0 - i)).matrix();
    dz.segment(hidden, hidden) = (dc * s.c_prev.array() * f * (1.0 - f)).matrix();
    dz.segment(2 * hidden, hidden) = (dc * i * (1.0 - g.square())).matrix();
    dz.segment(3 * hidden, hidden) = (dh * tc * o * (1.0 - o)).matrix();

    grad.w.noalias() += dz * s.input.transpose();
    grad.b += dz;
    const Eigen::VectorXd d_input = p.w.transpose() * dz;
    d_x.row(row) += d_input.head(input_size).transpose();
    dh_next = d_input.tail(hidden);
    dc_next = (dc * f).matrix();
  }
}

}  // namespace

BiLstmParams BiLstmParams::zeros(int input_size, int hidden) {
  if (input_size < 1 || hidden < 1) throw InvalidParams("LSTM sizes must be positive");
  return {input_size, hidden, direction_zeros(input_size, hidden), direction_zeros(input_size, hidden)};
}

BiLstmParams BiLstmParams::random(int input_size, int hidden, std::mt19937_64& rng) {
  BiLstmParams p = zeros(input_size, hidden);
  p.forward = direction_random(input_size, hidden, rng);
  p.backward = direction_random(input_size, hidden, rng);
  return p;
}

void BiLstmParams::validate() const {
  for (const LstmDirectionParams* d : {&forward, &backward}) {
    if (d->w.rows() != 4 * hidden || d->w.cols() != input_size + hidden || d->b.size() != 4 * hidden) {
      throw InvalidParams("inconsistent LSTM parameter shapes");
    }
    if (!d->w.allFinite() || !d->b.allFinite()) throw InvalidParams("non-finite LSTM parameters");
  }
}

Eigen::MatrixXd bilstm_forward(const PackedFeatures& packed, const BiLstmParams& params,
                               BiLstmCache* cache) {
  params.validate();
  if (packed.rows.cols() != params.input_size) throw ShapeError("packed width does not match LSTM input");
  const int total = static_cast<int>(packed.rows.rows());
  const int h = params.hidden;
  Eigen::MatrixXd out(total, 2 * h);
  if (cache) {
    cache->forward.assign(total, {});
    cache->backward.assign(total, {});
  }
  for (int n = 0; n < packed.samples(); ++n) {
    const int begin = packed.offsets[n];
    const int end = packed.offsets[n + 1];
    run_direction(params.forward, h, packed.rows, begin, end, false, out, 0,
                  cache ? &cache->forward : nullptr);
    run_direction(params.backward, h, packed.rows, begin, end, true, out, h,
                  cache ? &cache->backward : nullptr);
  }
  return out;
}

Eigen::MatrixXd bilstm_backward(const PackedFeatures& packed, const BiLstmCache& cache,
                                const Eigen::MatrixXd& d_outputs, const BiLstmParams& params,
                                BiLstmParams& grad) {
  const int h = params.hidden;
  Eigen::MatrixXd d_x = Eigen::MatrixXd::Zero(packed.rows.rows(), params.input_size);
  for (int n = 0; n < packed.samples(); ++n) {
    const int begin = packed.offsets[n];
    const int end = packed.offsets[n + 1];
    backprop_direction(params.forward, grad.forward, h, params.input_size, begin, end, false,
                       cache.forward, d_outputs, 0, d_x);
    backprop_direction(params.backward, grad.backward, h, params.input_size, begin, end, true,
                       cache.backward, d_outputs, h, d_x);
  }
  return d_x;
}

}  // namespace spiro

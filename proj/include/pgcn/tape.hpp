#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "pgcn/graph.hpp"
#include "pgcn/matrix.hpp"
#include "pgcn/rng.hpp"

namespace pgcn {

// Handle into a Tape node.  Shape is cached so model code can chain ops
// without going back through the tape.
struct Tensor {
  std::int32_t id = -1;
  std::int64_t rows = 0;
  std::int64_t cols = 0;

  bool valid() const { return id >= 0; }
  bool is_scalar() const { return rows == 1 && cols == 1; }
};

// Append-only reverse-mode tape over dense matrices.  Node order is
// topological by construction; backward() visits nodes exactly once in
// reverse and accumulates exact gradients.  Every forward result is checked
// for NaN/Inf (throws NumericError).  A tape is single-owner: independent
// training runs each build their own.
//
// Sparse operands and label vectors are captured by pointer and must outlive
// the tape.
class Tape {
 public:
  // round_to_f32 stores every forward value and gradient rounded through
  // float, emulating 32-bit storage while accumulating in double.
  explicit Tape(bool round_to_f32 = false) : f32_(round_to_f32) {}

  Tensor leaf(Matrix value, bool requires_grad);

  Tensor matmul(Tensor a, Tensor b);
  // Constant-sparse times variable-dense; gradient flows to the dense side only.
  Tensor spmm(const SparseAdjacency& s, Tensor x);
  Tensor relu(Tensor x);  // subgradient at 0 is 0
  Tensor add(Tensor a, Tensor b);
  Tensor scale(Tensor x, double c);
  Tensor scale(Tensor x, Tensor c);  // c is a 1x1 tensor
  // mu * a + (1 - mu) * b with scalar tensor mu; d/dmu = sum(G . (a - b)).
  Tensor affine_combine(Tensor mu, Tensor a, Tensor b);
  Tensor sigmoid(Tensor x);
  Tensor clamp01(Tensor x);
  Tensor select(Tensor x, std::int64_t row, std::int64_t col);  // 1x1 view
  Tensor concat_cols(Tensor a, Tensor b);
  // Inverted dropout: zero with probability p, scale survivors by 1/(1-p).
  // Identity when !training.  The mask is saved for backward.
  Tensor dropout(Tensor x, double p, Rng& rng, bool training);
  // Mean over masked rows of -log softmax(logits)[r, y_r], row-max stabilized.
  Tensor softmax_cross_entropy(Tensor logits, const LabelVector& y, std::span<const std::int64_t> mask);
  // lambda * sum_P ||P||_F^2
  Tensor l2_penalty(std::span<const Tensor> params, double lambda);

  // Reverse accumulation from a scalar root.  Repeatable: gradients are
  // zeroed and rebuilt on each call, so two calls are bit-identical.
  void backward(Tensor loss);

  const Matrix& value(Tensor t) const;
  const Matrix& grad(Tensor t) const;  // valid after backward()
  std::size_t size() const { return nodes_.size(); }

 private:
  enum class Op : std::uint8_t {
    kLeaf,
    kMatmul,
    kSpmm,
    kRelu,
    kAdd,
    kScaleConst,
    kScaleTensor,
    kAffineCombine,
    kSigmoid,
    kClamp01,
    kSelect,
    kConcatCols,
    kDropout,
    kSoftmaxCrossEntropy,
    kL2Penalty,
  };

  struct Node {
    Op op = Op::kLeaf;
    std::int32_t a = -1, b = -1, c = -1;
    std::vector<std::int32_t> extra;  // l2_penalty operands
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    double scalar = 0.0;                // scale constant / keep prob / lambda
    std::vector<double> aux;            // dropout mask / softmax probabilities
    std::vector<std::int64_t> indices;  // CE mask / select coordinates
    const SparseAdjacency* sparse = nullptr;
    const LabelVector* labels = nullptr;
  };

  Tensor push(Node&& n, const char* op_name);
  const Node& node(Tensor t) const;
  Matrix& grad_buffer(std::int32_t id);
  void round_f32(Matrix& m) const;

  std::vector<Node> nodes_;
  bool f32_ = false;
  bool has_gradients_ = false;
};

// Central-difference check of d(f)/d(inputs) against the tape gradient.
// Returns max over coordinates of |a - n| / max(1, |a|, |n|).  `f` must be
// deterministic; it is re-invoked for every perturbed coordinate.
using TapeFn = std::function<Tensor(Tape&, const std::vector<Tensor>&)>;
double gradcheck(const TapeFn& f, const std::vector<Matrix>& inputs, double h = 1e-5);

}  // namespace pgcn

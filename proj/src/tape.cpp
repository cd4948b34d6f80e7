#include "pgcn/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pgcn/error.hpp"

namespace pgcn {

namespace {

void require(bool cond, const std::string& what) {
  if (!cond) throw DataError(what);
}

}  // namespace

void Tape::round_f32(Matrix& m) const {
  if (!f32_) return;
  for (double& v : m.data) v = static_cast<double>(static_cast<float>(v));
}

Tensor Tape::push(Node&& n, const char* op_name) {
  round_f32(n.value);
  if (!all_finite(n.value)) throw NumericError(std::string(op_name) + ": non-finite value in forward result");
  const std::int32_t id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(std::move(n));
  return Tensor{id, nodes_.back().value.rows, nodes_.back().value.cols};
}

const Tape::Node& Tape::node(Tensor t) const {
  require(t.valid() && static_cast<std::size_t>(t.id) < nodes_.size(), "tape: invalid tensor handle");
  return nodes_[static_cast<std::size_t>(t.id)];
}

Tensor Tape::leaf(Matrix value, bool requires_grad) {
  Node n;
  n.op = Op::kLeaf;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  return push(std::move(n), "leaf");
}

Tensor Tape::matmul(Tensor a, Tensor b) {
  const Node& na = node(a);
  const Node& nb = node(b);
  Node n;
  n.op = Op::kMatmul;
  n.a = a.id;
  n.b = b.id;
  n.value = pgcn::matmul(na.value, nb.value);
  n.requires_grad = na.requires_grad || nb.requires_grad;
  return push(std::move(n), "matmul");
}

Tensor Tape::spmm(const SparseAdjacency& s, Tensor x) {
  const Node& nx = node(x);
  Node n;
  n.op = Op::kSpmm;
  n.a = x.id;
  n.sparse = &s;
  n.value = pgcn::spmm(s, nx.value);
  n.requires_grad = nx.requires_grad;
  return push(std::move(n), "spmm");
}

Tensor Tape::relu(Tensor x) {
  const Node& nx = node(x);
  Node n;
  n.op = Op::kRelu;
  n.a = x.id;
  n.value = nx.value;
  for (double& v : n.value.data) v = v > 0.0 ? v : 0.0;
  n.requires_grad = nx.requires_grad;
  return push(std::move(n), "relu");
}

Tensor Tape::add(Tensor a, Tensor b) {
  const Node& na = node(a);
  const Node& nb = node(b);
  require(na.value.same_shape(nb.value), "add: shape mismatch");
  Node n;
  n.op = Op::kAdd;
  n.a = a.id;
  n.b = b.id;
  n.value = na.value;
  add_in_place(n.value, nb.value);
  n.requires_grad = na.requires_grad || nb.requires_grad;
  return push(std::move(n), "add");
}

Tensor Tape::scale(Tensor x, double c) {
  const Node& nx = node(x);
  Node n;
  n.op = Op::kScaleConst;
  n.a = x.id;
  n.scalar = c;
  n.value = nx.value;
  scale_in_place(n.value, c);
  n.requires_grad = nx.requires_grad;
  return push(std::move(n), "scale");
}

Tensor Tape::scale(Tensor x, Tensor c) {
  const Node& nx = node(x);
  const Node& nc = node(c);
  require(nc.value.is_scalar(), "scale: multiplier must be 1x1");
  Node n;
  n.op = Op::kScaleTensor;
  n.a = x.id;
  n.b = c.id;
  n.value = nx.value;
  scale_in_place(n.value, nc.value.scalar());
  n.requires_grad = nx.requires_grad || nc.requires_grad;
  return push(std::move(n), "scale");
}

Tensor Tape::affine_combine(Tensor mu, Tensor a, Tensor b) {
  const Node& nm = node(mu);
  const Node& na = node(a);
  const Node& nb = node(b);
  require(nm.value.is_scalar(), "affine_combine: mu must be 1x1");
  require(na.value.same_shape(nb.value), "affine_combine: shape mismatch");
  const double m = nm.value.scalar();
  Node n;
  n.op = Op::kAffineCombine;
  n.a = mu.id;
  n.b = a.id;
  n.c = b.id;
  n.value = Matrix(na.value.rows, na.value.cols);
  for (std::size_t i = 0; i < n.value.data.size(); ++i)
    n.value.data[i] = m * na.value.data[i] + (1.0 - m) * nb.value.data[i];
  n.requires_grad = nm.requires_grad || na.requires_grad || nb.requires_grad;
  return push(std::move(n), "affine_combine");
}

Tensor Tape::sigmoid(Tensor x) {
  const Node& nx = node(x);
  Node n;
  n.op = Op::kSigmoid;
  n.a = x.id;
  n.value = nx.value;
  for (double& v : n.value.data) v = 1.0 / (1.0 + std::exp(-v));
  n.requires_grad = nx.requires_grad;
  return push(std::move(n), "sigmoid");
}

Tensor Tape::clamp01(Tensor x) {
  const Node& nx = node(x);
  Node n;
  n.op = Op::kClamp01;
  n.a = x.id;
  n.value = nx.value;
  for (double& v : n.value.data) v = std::min(std::max(v, 0.0), 1.0);
  n.requires_grad = nx.requires_grad;
  return push(std::move(n), "clamp01");
}

Tensor Tape::select(Tensor x, std::int64_t row, std::int64_t col) {
  const Node& nx = node(x);
  require(row >= 0 && row < nx.value.rows && col >= 0 && col < nx.value.cols, "select: index out of range");
  Node n;
  n.op = Op::kSelect;
  n.a = x.id;
  n.indices = {row, col};
  n.value = Matrix(1, 1, nx.value.at(row, col));
  n.requires_grad = nx.requires_grad;
  return push(std::move(n), "select");
}

Tensor Tape::concat_cols(Tensor a, Tensor b) {
  const Node& na = node(a);
  const Node& nb = node(b);
  require(na.value.rows == nb.value.rows, "concat_cols: row count mismatch");
  Node n;
  n.op = Op::kConcatCols;
  n.a = a.id;
  n.b = b.id;
  n.value = Matrix(na.value.rows, na.value.cols + nb.value.cols);
  for (std::int64_t r = 0; r < na.value.rows; ++r) {
    for (std::int64_t j = 0; j < na.value.cols; ++j) n.value.at(r, j) = na.value.at(r, j);
    for (std::int64_t j = 0; j < nb.value.cols; ++j) n.value.at(r, na.value.cols + j) = nb.value.at(r, j);
  }
  n.requires_grad = na.requires_grad || nb.requires_grad;
  return push(std::move(n), "concat_cols");
}

Tensor Tape::dropout(Tensor x, double p, Rng& rng, bool training) {
  require(p >= 0.0 && p < 1.0, "dropout: rate must be in [0, 1)");
  const Node& nx = node(x);
  Node n;
  n.op = Op::kDropout;
  n.a = x.id;
  n.requires_grad = nx.requires_grad;
  if (!training || p == 0.0) {
    n.scalar = 1.0;
    n.value = nx.value;
    n.aux.assign(nx.value.data.size(), 1.0);
    return push(std::move(n), "dropout");
  }
  const double keep = 1.0 / (1.0 - p);
  n.scalar = keep;
  n.value = nx.value;
  n.aux.resize(nx.value.data.size());
  for (std::size_t i = 0; i < n.value.data.size(); ++i) {
    const bool drop = rng.next_double() < p;
    n.aux[i] = drop ? 0.0 : 1.0;
    n.value.data[i] = drop ? 0.0 : n.value.data[i] * keep;
  }
  return push(std::move(n), "dropout");
}

Tensor Tape::softmax_cross_entropy(Tensor logits, const LabelVector& y, std::span<const std::int64_t> mask) {
  const Node& nl = node(logits);
  require(nl.value.rows == y.size(), "softmax_cross_entropy: label count mismatch");
  require(!mask.empty(), "softmax_cross_entropy: empty mask");
  const std::int64_t c = nl.value.cols;
  require(y.num_classes <= c, "softmax_cross_entropy: more classes than logit columns");
  Node n;
  n.op = Op::kSoftmaxCrossEntropy;
  n.a = logits.id;
  n.labels = &y;
  n.indices.assign(mask.begin(), mask.end());
  n.aux.assign(nl.value.data.size(), 0.0);  // softmax rows for masked nodes
  double loss = 0.0;
  for (std::int64_t r : n.indices) {
    require(r >= 0 && r < nl.value.rows, "softmax_cross_entropy: mask index out of range");
    const double* row = nl.value.data.data() + r * c;
    double row_max = row[0];
    for (std::int64_t j = 1; j < c; ++j) row_max = std::max(row_max, row[j]);
    double denom = 0.0;
    for (std::int64_t j = 0; j < c; ++j) denom += std::exp(row[j] - row_max);
    const double log_denom = std::log(denom);
    for (std::int64_t j = 0; j < c; ++j)
      n.aux[static_cast<std::size_t>(r * c + j)] = std::exp(row[j] - row_max) / denom;
    loss += log_denom - (row[y.labels[static_cast<std::size_t>(r)]] - row_max);
  }
  n.value = Matrix(1, 1, loss / static_cast<double>(n.indices.size()));
  n.requires_grad = nl.requires_grad;
  return push(std::move(n), "softmax_cross_entropy");
}

Tensor Tape::l2_penalty(std::span<const Tensor> params, double lambda) {
  require(lambda >= 0.0, "l2_penalty: lambda must be >= 0");
  Node n;
  n.op = Op::kL2Penalty;
  n.scalar = lambda;
  double total = 0.0;
  for (Tensor t : params) {
    const Node& nt = node(t);
    for (double v : nt.value.data) total += v * v;
    n.extra.push_back(t.id);
    n.requires_grad = n.requires_grad || nt.requires_grad;
  }
  n.value = Matrix(1, 1, lambda * total);
  return push(std::move(n), "l2_penalty");
}

const Matrix& Tape::value(Tensor t) const { return node(t).value; }

const Matrix& Tape::grad(Tensor t) const {
  require(has_gradients_, "tape: backward() has not been run");
  return node(t).grad;
}

Matrix& Tape::grad_buffer(std::int32_t id) { return nodes_[static_cast<std::size_t>(id)].grad; }

void Tape::backward(Tensor loss) {
  const Node& root = node(loss);
  require(root.value.is_scalar(), "backward: root must be scalar");
  // Fresh zero gradients for every node at or below the root; repeated calls
  // therefore produce bit-identical results.
  for (std::int32_t i = 0; i <= loss.id; ++i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    n.grad = Matrix(n.value.rows, n.value.cols);
  }
  grad_buffer(loss.id).data[0] = 1.0;

  for (std::int32_t i = loss.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.requires_grad) continue;
    round_f32(n.grad);
    const Matrix& g = n.grad;
    switch (n.op) {
      case Op::kLeaf:
        break;
      case Op::kMatmul: {
        Node& na = nodes_[static_cast<std::size_t>(n.a)];
        Node& nb = nodes_[static_cast<std::size_t>(n.b)];
        if (na.requires_grad) add_in_place(na.grad, pgcn::matmul(g, transpose(nb.value)));
        if (nb.requires_grad) add_in_place(nb.grad, pgcn::matmul(transpose(na.value), g));
        break;
      }
      case Op::kSpmm: {
        Node& nx = nodes_[static_cast<std::size_t>(n.a)];
        if (!nx.requires_grad) break;
        // gx += S^T g, accumulated in CSR entry order for determinism.
        const SparseAdjacency& s = *n.sparse;
        for (std::int64_t r = 0; r < s.n_rows; ++r) {
          const double* grow = g.data.data() + r * g.cols;
          for (std::int64_t k = s.row_offsets[r]; k < s.row_offsets[r + 1]; ++k) {
            double* xrow = nx.grad.data.data() + s.col_indices[k] * g.cols;
            const double v = s.values[k];
            for (std::int64_t j = 0; j < g.cols; ++j) xrow[j] += v * grow[j];
          }
        }
        break;
      }
      case Op::kRelu: {
        Node& nx = nodes_[static_cast<std::size_t>(n.a)];
        if (!nx.requires_grad) break;
        for (std::size_t j = 0; j < g.data.size(); ++j)
          if (n.value.data[j] > 0.0) nx.grad.data[j] += g.data[j];
        break;
      }
      case Op::kAdd: {
        Node& na = nodes_[static_cast<std::size_t>(n.a)];
        Node& nb = nodes_[static_cast<std::size_t>(n.b)];
        if (na.requires_grad) add_in_place(na.grad, g);
        if (nb.requires_grad) add_in_place(nb.grad, g);
        break;
      }
      case Op::kScaleConst: {
        Node& nx = nodes_[static_cast<std::size_t>(n.a)];
        if (nx.requires_grad) axpy_in_place(nx.grad, n.scalar, g);
        break;
      }
      case Op::kScaleTensor: {
        Node& nx = nodes_[static_cast<std::size_t>(n.a)];
        Node& nc = nodes_[static_cast<std::size_t>(n.b)];
        if (nx.requires_grad) axpy_in_place(nx.grad, nc.value.scalar(), g);
        if (nc.requires_grad) {
          double acc = 0.0;
          for (std::size_t j = 0; j < g.data.size(); ++j) acc += g.data[j] * nx.value.data[j];
          nc.grad.data[0] += acc;
        }
        break;
      }
      case Op::kAffineCombine: {
        Node& nm = nodes_[static_cast<std::size_t>(n.a)];
        Node& na = nodes_[static_cast<std::size_t>(n.b)];
        Node& nb = nodes_[static_cast<std::size_t>(n.c)];
        const double m = nm.value.scalar();
        if (na.requires_grad) axpy_in_place(na.grad, m, g);
        if (nb.requires_grad) axpy_in_place(nb.grad, 1.0 - m, g);
        if (nm.requires_grad) {
          double acc = 0.0;
          for (std::size_t j = 0; j < g.data.size(); ++j)
            acc += g.data[j] * (na.value.data[j] - nb.value.data[j]);
          nm.grad.data[0] += acc;
        }
        break;
      }
      case Op::kSigmoid: {
        Node& nx = nodes_[static_cast<std::size_t>(n.a)];
        if (!nx.requires_grad) break;
        for (std::size_t j = 0; j < g.data.size(); ++j) {
          const double s = n.value.data[j];
          nx.grad.data[j] += g.data[j] * s * (1.0 - s);
        }
        break;
      }
      case Op::kClamp01: {
        Node& nx = nodes_[static_cast<std::size_t>(n.a)];
        if (!nx.requires_grad) break;
        for (std::size_t j = 0; j < g.data.size(); ++j) {
          const double x = nx.value.data[j];
          if (x > 0.0 && x < 1.0) nx.grad.data[j] += g.data[j];
        }
        break;
      }
      case Op::kSelect: {
        Node& nx = nodes_[static_cast<std::size_t>(n.a)];
        if (nx.requires_grad) nx.grad.at(n.indices[0], n.indices[1]) += g.data[0];
        break;
      }
      case Op::kConcatCols: {
        Node& na = nodes_[static_cast<std::size_t>(n.a)];
        Node& nb = nodes_[static_cast<std::size_t>(n.b)];
        for (std::int64_t r = 0; r < g.rows; ++r) {
          if (na.requires_grad)
            for (std::int64_t j = 0; j < na.value.cols; ++j) na.grad.at(r, j) += g.at(r, j);
          if (nb.requires_grad)
            for (std::int64_t j = 0; j < nb.value.cols; ++j) nb.grad.at(r, j) += g.at(r, na.value.cols + j);
        }
        break;
      }
      case Op::kDropout: {
        Node& nx = nodes_[static_cast<std::size_t>(n.a)];
        if (!nx.requires_grad) break;
        for (std::size_t j = 0; j < g.data.size(); ++j) nx.grad.data[j] += g.data[j] * n.aux[j] * n.scalar;
        break;
      }
      case Op::kSoftmaxCrossEntropy: {
        Node& nl = nodes_[static_cast<std::size_t>(n.a)];
        if (!nl.requires_grad) break;
        const double scale = g.data[0] / static_cast<double>(n.indices.size());
        const std::int64_t c = nl.value.cols;
        for (std::int64_t r : n.indices) {
          const std::int64_t label = n.labels->labels[static_cast<std::size_t>(r)];
          for (std::int64_t j = 0; j < c; ++j) {
            const double p = n.aux[static_cast<std::size_t>(r * c + j)];
            nl.grad.at(r, j) += scale * (p - (j == label ? 1.0 : 0.0));
          }
        }
        break;
      }
      case Op::kL2Penalty: {
        const double scale = 2.0 * n.scalar * g.data[0];
        for (std::int32_t pid : n.extra) {
          Node& np = nodes_[static_cast<std::size_t>(pid)];
          if (np.requires_grad) axpy_in_place(np.grad, scale, np.value);
        }
        break;
      }
    }
  }
  has_gradients_ = true;
}

double gradcheck(const TapeFn& f, const std::vector<Matrix>& inputs, double h) {
  // Analytic pass.
  std::vector<Matrix> analytic;
  {
    Tape tape;
    std::vector<Tensor> leaves;
    leaves.reserve(inputs.size());
    for (const Matrix& m : inputs) leaves.push_back(tape.leaf(m, true));
    Tensor loss = f(tape, leaves);
    require(loss.is_scalar(), "gradcheck: f must return a scalar");
    tape.backward(loss);
    for (Tensor t : leaves) analytic.push_back(tape.grad(t));
  }
  auto eval = [&](const std::vector<Matrix>& point) {
    Tape tape;
    std::vector<Tensor> leaves;
    leaves.reserve(point.size());
    for (const Matrix& m : point) leaves.push_back(tape.leaf(m, false));
    return tape.value(f(tape, leaves)).scalar();
  };
  double worst = 0.0;
  std::vector<Matrix> point = inputs;
  for (std::size_t p = 0; p < inputs.size(); ++p) {
    for (std::size_t i = 0; i < inputs[p].data.size(); ++i) {
      const double saved = point[p].data[i];
      point[p].data[i] = saved + h;
      const double up = eval(point);
      point[p].data[i] = saved - h;
      const double down = eval(point);
      point[p].data[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[p].data[i];
      const double rel = std::fabs(a - numeric) / std::max({1.0, std::fabs(a), std::fabs(numeric)});
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

}  // namespace pgcn

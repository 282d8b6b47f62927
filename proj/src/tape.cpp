#include "mvmi/tape.hpp"

#include <cmath>

namespace mvmi {

namespace {

constexpr double kLogitClamp = 30.0;
constexpr double kProbFloor = 1e-7;

double sigmoid_d(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// log(sigmoid(x)) without overflow.
double log_sigmoid_d(double x) {
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

void axpy(DenseMatrix& dst, const DenseMatrix& src, float alpha = 1.0f) {
  float* d = dst.data();
  const float* s = src.data();
  for (std::size_t i = 0; i < dst.size(); ++i) d[i] += alpha * s[i];
}

}  // namespace

NodeId Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size() - 1);
}

DenseMatrix& Tape::grad_buf(NodeId id) {
  Node& n = nodes_[id];
  if (n.grad.rows() == 0) n.grad = DenseMatrix(n.value.rows(), n.value.cols());
  return n.grad;
}

const DenseMatrix& Tape::grad(NodeId id) { return grad_buf(id); }

NodeId Tape::constant(DenseMatrix value) {
  Node n;
  n.op = Op::kConstant;
  n.value = std::move(value);
  return push(std::move(n));
}

NodeId Tape::param(const DenseMatrix& value) {
  Node n;
  n.op = Op::kParam;
  n.value = value;
  n.requires_grad = true;
  return push(std::move(n));
}

NodeId Tape::matmul(NodeId a, NodeId b) {
  Node n;
  n.op = Op::kMatMul;
  n.a = a;
  n.b = b;
  n.value = mvmi::matmul(nodes_[a].value, nodes_[b].value);
  n.requires_grad = nodes_[a].requires_grad || nodes_[b].requires_grad;
  return push(std::move(n));
}

NodeId Tape::matmul_nt(NodeId a, NodeId b) {
  Node n;
  n.op = Op::kMatMulNT;
  n.a = a;
  n.b = b;
  n.value = mvmi::matmul_nt(nodes_[a].value, nodes_[b].value);
  n.requires_grad = nodes_[a].requires_grad || nodes_[b].requires_grad;
  return push(std::move(n));
}

NodeId Tape::spmm(const SparseMatrix* s, NodeId d) {
  Node n;
  n.op = Op::kSpmm;
  n.a = d;
  n.sparse = s;
  n.value = mvmi::spmm(*s, nodes_[d].value);
  n.requires_grad = nodes_[d].requires_grad;
  return push(std::move(n));
}

NodeId Tape::add(NodeId a, NodeId b) {
  contract(nodes_[a].value.same_shape(nodes_[b].value),
           "add: shape mismatch, " + nodes_[a].value.shape_str() + " vs " +
               nodes_[b].value.shape_str());
  Node n;
  n.op = Op::kAdd;
  n.a = a;
  n.b = b;
  n.value = nodes_[a].value;
  axpy(n.value, nodes_[b].value);
  n.requires_grad = nodes_[a].requires_grad || nodes_[b].requires_grad;
  return push(std::move(n));
}

NodeId Tape::sub(NodeId a, NodeId b) {
  contract(nodes_[a].value.same_shape(nodes_[b].value),
           "sub: shape mismatch, " + nodes_[a].value.shape_str() + " vs " +
               nodes_[b].value.shape_str());
  Node n;
  n.op = Op::kSub;
  n.a = a;
  n.b = b;
  n.value = nodes_[a].value;
  axpy(n.value, nodes_[b].value, -1.0f);
  n.requires_grad = nodes_[a].requires_grad || nodes_[b].requires_grad;
  return push(std::move(n));
}

NodeId Tape::scale(NodeId a, float alpha) {
  Node n;
  n.op = Op::kScale;
  n.a = a;
  n.alpha = alpha;
  n.value = nodes_[a].value;
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value.data()[i] *= alpha;
  n.requires_grad = nodes_[a].requires_grad;
  return push(std::move(n));
}

NodeId Tape::add_row(NodeId a, NodeId row) {
  const DenseMatrix& av = nodes_[a].value;
  const DenseMatrix& rv = nodes_[row].value;
  contract(rv.rows() == 1 && rv.cols() == av.cols(),
           "add_row: bias must be 1x" + std::to_string(av.cols()) + ", got " + rv.shape_str());
  Node n;
  n.op = Op::kAddRow;
  n.a = a;
  n.b = row;
  n.value = av;
  for (int i = 0; i < av.rows(); ++i) {
    float* out = n.value.row(i);
    for (int j = 0; j < av.cols(); ++j) out[j] += rv(0, j);
  }
  n.requires_grad = nodes_[a].requires_grad || nodes_[row].requires_grad;
  return push(std::move(n));
}

NodeId Tape::concat_cols(NodeId a, NodeId b) {
  const DenseMatrix& av = nodes_[a].value;
  const DenseMatrix& bv = nodes_[b].value;
  contract(av.rows() == bv.rows(),
           "concat_cols: row counts differ, " + av.shape_str() + " vs " + bv.shape_str());
  Node n;
  n.op = Op::kConcatCols;
  n.a = a;
  n.b = b;
  n.value = DenseMatrix(av.rows(), av.cols() + bv.cols());
  for (int i = 0; i < av.rows(); ++i) {
    float* out = n.value.row(i);
    std::copy(av.row(i), av.row(i) + av.cols(), out);
    std::copy(bv.row(i), bv.row(i) + bv.cols(), out + av.cols());
  }
  n.requires_grad = nodes_[a].requires_grad || nodes_[b].requires_grad;
  return push(std::move(n));
}

NodeId Tape::permute_rows(NodeId a, std::vector<int> perm) {
  const DenseMatrix& av = nodes_[a].value;
  contract(static_cast<int>(perm.size()) == av.rows(),
           "permute_rows: permutation length != row count");
  Node n;
  n.op = Op::kPermuteRows;
  n.a = a;
  n.value = DenseMatrix(av.rows(), av.cols());
  for (int i = 0; i < av.rows(); ++i)
    std::copy(av.row(perm[i]), av.row(perm[i]) + av.cols(), n.value.row(i));
  n.perm = std::move(perm);
  n.requires_grad = nodes_[a].requires_grad;
  return push(std::move(n));
}

NodeId Tape::prelu(NodeId x, NodeId slope) {
  const DenseMatrix& sv = nodes_[slope].value;
  contract(sv.rows() == 1 && sv.cols() == 1, "prelu: slope must be 1x1, got " + sv.shape_str());
  Node n;
  n.op = Op::kPRelu;
  n.a = x;
  n.b = slope;
  const float s = sv(0, 0);
  n.value = nodes_[x].value;
  float* d = n.value.data();
  for (std::size_t i = 0; i < n.value.size(); ++i)
    if (d[i] < 0.0f) d[i] *= s;
  n.requires_grad = nodes_[x].requires_grad || nodes_[slope].requires_grad;
  return push(std::move(n));
}

NodeId Tape::sigmoid(NodeId x) {
  Node n;
  n.op = Op::kSigmoid;
  n.a = x;
  n.value = nodes_[x].value;
  float* d = n.value.data();
  // Keep outputs strictly inside (0, 1) after the float32 cast.
  constexpr float lo = 1e-38f;
  constexpr float hi = 1.0f - 0x1p-24f;
  for (std::size_t i = 0; i < n.value.size(); ++i)
    d[i] = std::clamp(static_cast<float>(sigmoid_d(d[i])), lo, hi);
  n.requires_grad = nodes_[x].requires_grad;
  return push(std::move(n));
}

NodeId Tape::log_sigmoid(NodeId x) {
  Node n;
  n.op = Op::kLogSigmoid;
  n.a = x;
  n.value = nodes_[x].value;
  float* d = n.value.data();
  for (std::size_t i = 0; i < n.value.size(); ++i) {
    double cx = std::clamp(static_cast<double>(d[i]), -kLogitClamp, kLogitClamp);
    d[i] = static_cast<float>(log_sigmoid_d(cx));
  }
  n.requires_grad = nodes_[x].requires_grad;
  return push(std::move(n));
}

NodeId Tape::mean_rows(NodeId x) {
  const DenseMatrix& xv = nodes_[x].value;
  Node n;
  n.op = Op::kMeanRows;
  n.a = x;
  n.value = DenseMatrix(1, xv.cols());
  for (int j = 0; j < xv.cols(); ++j) {
    double acc = 0.0;
    for (int i = 0; i < xv.rows(); ++i) acc += xv(i, j);
    n.value(0, j) = static_cast<float>(acc / xv.rows());
  }
  n.requires_grad = nodes_[x].requires_grad;
  return push(std::move(n));
}

NodeId Tape::mean_all(NodeId x) {
  const DenseMatrix& xv = nodes_[x].value;
  Node n;
  n.op = Op::kMeanAll;
  n.a = x;
  double acc = 0.0;
  for (std::size_t i = 0; i < xv.size(); ++i) acc += xv.data()[i];
  n.value = DenseMatrix(1, 1);
  n.value(0, 0) = static_cast<float>(acc / xv.size());
  n.requires_grad = nodes_[x].requires_grad;
  return push(std::move(n));
}

NodeId Tape::mean_row_cosine(NodeId a, NodeId b) {
  const DenseMatrix& av = nodes_[a].value;
  const DenseMatrix& bv = nodes_[b].value;
  contract(av.same_shape(bv), "mean_row_cosine: shape mismatch, " + av.shape_str() + " vs " +
                                  bv.shape_str());
  Node n;
  n.op = Op::kRowCosine;
  n.a = a;
  n.b = b;
  double acc = 0.0;
  for (int i = 0; i < av.rows(); ++i) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    const float* ar = av.row(i);
    const float* br = bv.row(i);
    for (int j = 0; j < av.cols(); ++j) {
      dot += double(ar[j]) * br[j];
      na += double(ar[j]) * ar[j];
      nb += double(br[j]) * br[j];
    }
    if (na > 0.0 && nb > 0.0) acc += dot / (std::sqrt(na) * std::sqrt(nb));
  }
  n.value = DenseMatrix(1, 1);
  n.value(0, 0) = static_cast<float>(acc / av.rows());
  n.requires_grad = nodes_[a].requires_grad || nodes_[b].requires_grad;
  return push(std::move(n));
}

NodeId Tape::pair_bce(NodeId z, PairList pos, PairList neg) {
  const DenseMatrix& zv = nodes_[z].value;
  auto dot_rows = [&](int i, int j) {
    double d = 0.0;
    const float* a = zv.row(i);
    const float* b = zv.row(j);
    for (int k = 0; k < zv.cols(); ++k) d += double(a[k]) * b[k];
    return d;
  };
  double total = 0.0;
  if (!pos.empty()) {
    double acc = 0.0;
    for (auto [i, j] : pos) acc += -std::log(std::max(sigmoid_d(dot_rows(i, j)), kProbFloor));
    total += acc / pos.size();
  }
  if (!neg.empty()) {
    double acc = 0.0;
    for (auto [i, j] : neg)
      acc += -std::log(std::max(1.0 - sigmoid_d(dot_rows(i, j)), kProbFloor));
    total += acc / neg.size();
  }
  Node n;
  n.op = Op::kPairBce;
  n.a = z;
  n.pos = std::move(pos);
  n.neg = std::move(neg);
  n.value = DenseMatrix(1, 1);
  n.value(0, 0) = static_cast<float>(total);
  n.requires_grad = nodes_[z].requires_grad;
  return push(std::move(n));
}

void Tape::backward(NodeId loss) {
  const DenseMatrix& lv = nodes_[loss].value;
  contract(lv.rows() == 1 && lv.cols() == 1,
           "backward: loss must be 1x1, got " + lv.shape_str());
  grad_buf(loss)(0, 0) = 1.0f;
  for (NodeId id = loss; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.requires_grad || n.grad.rows() == 0) continue;
    backward_node(id);
  }
}

void Tape::backward_node(NodeId id) {
  Node& n = nodes_[id];
  const DenseMatrix& g = n.grad;
  auto wants = [&](NodeId in) { return in >= 0 && nodes_[in].requires_grad; };

  switch (n.op) {
    case Op::kConstant:
    case Op::kParam:
      break;
    case Op::kMatMul:
      if (wants(n.a)) axpy(grad_buf(n.a), mvmi::matmul_nt(g, nodes_[n.b].value));
      if (wants(n.b)) axpy(grad_buf(n.b), mvmi::matmul_tn(nodes_[n.a].value, g));
      break;
    case Op::kMatMulNT:
      if (wants(n.a)) axpy(grad_buf(n.a), mvmi::matmul(g, nodes_[n.b].value));
      if (wants(n.b)) axpy(grad_buf(n.b), mvmi::matmul_tn(g, nodes_[n.a].value));
      break;
    case Op::kSpmm:
      if (wants(n.a)) axpy(grad_buf(n.a), mvmi::spmm_tn(*n.sparse, g));
      break;
    case Op::kAdd:
      if (wants(n.a)) axpy(grad_buf(n.a), g);
      if (wants(n.b)) axpy(grad_buf(n.b), g);
      break;
    case Op::kSub:
      if (wants(n.a)) axpy(grad_buf(n.a), g);
      if (wants(n.b)) axpy(grad_buf(n.b), g, -1.0f);
      break;
    case Op::kScale:
      if (wants(n.a)) axpy(grad_buf(n.a), g, n.alpha);
      break;
    case Op::kAddRow: {
      if (wants(n.a)) axpy(grad_buf(n.a), g);
      if (wants(n.b)) {
        DenseMatrix& rg = grad_buf(n.b);
        for (int j = 0; j < g.cols(); ++j) {
          double acc = 0.0;
          for (int i = 0; i < g.rows(); ++i) acc += g(i, j);
          rg(0, j) += static_cast<float>(acc);
        }
      }
      break;
    }
    case Op::kConcatCols: {
      const int ac = nodes_[n.a].value.cols();
      if (wants(n.a)) {
        DenseMatrix& ag = grad_buf(n.a);
        for (int i = 0; i < g.rows(); ++i)
          for (int j = 0; j < ac; ++j) ag(i, j) += g(i, j);
      }
      if (wants(n.b)) {
        DenseMatrix& bg = grad_buf(n.b);
        for (int i = 0; i < g.rows(); ++i)
          for (int j = 0; j < bg.cols(); ++j) bg(i, j) += g(i, ac + j);
      }
      break;
    }
    case Op::kPermuteRows: {
      if (wants(n.a)) {
        DenseMatrix& ag = grad_buf(n.a);
        for (int i = 0; i < g.rows(); ++i) {
          float* dst = ag.row(n.perm[i]);
          const float* src = g.row(i);
          for (int j = 0; j < g.cols(); ++j) dst[j] += src[j];
        }
      }
      break;
    }
    case Op::kPRelu: {
      const DenseMatrix& x = nodes_[n.a].value;
      const float s = nodes_[n.b].value(0, 0);
      if (wants(n.a)) {
        DenseMatrix& xg = grad_buf(n.a);
        for (std::size_t i = 0; i < x.size(); ++i)
          xg.data()[i] += g.data()[i] * (x.data()[i] >= 0.0f ? 1.0f : s);
      }
      if (wants(n.b)) {
        double acc = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i)
          if (x.data()[i] < 0.0f) acc += double(g.data()[i]) * x.data()[i];
        grad_buf(n.b)(0, 0) += static_cast<float>(acc);
      }
      break;
    }
    case Op::kSigmoid: {
      if (wants(n.a)) {
        DenseMatrix& xg = grad_buf(n.a);
        const float* y = n.value.data();
        for (std::size_t i = 0; i < n.value.size(); ++i)
          xg.data()[i] += g.data()[i] * y[i] * (1.0f - y[i]);
      }
      break;
    }
    case Op::kLogSigmoid: {
      if (wants(n.a)) {
        DenseMatrix& xg = grad_buf(n.a);
        const DenseMatrix& x = nodes_[n.a].value;
        for (std::size_t i = 0; i < x.size(); ++i) {
          const double xi = x.data()[i];
          if (xi < -kLogitClamp || xi > kLogitClamp) continue;
          xg.data()[i] += static_cast<float>(g.data()[i] * sigmoid_d(-xi));
        }
      }
      break;
    }
    case Op::kMeanRows: {
      if (wants(n.a)) {
        DenseMatrix& xg = grad_buf(n.a);
        const float inv = 1.0f / xg.rows();
        for (int i = 0; i < xg.rows(); ++i)
          for (int j = 0; j < xg.cols(); ++j) xg(i, j) += g(0, j) * inv;
      }
      break;
    }
    case Op::kMeanAll: {
      if (wants(n.a)) {
        DenseMatrix& xg = grad_buf(n.a);
        const float go = g(0, 0) / static_cast<float>(xg.size());
        for (std::size_t i = 0; i < xg.size(); ++i) xg.data()[i] += go;
      }
      break;
    }
    case Op::kRowCosine: {
      const DenseMatrix& av = nodes_[n.a].value;
      const DenseMatrix& bv = nodes_[n.b].value;
      const double go = g(0, 0) / av.rows();
      for (int i = 0; i < av.rows(); ++i) {
        double dot = 0.0, na2 = 0.0, nb2 = 0.0;
        const float* ar = av.row(i);
        const float* br = bv.row(i);
        for (int j = 0; j < av.cols(); ++j) {
          dot += double(ar[j]) * br[j];
          na2 += double(ar[j]) * ar[j];
          nb2 += double(br[j]) * br[j];
        }
        if (na2 == 0.0 || nb2 == 0.0) continue;
        const double na = std::sqrt(na2), nb = std::sqrt(nb2);
        const double c = dot / (na * nb);
        if (wants(n.a)) {
          float* ag = grad_buf(n.a).row(i);
          for (int j = 0; j < av.cols(); ++j)
            ag[j] += static_cast<float>(go * (br[j] / (na * nb) - c * ar[j] / na2));
        }
        if (wants(n.b)) {
          float* bg = grad_buf(n.b).row(i);
          for (int j = 0; j < av.cols(); ++j)
            bg[j] += static_cast<float>(go * (ar[j] / (na * nb) - c * br[j] / nb2));
        }
      }
      break;
    }
    case Op::kPairBce: {
      if (!wants(n.a)) break;
      const DenseMatrix& zv = nodes_[n.a].value;
      DenseMatrix& zg = grad_buf(n.a);
      const double go = g(0, 0);
      auto accumulate = [&](const PairList& pairs, bool positive) {
        if (pairs.empty()) return;
        const double inv = go / pairs.size();
        for (auto [i, j] : pairs) {
          double d = 0.0;
          const float* zi = zv.row(i);
          const float* zj = zv.row(j);
          for (int k = 0; k < zv.cols(); ++k) d += double(zi[k]) * zj[k];
          const double p = sigmoid_d(d);
          double coef;
          if (positive) {
            if (p <= kProbFloor) continue;  // clamped, constant term
            coef = inv * (p - 1.0);
          } else {
            if (1.0 - p <= kProbFloor) continue;
            coef = inv * p;
          }
          float* gi = zg.row(i);
          float* gj = zg.row(j);
          for (int k = 0; k < zv.cols(); ++k) {
            gi[k] += static_cast<float>(coef * zj[k]);
            gj[k] += static_cast<float>(coef * zi[k]);
          }
        }
      };
      accumulate(n.pos, true);
      accumulate(n.neg, false);
      break;
    }
  }
}

}  // namespace mvmi

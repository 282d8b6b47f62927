#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "mvmi/dense.hpp"
#include "mvmi/sparse.hpp"

namespace mvmi {

using NodeId = int;
using PairList = std::vector<std::pair<int, int>>;

// Define-by-run reverse-mode tape. Every op evaluates eagerly when
// recorded, so node ids are already in topological order; backward()
// walks them in reverse. The tape is rebuilt from scratch each epoch.
//
// Values are float32; elementwise kernels and reductions accumulate in
// double. Logits fed to log_sigmoid are clamped to +/-30 and the pair
// cross-entropy clamps log arguments at 1e-7, so losses stay finite.
class Tape {
 public:
  // Leaf without gradient.
  NodeId constant(DenseMatrix value);
  // Leaf with gradient (model parameter); the value is copied in.
  NodeId param(const DenseMatrix& value);

  NodeId matmul(NodeId a, NodeId b);          // A * B
  NodeId matmul_nt(NodeId a, NodeId b);       // A * B^T
  NodeId spmm(const SparseMatrix* s, NodeId d);
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId scale(NodeId a, float alpha);
  NodeId add_row(NodeId a, NodeId row);       // broadcast 1xC over rows
  NodeId concat_cols(NodeId a, NodeId b);
  NodeId permute_rows(NodeId a, std::vector<int> perm);  // out[i] = in[perm[i]]
  NodeId prelu(NodeId x, NodeId slope);       // slope is a 1x1 node
  NodeId sigmoid(NodeId x);
  NodeId log_sigmoid(NodeId x);               // log(sigmoid(clamp(x, +/-30)))
  NodeId mean_rows(NodeId x);                 // NxC -> 1xC
  NodeId mean_all(NodeId x);                  // NxC -> 1x1
  // (1/N) sum_i cos(a_i, b_i); rows with zero norm contribute 0.
  NodeId mean_row_cosine(NodeId a, NodeId b);
  // mean over pos of -log p(i,j) + mean over neg of -log(1 - p(i,j)),
  // p(i,j) = sigmoid(z_i . z_j). Either list may be empty (term = 0).
  NodeId pair_bce(NodeId z, PairList pos, PairList neg);

  const DenseMatrix& value(NodeId id) const { return nodes_[id].value; }
  // Valid after backward(); zero matrix if the node was never reached.
  const DenseMatrix& grad(NodeId id);

  // Accumulates gradients of a scalar loss into every param node.
  void backward(NodeId loss);

  int size() const { return static_cast<int>(nodes_.size()); }

 private:
  enum class Op : std::uint8_t {
    kConstant, kParam, kMatMul, kMatMulNT, kSpmm, kAdd, kSub, kScale,
    kAddRow, kConcatCols, kPermuteRows, kPRelu, kSigmoid, kLogSigmoid,
    kMeanRows, kMeanAll, kRowCosine, kPairBce,
  };

  struct Node {
    Op op;
    NodeId a = -1;
    NodeId b = -1;
    float alpha = 0.0f;
    const SparseMatrix* sparse = nullptr;
    std::vector<int> perm;
    PairList pos, neg;
    DenseMatrix value;
    DenseMatrix grad;
    bool requires_grad = false;
  };

  NodeId push(Node n);
  DenseMatrix& grad_buf(NodeId id);
  void backward_node(NodeId id);

  std::vector<Node> nodes_;
};

}  // namespace mvmi

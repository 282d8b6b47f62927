#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mvmi/optim.hpp"
#include "mvmi/rng.hpp"
#include "mvmi/tape.hpp"

namespace mvmi {

// All learnable state of the two-view model. Weight matrices are
// Glorot-initialized, the fusion bias starts at zero and every PReLU
// slope at 0.25 (one slope per layer).
struct ModelParams {
  DenseMatrix theta_f, theta_t, theta_c;  // d x h view/common encoders
  DenseMatrix fusion_w;                   // 2h x h
  DenseMatrix fusion_b;                   // 1 x h
  DenseMatrix disc_ft, disc_tf, disc_c;   // h x h bilinear discriminators
  DenseMatrix slope_f, slope_t, slope_c, slope_m;  // 1 x 1 PReLU slopes

  static ModelParams init(int d, int h, Pcg32& rng);
  std::vector<std::pair<std::string, DenseMatrix*>> named();
  std::vector<std::pair<std::string, const DenseMatrix*>> named() const;
  std::vector<DenseMatrix*> all();
  int hidden() const { return theta_f.cols(); }
};

// Single-view baseline: one encoder over the topology view.
struct DgiParams {
  DenseMatrix theta;  // d x h
  DenseMatrix disc;   // h x h
  DenseMatrix slope;  // 1 x 1

  static DgiParams init(int d, int h, Pcg32& rng);
  std::vector<std::pair<std::string, DenseMatrix*>> named();
  std::vector<std::pair<std::string, const DenseMatrix*>> named() const;
  std::vector<DenseMatrix*> all();
  int hidden() const { return theta.cols(); }
};

// Z = PReLU(adj * (X * theta)). The x_theta overload takes the
// already-recorded product so corrupted passes can reuse it.
NodeId encode_view(Tape& tape, const SparseMatrix* adj, NodeId x, NodeId theta, NodeId slope);
NodeId encode_view_pre(Tape& tape, const SparseMatrix* adj, NodeId x_theta, NodeId slope);

// s = sigmoid(column means of Z), a 1 x h summary.
NodeId readout(Tape& tape, NodeId z);

// Per-node logits (Z W) s^T as an n x 1 node; logit_i = z_i^T W s.
NodeId bilinear_logits(Tape& tape, NodeId z, NodeId s, NodeId w);

// Scalar form of the discriminator for a single pair.
double discriminate(std::span<const float> z, std::span<const float> s, const DenseMatrix& w);

struct CommonEncoding {
  NodeId z_cf, z_ct;  // weight-sharing encoder outputs per view
  NodeId z_c;         // fused representation, n x h
};

// Same theta applied to both views, then a single linear layer on the
// concatenation followed by PReLU.
CommonEncoding encode_common(Tape& tape, const SparseMatrix* adj_f, const SparseMatrix* adj_t,
                             NodeId x_theta, NodeId fusion_w, NodeId fusion_b, NodeId slope_c,
                             NodeId slope_m);

// Lazy inner-product decoder: prob(i, j) = sigmoid(z_i . z_j). Never
// materializes the n x n matrix.
class AdjacencyDecoder {
 public:
  explicit AdjacencyDecoder(const DenseMatrix& z) : z_(&z) {}
  double prob(int i, int j) const;

 private:
  const DenseMatrix* z_;
};

// Elementwise mean of the three representations.
DenseMatrix aggregate_inference(const DenseMatrix& z_f, const DenseMatrix& z_t,
                                const DenseMatrix& z_c);

// Parameter node ids for one tape build.
struct MvmiftNodes {
  NodeId theta_f, theta_t, theta_c;
  NodeId fusion_w, fusion_b;
  NodeId disc_ft, disc_tf, disc_c;
  NodeId slope_f, slope_t, slope_c, slope_m;

  static MvmiftNodes bind(Tape& tape, const ModelParams& p);
  std::vector<NodeId> all() const;
};

struct DgiNodes {
  NodeId theta, disc, slope;

  static DgiNodes bind(Tape& tape, const DgiParams& p);
  std::vector<NodeId> all() const;
};

// One full forward pass. When perm is non-null the corrupted
// counterparts are encoded from the row-shuffled features (the shuffle
// commutes with X * theta, so the recorded product is permuted
// directly); otherwise the corrupted ids are -1.
struct ForwardBundle {
  NodeId z_f = -1, z_t = -1;
  NodeId z_cf = -1, z_ct = -1, z_c = -1;
  NodeId s_f = -1, s_t = -1, s_c = -1;
  NodeId corr_f = -1, corr_t = -1, corr_c = -1;
};

ForwardBundle mvmift_forward(Tape& tape, const MvmiftNodes& nodes, const SparseMatrix* adj_f,
                             const SparseMatrix* adj_t, NodeId x,
                             const std::vector<int>* perm);

struct DgiForward {
  NodeId z = -1, s = -1, corr = -1;
};

DgiForward dgi_forward(Tape& tape, const DgiNodes& nodes, const SparseMatrix* adj, NodeId x,
                       const std::vector<int>* perm);

}  // namespace mvmi

#include "mvmi/model.hpp"

#include <cmath>

namespace mvmi {

namespace {

DenseMatrix scalar_param(float v) {
  DenseMatrix m(1, 1);
  m(0, 0) = v;
  return m;
}

}  // namespace

ModelParams ModelParams::init(int d, int h, Pcg32& rng) {
  ModelParams p;
  p.theta_f = glorot_init(d, h, rng);
  p.theta_t = glorot_init(d, h, rng);
  p.theta_c = glorot_init(d, h, rng);
  p.fusion_w = glorot_init(2 * h, h, rng);
  p.fusion_b = DenseMatrix(1, h);
  p.disc_ft = glorot_init(h, h, rng);
  p.disc_tf = glorot_init(h, h, rng);
  p.disc_c = glorot_init(h, h, rng);
  p.slope_f = scalar_param(0.25f);
  p.slope_t = scalar_param(0.25f);
  p.slope_c = scalar_param(0.25f);
  p.slope_m = scalar_param(0.25f);
  return p;
}

std::vector<std::pair<std::string, DenseMatrix*>> ModelParams::named() {
  return {{"theta_f", &theta_f}, {"theta_t", &theta_t}, {"theta_c", &theta_c},
          {"fusion_w", &fusion_w}, {"fusion_b", &fusion_b}, {"disc_ft", &disc_ft},
          {"disc_tf", &disc_tf}, {"disc_c", &disc_c}, {"slope_f", &slope_f},
          {"slope_t", &slope_t}, {"slope_c", &slope_c}, {"slope_m", &slope_m}};
}

std::vector<std::pair<std::string, const DenseMatrix*>> ModelParams::named() const {
  std::vector<std::pair<std::string, const DenseMatrix*>> v;
  for (auto& [name, m] : const_cast<ModelParams*>(this)->named()) v.emplace_back(name, m);
  return v;
}

std::vector<DenseMatrix*> ModelParams::all() {
  std::vector<DenseMatrix*> v;
  for (auto& [name, m] : named()) v.push_back(m);
  return v;
}

DgiParams DgiParams::init(int d, int h, Pcg32& rng) {
  DgiParams p;
  p.theta = glorot_init(d, h, rng);
  p.disc = glorot_init(h, h, rng);
  p.slope = scalar_param(0.25f);
  return p;
}

std::vector<std::pair<std::string, DenseMatrix*>> DgiParams::named() {
  return {{"theta", &theta}, {"disc", &disc}, {"slope", &slope}};
}

std::vector<std::pair<std::string, const DenseMatrix*>> DgiParams::named() const {
  std::vector<std::pair<std::string, const DenseMatrix*>> v;
  for (auto& [name, m] : const_cast<DgiParams*>(this)->named()) v.emplace_back(name, m);
  return v;
}

std::vector<DenseMatrix*> DgiParams::all() {
  std::vector<DenseMatrix*> v;
  for (auto& [name, m] : named()) v.push_back(m);
  return v;
}

NodeId encode_view_pre(Tape& tape, const SparseMatrix* adj, NodeId x_theta, NodeId slope) {
  return tape.prelu(tape.spmm(adj, x_theta), slope);
}

NodeId encode_view(Tape& tape, const SparseMatrix* adj, NodeId x, NodeId theta, NodeId slope) {
  return encode_view_pre(tape, adj, tape.matmul(x, theta), slope);
}

NodeId readout(Tape& tape, NodeId z) { return tape.sigmoid(tape.mean_rows(z)); }

NodeId bilinear_logits(Tape& tape, NodeId z, NodeId s, NodeId w) {
  // (s W^T)^T = W s, so logits = Z (W s).
  NodeId ws = tape.matmul_nt(s, w);  // 1 x h
  return tape.matmul_nt(z, ws);      // n x 1
}

double discriminate(std::span<const float> z, std::span<const float> s, const DenseMatrix& w) {
  contract(static_cast<int>(z.size()) == w.rows() && static_cast<int>(s.size()) == w.cols(),
           "discriminate: vector lengths do not match " + w.shape_str());
  double acc = 0.0;
  for (int a = 0; a < w.rows(); ++a) {
    double inner = 0.0;
    for (int b = 0; b < w.cols(); ++b) inner += double(w(a, b)) * s[b];
    acc += double(z[a]) * inner;
  }
  return acc;
}

CommonEncoding encode_common(Tape& tape, const SparseMatrix* adj_f, const SparseMatrix* adj_t,
                             NodeId x_theta, NodeId fusion_w, NodeId fusion_b, NodeId slope_c,
                             NodeId slope_m) {
  CommonEncoding out;
  out.z_cf = encode_view_pre(tape, adj_f, x_theta, slope_c);
  out.z_ct = encode_view_pre(tape, adj_t, x_theta, slope_c);
  NodeId cat = tape.concat_cols(out.z_cf, out.z_ct);
  out.z_c = tape.prelu(tape.add_row(tape.matmul(cat, fusion_w), fusion_b), slope_m);
  return out;
}

double AdjacencyDecoder::prob(int i, int j) const {
  double d = 0.0;
  const float* a = z_->row(i);
  const float* b = z_->row(j);
  for (int k = 0; k < z_->cols(); ++k) d += double(a[k]) * b[k];
  return 1.0 / (1.0 + std::exp(-d));
}

DenseMatrix aggregate_inference(const DenseMatrix& z_f, const DenseMatrix& z_t,
                                const DenseMatrix& z_c) {
  contract(z_f.same_shape(z_t) && z_f.same_shape(z_c),
           "aggregate_inference: shapes differ, " + z_f.shape_str() + " / " + z_t.shape_str() +
               " / " + z_c.shape_str());
  DenseMatrix out(z_f.rows(), z_f.cols());
  for (std::size_t i = 0; i < out.size(); ++i)
    out.data()[i] = (z_f.data()[i] + z_t.data()[i] + z_c.data()[i]) / 3.0f;
  return out;
}

MvmiftNodes MvmiftNodes::bind(Tape& tape, const ModelParams& p) {
  MvmiftNodes n;
  n.theta_f = tape.param(p.theta_f);
  n.theta_t = tape.param(p.theta_t);
  n.theta_c = tape.param(p.theta_c);
  n.fusion_w = tape.param(p.fusion_w);
  n.fusion_b = tape.param(p.fusion_b);
  n.disc_ft = tape.param(p.disc_ft);
  n.disc_tf = tape.param(p.disc_tf);
  n.disc_c = tape.param(p.disc_c);
  n.slope_f = tape.param(p.slope_f);
  n.slope_t = tape.param(p.slope_t);
  n.slope_c = tape.param(p.slope_c);
  n.slope_m = tape.param(p.slope_m);
  return n;
}

std::vector<NodeId> MvmiftNodes::all() const {
  return {theta_f, theta_t, theta_c, fusion_w, fusion_b, disc_ft,
          disc_tf, disc_c, slope_f, slope_t, slope_c, slope_m};
}

DgiNodes DgiNodes::bind(Tape& tape, const DgiParams& p) {
  DgiNodes n;
  n.theta = tape.param(p.theta);
  n.disc = tape.param(p.disc);
  n.slope = tape.param(p.slope);
  return n;
}

std::vector<NodeId> DgiNodes::all() const { return {theta, disc, slope}; }

ForwardBundle mvmift_forward(Tape& tape, const MvmiftNodes& nodes, const SparseMatrix* adj_f,
                             const SparseMatrix* adj_t, NodeId x,
                             const std::vector<int>* perm) {
  ForwardBundle fb;
  NodeId xt_f = tape.matmul(x, nodes.theta_f);
  NodeId xt_t = tape.matmul(x, nodes.theta_t);
  NodeId xt_c = tape.matmul(x, nodes.theta_c);

  fb.z_f = encode_view_pre(tape, adj_f, xt_f, nodes.slope_f);
  fb.z_t = encode_view_pre(tape, adj_t, xt_t, nodes.slope_t);
  CommonEncoding common = encode_common(tape, adj_f, adj_t, xt_c, nodes.fusion_w,
                                        nodes.fusion_b, nodes.slope_c, nodes.slope_m);
  fb.z_cf = common.z_cf;
  fb.z_ct = common.z_ct;
  fb.z_c = common.z_c;

  fb.s_f = readout(tape, fb.z_f);
  fb.s_t = readout(tape, fb.z_t);
  fb.s_c = readout(tape, fb.z_c);

  if (perm) {
    fb.corr_f = encode_view_pre(tape, adj_f, tape.permute_rows(xt_f, *perm), nodes.slope_f);
    fb.corr_t = encode_view_pre(tape, adj_t, tape.permute_rows(xt_t, *perm), nodes.slope_t);
    CommonEncoding corr = encode_common(tape, adj_f, adj_t, tape.permute_rows(xt_c, *perm),
                                        nodes.fusion_w, nodes.fusion_b, nodes.slope_c,
                                        nodes.slope_m);
    fb.corr_c = corr.z_c;
  }
  return fb;
}

DgiForward dgi_forward(Tape& tape, const DgiNodes& nodes, const SparseMatrix* adj, NodeId x,
                       const std::vector<int>* perm) {
  DgiForward out;
  NodeId xt = tape.matmul(x, nodes.theta);
  out.z = encode_view_pre(tape, adj, xt, nodes.slope);
  out.s = readout(tape, out.z);
  if (perm)
    out.corr = encode_view_pre(tape, adj, tape.permute_rows(xt, *perm), nodes.slope);
  return out;
}

}  // namespace mvmi

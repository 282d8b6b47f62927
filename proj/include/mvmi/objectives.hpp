#pragma once

#include <functional>

#include "mvmi/graph.hpp"
#include "mvmi/model.hpp"
#include "mvmi/tape.hpp"

namespace mvmi {

// Per-epoch loss values. `total` is the scalar that was differentiated.
struct LossBreakdown {
  double l_mmi = 0.0;
  double l_cmi = 0.0;
  double l_r = 0.0;
  double l_d = 0.0;
  double total = 0.0;
};

// Positive/negative node pairs per view, resampled every epoch:
// one neighbor and one non-neighbor per node where available.
struct PairSample {
  PairList f_pos, f_neg;
  PairList t_pos, t_neg;
};

// Discrimination objective of one view: mean_i of
// log sigmoid(z_i^T W s) + log(1 - sigmoid(corrupt_i^T W s)).
// Larger is better; upper bound 0.
NodeId js_mi_objective(Tape& tape, NodeId patch, NodeId summary, NodeId corrupted, NodeId w);

// Cross-view sum: feature patches vs topology summary plus the reverse.
NodeId multi_view_loss(Tape& tape, const ForwardBundle& fb, NodeId w_ft, NodeId w_tf);

NodeId common_mi_loss(Tape& tape, const ForwardBundle& fb, NodeId w_c);

// Warnings (a view with no usable positives or negatives) go through
// the callback; pass nullptr to drop them.
using WarnFn = std::function<void(const std::string&)>;
PairSample sample_pairs(const EdgeList& edges_f, const EdgeList& edges_t, int n, int per_node,
                        Pcg32& rng, const WarnFn& warn = nullptr);

// Inner-product cross-entropy against both views' sampled pairs.
NodeId reconstruction_loss(Tape& tape, NodeId z_c, const PairSample& pairs);

// Negative mean cosine between each view's private and common
// representations; in [-2, 2], enlarged by training.
NodeId disagreement_loss(Tape& tape, NodeId z_f, NodeId z_cf, NodeId z_t, NodeId z_ct);

// total = -(l_mmi + lambda_c * (l_cmi - l_r) + lambda_d * l_d),
// minimized by gradient descent.
NodeId total_loss(Tape& tape, NodeId l_mmi, NodeId l_cmi, NodeId l_r, NodeId l_d,
                  float lambda_c, float lambda_d);

// Same arithmetic on plain floats, in the exact op order the tape
// uses, so a recomputed breakdown matches the differentiated scalar
// bitwise.
float total_from_parts(float l_mmi, float l_cmi, float l_r, float l_d, float lambda_c,
                       float lambda_d);

}  // namespace mvmi

#include "mvmi/objectives.hpp"

#include <algorithm>

namespace mvmi {

NodeId js_mi_objective(Tape& tape, NodeId patch, NodeId summary, NodeId corrupted, NodeId w) {
  NodeId pos = tape.log_sigmoid(bilinear_logits(tape, patch, summary, w));
  NodeId neg = tape.log_sigmoid(tape.scale(bilinear_logits(tape, corrupted, summary, w), -1.0f));
  return tape.mean_all(tape.add(pos, neg));
}

NodeId multi_view_loss(Tape& tape, const ForwardBundle& fb, NodeId w_ft, NodeId w_tf) {
  NodeId f_term = js_mi_objective(tape, fb.z_f, fb.s_t, fb.corr_f, w_ft);
  NodeId t_term = js_mi_objective(tape, fb.z_t, fb.s_f, fb.corr_t, w_tf);
  return tape.add(f_term, t_term);
}

NodeId common_mi_loss(Tape& tape, const ForwardBundle& fb, NodeId w_c) {
  return js_mi_objective(tape, fb.z_c, fb.s_c, fb.corr_c, w_c);
}

namespace {

void sample_view(const std::vector<std::vector<int>>& nb, int n, int per_node, Pcg32& rng,
                 PairList& pos, PairList& neg, const char* view, const WarnFn& warn) {
  bool any_pos = false, any_neg = false;
  for (int i = 0; i < n; ++i) {
    const auto& ni = nb[i];
    const int degree = static_cast<int>(ni.size());
    for (int r = 0; r < per_node; ++r) {
      if (degree > 0) {
        pos.emplace_back(i, ni[rng.below(degree)]);
        any_pos = true;
      }
      if (degree < n - 1) {
        // Rejection sampling; neighbor lists are sorted.
        for (;;) {
          int j = static_cast<int>(rng.below(n));
          if (j == i || std::binary_search(ni.begin(), ni.end(), j)) continue;
          neg.emplace_back(i, j);
          any_neg = true;
          break;
        }
      }
    }
  }
  if (warn && n > 1 && !any_pos)
    warn(std::string(view) + " view has no edges; reconstruction positives skipped");
  if (warn && n > 1 && !any_neg)
    warn(std::string(view) + " view is complete; reconstruction negatives skipped");
}

}  // namespace

PairSample sample_pairs(const EdgeList& edges_f, const EdgeList& edges_t, int n, int per_node,
                        Pcg32& rng, const WarnFn& warn) {
  contract(per_node >= 1, "sample_pairs: per_node must be >= 1");
  PairSample ps;
  sample_view(neighbor_lists(edges_f, n), n, per_node, rng, ps.f_pos, ps.f_neg, "feature", warn);
  sample_view(neighbor_lists(edges_t, n), n, per_node, rng, ps.t_pos, ps.t_neg, "topology", warn);
  return ps;
}

NodeId reconstruction_loss(Tape& tape, NodeId z_c, const PairSample& pairs) {
  NodeId f_term = tape.pair_bce(z_c, pairs.f_pos, pairs.f_neg);
  NodeId t_term = tape.pair_bce(z_c, pairs.t_pos, pairs.t_neg);
  return tape.add(f_term, t_term);
}

NodeId disagreement_loss(Tape& tape, NodeId z_f, NodeId z_cf, NodeId z_t, NodeId z_ct) {
  NodeId f_cos = tape.mean_row_cosine(z_f, z_cf);
  NodeId t_cos = tape.mean_row_cosine(z_t, z_ct);
  return tape.scale(tape.add(f_cos, t_cos), -1.0f);
}

NodeId total_loss(Tape& tape, NodeId l_mmi, NodeId l_cmi, NodeId l_r, NodeId l_d,
                  float lambda_c, float lambda_d) {
  NodeId common = tape.scale(tape.sub(l_cmi, l_r), lambda_c);
  NodeId disagree = tape.scale(l_d, lambda_d);
  return tape.scale(tape.add(tape.add(l_mmi, common), disagree), -1.0f);
}

float total_from_parts(float l_mmi, float l_cmi, float l_r, float l_d, float lambda_c,
                       float lambda_d) {
  // Mirrors the tape op sequence of total_loss exactly; volatile blocks
  // fused contraction so every intermediate rounds to float as the tape
  // ops do.
  volatile float diff = l_cmi - l_r;
  volatile float common = lambda_c * diff;
  volatile float disagree = lambda_d * l_d;
  volatile float sum = l_mmi + common;
  volatile float sum2 = sum + disagree;
  return -sum2;
}

}  // namespace mvmi

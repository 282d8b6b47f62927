#include "mvmi/synth.hpp"

namespace mvmi {

SynthKind parse_synth_kind(const std::string& name) {
  if (name == "feature") return SynthKind::kFeature;
  if (name == "topology") return SynthKind::kTopology;
  throw ContractError("unknown synthetic kind '" + name + "' (expected feature|topology)");
}

GraphDataset generate_synthetic(const SynthConfig& config) {
  contract(config.classes >= 1 && config.nodes_per_class >= 1,
           "generate_synthetic: class layout must be positive");
  contract(config.feature_dim >= config.classes,
           "generate_synthetic: need one feature axis per class");
  auto check_p = [](double p, const char* name) {
    contract(p >= 0.0 && p <= 1.0, std::string("generate_synthetic: ") + name +
                                       " must be a probability");
  };
  check_p(config.edge_p, "edge_p");
  check_p(config.intra_p, "intra_p");
  check_p(config.inter_p, "inter_p");

  const int n = config.n();
  GraphDataset ds;
  ds.name = config.kind == SynthKind::kFeature ? "fea-syn" : "top-syn";
  ds.n = n;
  ds.d = config.feature_dim;
  ds.num_classes = config.classes;
  ds.labels.resize(n);
  for (int i = 0; i < n; ++i) ds.labels[i] = i / config.nodes_per_class;

  Pcg32 feature_rng(config.seed, 0);
  Pcg32 edge_rng(config.seed, 1);

  ds.features = DenseMatrix(n, config.feature_dim);
  for (int i = 0; i < n; ++i) {
    const int c = ds.labels[i];
    for (int j = 0; j < config.feature_dim; ++j) {
      double v = feature_rng.normal();
      if (j == c) v += config.center_scale;
      ds.features(i, j) = static_cast<float>(v);
    }
  }

  // One Bernoulli draw per unordered pair, in (i, j) order.
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      double p;
      if (config.kind == SynthKind::kFeature)
        p = config.edge_p;
      else
        p = ds.labels[i] == ds.labels[j] ? config.intra_p : config.inter_p;
      if (edge_rng.next_double() < p) ds.edges.emplace_back(i, j);
    }
  }
  return ds;
}

}  // namespace mvmi

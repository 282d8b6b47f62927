#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mvmi/dense.hpp"
#include "mvmi/graph.hpp"
#include "mvmi/rng.hpp"

namespace mvmi {

// Per-run metric values plus their mean and sample standard deviation
// (n-1 denominator).
struct EvalReport {
  std::string task;   // classify | cluster | embed-quality
  std::string label;  // dataset/model tag for aggregation
  std::vector<std::string> metric_names;
  std::vector<std::vector<double>> runs;  // runs[r][metric]
  std::vector<std::uint64_t> seeds;
  nlohmann::json config;

  double mean(const std::string& metric) const;
  double stddev(const std::string& metric) const;

  nlohmann::json to_json() const;
  static EvalReport from_json(const nlohmann::json& j);
  void write_csv(const std::string& path) const;
};

struct ProbeOptions {
  int runs = 50;
  std::uint64_t seed = 1;
  // Fixed split: run-to-run variation comes from the probe's random
  // initialization. Resampled split: a fresh per-class split is drawn
  // each run and dominates the variance.
  bool resample_split = false;
  int per_class = 20;
  double l2 = 1.0;
  int max_iter = 200;
};

// Multinomial logistic regression on frozen embeddings, trained with
// L-BFGS on the L2-regularized cross-entropy; reports test accuracy.
EvalReport linear_probe(const DenseMatrix& embeddings, const std::vector<int>& labels,
                        const Split& split, const ProbeOptions& opts);

// Single probe fit; returns test accuracy.
double linear_probe_once(const DenseMatrix& embeddings, const std::vector<int>& labels,
                         const Split& split, double l2, int max_iter, Pcg32& rng);

struct KmeansResult {
  std::vector<int> assignment;
  double inertia = 0.0;
  int iterations = 0;
  std::vector<double> inertia_history;  // per accepted Lloyd iteration
};

// Lloyd's algorithm with k-means++ seeding, 10 restarts, at most 300
// iterations each, center-shift tolerance 1e-4 (relative to the mean
// per-dimension variance); the restart with the lowest inertia wins.
KmeansResult kmeans(const DenseMatrix& points, int k, Pcg32& rng);

// I(pred; truth) / sqrt(H(pred) H(truth)); 1.0 for identical
// partitions, 0.0 when either side is a single cluster otherwise.
double nmi(const std::vector<int>& pred, const std::vector<int>& truth);
// Pair-counting adjusted Rand index; 1.0 when both partitions are
// trivial and identical.
double ari(const std::vector<int>& pred, const std::vector<int>& truth);

// Between/within dispersion ratio ((B/(k-1)) / (W/(n-k))).
double calinski_harabasz(const DenseMatrix& points, const std::vector<int>& assignment);
// Mean of (b - a) / max(a, b); singleton clusters score 0.
double silhouette(const DenseMatrix& points, const std::vector<int>& assignment);

// Summary table over homogeneous reports: one row per (label, metric).
struct AggregateRow {
  std::string label;
  std::string metric;
  double mean = 0.0;
  double stddev = 0.0;
  int runs = 0;
};
std::vector<AggregateRow> aggregate(const std::vector<EvalReport>& reports);
void write_aggregate_csv(const std::vector<AggregateRow>& rows, const std::string& path);
nlohmann::json aggregate_json(const std::vector<AggregateRow>& rows);

}  // namespace mvmi

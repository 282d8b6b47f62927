#include "mvmi/featgraph.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace mvmi {

KnnMetric parse_metric(const std::string& name) {
  if (name == "cosine") return KnnMetric::kCosine;
  if (name == "euclidean") return KnnMetric::kEuclidean;
  throw ContractError("unknown metric '" + name + "' (expected cosine|euclidean)");
}

std::string metric_name(KnnMetric m) {
  return m == KnnMetric::kCosine ? "cosine" : "euclidean";
}

double cosine_similarity(std::span<const float> a, std::span<const float> b) {
  contract(a.size() == b.size(), "cosine_similarity: vector lengths differ");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += double(a[i]) * b[i];
    na += double(a[i]) * a[i];
    nb += double(b[i]) * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

FeatureGraph build_knn_graph(const DenseMatrix& features, int k, KnnMetric metric) {
  const int n = features.rows();
  const int d = features.cols();
  contract(k >= 0, "build_knn_graph: K must be >= 0");
  contract(k < n, "build_knn_graph: K=" + std::to_string(k) + " must be < n=" +
                      std::to_string(n));

  FeatureGraph fg;
  fg.k = k;
  fg.metric = metric;
  if (k == 0) return fg;

  // Rows are pre-normalized (cosine) or paired with squared norms
  // (euclidean); the block product then yields similarities directly.
  DenseMatrix prepared(n, d);
  std::vector<double> sq_norm(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < d; ++j) s += double(features(i, j)) * features(i, j);
    sq_norm[i] = s;
    const float inv = s > 0.0 ? static_cast<float>(1.0 / std::sqrt(s)) : 0.0f;
    for (int j = 0; j < d; ++j)
      prepared(i, j) = metric == KnnMetric::kCosine ? features(i, j) * inv : features(i, j);
  }

  std::set<std::pair<int, int>> picked;
  const int block = 256;
  std::vector<std::pair<float, int>> cand(n);
  for (int r0 = 0; r0 < n; r0 += block) {
    const int rows = std::min(block, n - r0);
    DenseMatrix sub(rows, d);
    for (int i = 0; i < rows; ++i)
      std::copy(prepared.row(r0 + i), prepared.row(r0 + i) + d, sub.row(i));
    DenseMatrix sims = matmul_nt(sub, prepared);  // rows x n
    for (int i = 0; i < rows; ++i) {
      const int node = r0 + i;
      int count = 0;
      for (int j = 0; j < n; ++j) {
        if (j == node) continue;
        float score;
        if (metric == KnnMetric::kCosine) {
          score = sims(i, j);
        } else {
          score = -static_cast<float>(sq_norm[node] + sq_norm[j] - 2.0 * sims(i, j));
        }
        cand[count++] = {score, j};
      }
      auto better = [](const std::pair<float, int>& a, const std::pair<float, int>& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
      };
      std::partial_sort(cand.begin(), cand.begin() + k, cand.begin() + count, better);
      for (int t = 0; t < k; ++t) {
        const int j = cand[t].second;
        picked.emplace(std::min(node, j), std::max(node, j));
      }
    }
  }
  fg.edges.assign(picked.begin(), picked.end());
  return fg;
}

}  // namespace mvmi

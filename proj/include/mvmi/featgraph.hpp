#pragma once

#include <span>
#include <string>
#include <vector>

#include "mvmi/dense.hpp"
#include "mvmi/graph.hpp"

namespace mvmi {

enum class KnnMetric { kCosine, kEuclidean };

KnnMetric parse_metric(const std::string& name);
std::string metric_name(KnnMetric m);

struct FeatureGraph {
  EdgeList edges;  // symmetrized by union, sorted, i < j
  int k = 0;
  KnnMetric metric = KnnMetric::kCosine;
};

// dot(a,b) / (|a| |b|); zero-norm vectors score 0.
double cosine_similarity(std::span<const float> a, std::span<const float> b);

// For each node, edges to its K most similar other nodes (self
// excluded), ties broken toward the lower node index, then the union
// of the directed picks. Exact search, computed in row blocks.
FeatureGraph build_knn_graph(const DenseMatrix& features, int k,
                             KnnMetric metric = KnnMetric::kCosine);

}  // namespace mvmi

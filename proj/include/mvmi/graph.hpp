#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mvmi/dense.hpp"
#include "mvmi/rng.hpp"
#include "mvmi/sparse.hpp"

namespace mvmi {

using EdgeList = std::vector<std::pair<int, int>>;

struct Split {
  std::vector<int> train;
  std::vector<int> test;
  std::uint64_t seed = 0;
};

// One named graph: features, undirected edges (each pair stored once,
// i < j), per-node labels, optional split. Immutable after load.
struct GraphDataset {
  std::string name;
  int n = 0;
  int d = 0;
  DenseMatrix features;  // n x d
  EdgeList edges;        // sorted, deduplicated, no self-loops
  std::vector<int> labels;
  int num_classes = 0;
  std::optional<Split> split;

  std::size_t undirected_edge_count() const { return edges.size(); }
  std::size_t directed_edge_count() const { return edges.size() * 2; }
};

// On-disk layout inside one directory:
//   edges.tsv    two tab-separated 0-based node ids per line, i < j
//   features.csv n lines of d comma-separated floats
//   labels.txt   n lines, one integer class id
//   split.json   {"train":[...],"test":[...]}   (optional)
GraphDataset load_dataset(const std::string& dir);
void save_dataset(const GraphDataset& ds, const std::string& dir);

// D^{-1/2} (A + I) D^{-1/2}; isolated nodes keep degree 1 from the
// self-loop, so every diagonal entry is positive.
SparseMatrix normalize_adjacency(const EdgeList& edges, int n);

// Row-wise shuffle of the feature matrix; adjacency is left untouched
// by the caller. The applied permutation is also available separately
// so encoder passes can reuse it.
std::vector<int> corruption_permutation(int n, Pcg32& rng);
DenseMatrix corrupt(const DenseMatrix& features, Pcg32& rng);
DenseMatrix apply_row_permutation(const DenseMatrix& m, const std::vector<int>& perm);

// per_class training nodes drawn without replacement from each class,
// remainder as test set.
Split make_split(const std::vector<int>& labels, int per_class, std::uint64_t seed);

std::uint64_t dataset_fingerprint(const GraphDataset& ds);

// Adjacency sets for sampling: neighbors[i] is sorted.
std::vector<std::vector<int>> neighbor_lists(const EdgeList& edges, int n);

}  // namespace mvmi

#include "mvmi/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace mvmi {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void parse_fail(const std::string& file, std::size_t line, const std::string& msg) {
  throw IoError(file + ":" + std::to_string(line) + ": " + msg);
}

std::ifstream open_or_fail(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("missing file: " + p.string());
  return in;
}

long parse_int(std::string_view tok, const std::string& file, std::size_t line) {
  long v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    parse_fail(file, line, "expected integer, got '" + std::string(tok) + "'");
  return v;
}

}  // namespace

GraphDataset load_dataset(const std::string& dir) {
  GraphDataset ds;
  ds.name = fs::path(dir).filename().string();

  // features.csv drives n and d.
  {
    const fs::path p = fs::path(dir) / "features.csv";
    std::ifstream in = open_or_fail(p);
    std::string line;
    std::size_t lineno = 0;
    std::vector<float> data;
    int d = -1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      int count = 0;
      std::size_t pos = 0;
      while (pos <= line.size()) {
        std::size_t comma = line.find(',', pos);
        std::size_t end = comma == std::string::npos ? line.size() : comma;
        std::string tok = line.substr(pos, end - pos);
        try {
          data.push_back(std::stof(tok));
        } catch (const std::exception&) {
          parse_fail(p.string(), lineno, "expected float, got '" + tok + "'");
        }
        ++count;
        if (comma == std::string::npos) break;
        pos = comma + 1;
      }
      if (d < 0)
        d = count;
      else if (count != d)
        parse_fail(p.string(), lineno,
                   "ragged row: " + std::to_string(count) + " values, expected " +
                       std::to_string(d));
    }
    if (d <= 0) throw IoError(p.string() + ": no feature rows");
    ds.d = d;
    ds.n = static_cast<int>(data.size()) / d;
    ds.features = DenseMatrix(ds.n, ds.d, std::move(data));
  }

  {
    const fs::path p = fs::path(dir) / "labels.txt";
    std::ifstream in = open_or_fail(p);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      ds.labels.push_back(static_cast<int>(parse_int(line, p.string(), lineno)));
    }
    if (static_cast<int>(ds.labels.size()) != ds.n)
      throw IoError(p.string() + ": " + std::to_string(ds.labels.size()) + " labels for " +
                    std::to_string(ds.n) + " nodes");
    int maxl = -1;
    for (std::size_t i = 0; i < ds.labels.size(); ++i) {
      if (ds.labels[i] < 0)
        parse_fail(p.string(), i + 1, "label out of range: " + std::to_string(ds.labels[i]));
      maxl = std::max(maxl, ds.labels[i]);
    }
    ds.num_classes = maxl + 1;
  }

  {
    const fs::path p = fs::path(dir) / "edges.tsv";
    std::ifstream in = open_or_fail(p);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      std::size_t tab = line.find('\t');
      if (tab == std::string::npos) tab = line.find(' ');
      if (tab == std::string::npos) parse_fail(p.string(), lineno, "expected two columns");
      long a = parse_int(std::string_view(line).substr(0, tab), p.string(), lineno);
      long b = parse_int(std::string_view(line).substr(tab + 1), p.string(), lineno);
      if (a == b)
        parse_fail(p.string(), lineno, "self-loop on node " + std::to_string(a));
      if (a < 0 || b < 0 || a >= ds.n || b >= ds.n)
        parse_fail(p.string(), lineno, "edge index out of range for n=" + std::to_string(ds.n));
      if (a > b) std::swap(a, b);
      ds.edges.emplace_back(static_cast<int>(a), static_cast<int>(b));
    }
    std::sort(ds.edges.begin(), ds.edges.end());
    ds.edges.erase(std::unique(ds.edges.begin(), ds.edges.end()), ds.edges.end());
  }

  {
    const fs::path p = fs::path(dir) / "split.json";
    if (fs::exists(p)) {
      std::ifstream in = open_or_fail(p);
      json j;
      try {
        in >> j;
      } catch (const json::exception& e) {
        throw IoError(p.string() + ": " + e.what());
      }
      Split sp;
      sp.train = j.at("train").get<std::vector<int>>();
      sp.test = j.at("test").get<std::vector<int>>();
      for (int id : sp.train)
        contract(id >= 0 && id < ds.n, "split.json: train id out of range");
      for (int id : sp.test) contract(id >= 0 && id < ds.n, "split.json: test id out of range");
      std::vector<char> seen(ds.n, 0);
      for (int id : sp.train) seen[id] = 1;
      for (int id : sp.test)
        contract(!seen[id], "split.json: node " + std::to_string(id) + " in both sets");
      ds.split = std::move(sp);
    }
  }
  return ds;
}

void save_dataset(const GraphDataset& ds, const std::string& dir) {
  fs::create_directories(dir);
  {
    std::ofstream out(fs::path(dir) / "edges.tsv");
    for (auto [a, b] : ds.edges) out << a << '\t' << b << '\n';
  }
  {
    std::ofstream out(fs::path(dir) / "features.csv");
    out.precision(9);
    for (int i = 0; i < ds.n; ++i) {
      for (int j = 0; j < ds.d; ++j) {
        if (j) out << ',';
        out << ds.features(i, j);
      }
      out << '\n';
    }
  }
  {
    std::ofstream out(fs::path(dir) / "labels.txt");
    for (int l : ds.labels) out << l << '\n';
  }
  if (ds.split) {
    json j;
    j["train"] = ds.split->train;
    j["test"] = ds.split->test;
    std::ofstream out(fs::path(dir) / "split.json");
    out << j.dump(2) << '\n';
  }
}

SparseMatrix normalize_adjacency(const EdgeList& edges, int n) {
  std::vector<double> degree(n, 1.0);  // self-loop
  for (auto [a, b] : edges) {
    contract(a != b, "normalize_adjacency: self-loop");
    contract(a >= 0 && b >= 0 && a < n && b < n, "normalize_adjacency: index out of range");
    degree[a] += 1.0;
    degree[b] += 1.0;
  }
  std::vector<std::tuple<int, int, float>> trip;
  trip.reserve(edges.size() * 2 + n);
  for (int i = 0; i < n; ++i) trip.emplace_back(i, i, static_cast<float>(1.0 / degree[i]));
  for (auto [a, b] : edges) {
    const float v = static_cast<float>(1.0 / std::sqrt(degree[a] * degree[b]));
    trip.emplace_back(a, b, v);
    trip.emplace_back(b, a, v);
  }
  return SparseMatrix::from_triplets(n, n, std::move(trip));
}

std::vector<int> corruption_permutation(int n, Pcg32& rng) {
  contract(n >= 1, "corruption_permutation: n must be >= 1");
  return rng.permutation(n);
}

DenseMatrix apply_row_permutation(const DenseMatrix& m, const std::vector<int>& perm) {
  contract(static_cast<int>(perm.size()) == m.rows(),
           "apply_row_permutation: length mismatch");
  DenseMatrix out(m.rows(), m.cols());
  for (int i = 0; i < m.rows(); ++i)
    std::copy(m.row(perm[i]), m.row(perm[i]) + m.cols(), out.row(i));
  return out;
}

DenseMatrix corrupt(const DenseMatrix& features, Pcg32& rng) {
  return apply_row_permutation(features, corruption_permutation(features.rows(), rng));
}

Split make_split(const std::vector<int>& labels, int per_class, std::uint64_t seed) {
  contract(per_class >= 1, "make_split: per_class must be >= 1");
  int num_classes = 0;
  for (int l : labels) num_classes = std::max(num_classes, l + 1);
  std::vector<std::vector<int>> by_class(num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i)
    by_class[labels[i]].push_back(static_cast<int>(i));
  for (int c = 0; c < num_classes; ++c)
    contract(static_cast<int>(by_class[c].size()) >= per_class,
             "make_split: class " + std::to_string(c) + " has only " +
                 std::to_string(by_class[c].size()) + " nodes, need " +
                 std::to_string(per_class));
  Split sp;
  sp.seed = seed;
  Pcg32 rng(seed);
  for (int c = 0; c < num_classes; ++c) {
    auto& ids = by_class[c];
    rng.shuffle(ids);
    for (int k = 0; k < per_class; ++k) sp.train.push_back(ids[k]);
    for (std::size_t k = per_class; k < ids.size(); ++k) sp.test.push_back(ids[k]);
  }
  contract(!sp.test.empty(), "make_split: no nodes left for testing");
  std::sort(sp.train.begin(), sp.train.end());
  std::sort(sp.test.begin(), sp.test.end());
  return sp;
}

std::uint64_t dataset_fingerprint(const GraphDataset& ds) {
  Fnv1a h;
  h.update_value(ds.n);
  h.update_value(ds.d);
  h.update(ds.features.data(), ds.features.size() * sizeof(float));
  for (auto [a, b] : ds.edges) {
    h.update_value(a);
    h.update_value(b);
  }
  for (int l : ds.labels) h.update_value(l);
  return h.digest();
}

std::vector<std::vector<int>> neighbor_lists(const EdgeList& edges, int n) {
  std::vector<std::vector<int>> nb(n);
  for (auto [a, b] : edges) {
    nb[a].push_back(b);
    nb[b].push_back(a);
  }
  for (auto& v : nb) std::sort(v.begin(), v.end());
  return nb;
}

}  // namespace mvmi

#include "mvmi/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

namespace mvmi {

using nlohmann::json;

namespace {

double pooled_mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double pooled_stddev(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = pooled_mean(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

int metric_index(const std::vector<std::string>& names, const std::string& metric) {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == metric) return static_cast<int>(i);
  throw ContractError("unknown metric '" + metric + "'");
}

}  // namespace

double EvalReport::mean(const std::string& metric) const {
  const int idx = metric_index(metric_names, metric);
  contract(!runs.empty(), "EvalReport: no runs");
  std::vector<double> v;
  for (const auto& r : runs) v.push_back(r[idx]);
  return pooled_mean(v);
}

double EvalReport::stddev(const std::string& metric) const {
  const int idx = metric_index(metric_names, metric);
  contract(!runs.empty(), "EvalReport: no runs");
  std::vector<double> v;
  for (const auto& r : runs) v.push_back(r[idx]);
  return pooled_stddev(v);
}

json EvalReport::to_json() const {
  json summary = json::object();
  for (const auto& name : metric_names)
    summary[name] = {{"mean", mean(name)}, {"stddev", stddev(name)}};
  return json{{"task", task},     {"label", label}, {"metrics", metric_names},
              {"runs", runs},     {"seeds", seeds}, {"config", config},
              {"summary", summary}};
}

EvalReport EvalReport::from_json(const json& j) {
  EvalReport r;
  r.task = j.at("task").get<std::string>();
  r.label = j.value("label", "");
  r.metric_names = j.at("metrics").get<std::vector<std::string>>();
  r.runs = j.at("runs").get<std::vector<std::vector<double>>>();
  r.seeds = j.value("seeds", std::vector<std::uint64_t>{});
  if (j.contains("config")) r.config = j.at("config");
  return r;
}

void EvalReport::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "run,seed";
  for (const auto& name : metric_names) out << ',' << name;
  out << '\n';
  out.precision(9);
  for (std::size_t r = 0; r < runs.size(); ++r) {
    out << r << ',' << (r < seeds.size() ? seeds[r] : 0);
    for (double v : runs[r]) out << ',' << v;
    out << '\n';
  }
  out << "mean,";
  for (const auto& name : metric_names) out << ',' << mean(name);
  out << "\nstddev,";
  for (const auto& name : metric_names) out << ',' << stddev(name);
  out << '\n';
}

// ---------------------------------------------------------------------------
// Linear probe: multinomial logistic regression fit with L-BFGS.

namespace {

// Two-loop L-BFGS with Armijo backtracking, history 10. The probe
// objective is smooth and convex so this converges without a full
// Wolfe search.
class Lbfgs {
 public:
  using Objective =
      std::function<double(const std::vector<double>&, std::vector<double>&)>;

  static void minimize(const Objective& f, std::vector<double>& x, int max_iter,
                       double gtol) {
    const std::size_t n = x.size();
    std::vector<double> g(n), x_new(n), g_new(n);
    double fx = f(x, g);
    std::vector<std::vector<double>> s_hist, y_hist;
    std::vector<double> rho_hist;
    const int history = 10;

    for (int iter = 0; iter < max_iter; ++iter) {
      double gmax = 0.0;
      for (double v : g) gmax = std::max(gmax, std::fabs(v));
      if (gmax <= gtol) break;

      // Two-loop recursion for the search direction.
      std::vector<double> q = g;
      const int m = static_cast<int>(s_hist.size());
      std::vector<double> alpha(m);
      for (int i = m - 1; i >= 0; --i) {
        alpha[i] = rho_hist[i] * dot(s_hist[i], q);
        axpy(q, y_hist[i], -alpha[i]);
      }
      if (m > 0) {
        const double gamma =
            dot(s_hist[m - 1], y_hist[m - 1]) / dot(y_hist[m - 1], y_hist[m - 1]);
        for (double& v : q) v *= gamma;
      }
      for (int i = 0; i < m; ++i) {
        const double beta = rho_hist[i] * dot(y_hist[i], q);
        axpy(q, s_hist[i], alpha[i] - beta);
      }
      for (double& v : q) v = -v;

      double descent = dot(q, g);
      if (descent >= 0.0) {  // fall back to steepest descent
        for (std::size_t i = 0; i < n; ++i) q[i] = -g[i];
        descent = -dot(g, g);
      }

      double step = 1.0;
      double fx_new = fx;
      bool accepted = false;
      for (int ls = 0; ls < 40; ++ls) {
        for (std::size_t i = 0; i < n; ++i) x_new[i] = x[i] + step * q[i];
        fx_new = f(x_new, g_new);
        if (fx_new <= fx + 1e-4 * step * descent) {
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) break;

      std::vector<double> s(n), y(n);
      for (std::size_t i = 0; i < n; ++i) {
        s[i] = x_new[i] - x[i];
        y[i] = g_new[i] - g[i];
      }
      const double sy = dot(s, y);
      if (sy > 1e-12) {
        s_hist.push_back(std::move(s));
        y_hist.push_back(std::move(y));
        rho_hist.push_back(1.0 / sy);
        if (static_cast<int>(s_hist.size()) > history) {
          s_hist.erase(s_hist.begin());
          y_hist.erase(y_hist.begin());
          rho_hist.erase(rho_hist.begin());
        }
      }
      x.swap(x_new);
      g.swap(g_new);
      const double improvement = fx - fx_new;
      fx = fx_new;
      if (improvement <= 1e-10 * std::max(1.0, std::fabs(fx))) break;
    }
  }

 private:
  static double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
  }
  static void axpy(std::vector<double>& dst, const std::vector<double>& src, double alpha) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += alpha * src[i];
  }
};

// Parameter layout: W (dim x classes, row-major) followed by the bias
// row; the bias is excluded from the L2 penalty.
struct SoftmaxProblem {
  const DenseMatrix& x;
  const std::vector<int>& ids;
  const std::vector<int>& labels;
  int classes;
  double l2;

  double operator()(const std::vector<double>& w, std::vector<double>& grad) const {
    const int dim = x.cols();
    const int c = classes;
    std::fill(grad.begin(), grad.end(), 0.0);
    double loss = 0.0;
    std::vector<double> z(c), p(c);
    for (int id : ids) {
      const float* row = x.row(id);
      for (int j = 0; j < c; ++j) {
        double acc = w[static_cast<std::size_t>(dim) * c + j];  // bias
        for (int k = 0; k < dim; ++k) acc += w[static_cast<std::size_t>(k) * c + j] * row[k];
        z[j] = acc;
      }
      const double zmax = *std::max_element(z.begin(), z.end());
      double sum = 0.0;
      for (int j = 0; j < c; ++j) sum += std::exp(z[j] - zmax);
      const double lse = zmax + std::log(sum);
      const int y = labels[id];
      loss += lse - z[y];
      for (int j = 0; j < c; ++j) {
        p[j] = std::exp(z[j] - lse) - (j == y ? 1.0 : 0.0);
        grad[static_cast<std::size_t>(dim) * c + j] += p[j];
      }
      for (int k = 0; k < dim; ++k) {
        const double xv = row[k];
        if (xv == 0.0) continue;
        for (int j = 0; j < c; ++j) grad[static_cast<std::size_t>(k) * c + j] += xv * p[j];
      }
    }
    for (int k = 0; k < dim; ++k)
      for (int j = 0; j < c; ++j) {
        const std::size_t idx = static_cast<std::size_t>(k) * c + j;
        loss += 0.5 * l2 * w[idx] * w[idx];
        grad[idx] += l2 * w[idx];
      }
    return loss;
  }
};

}  // namespace

double linear_probe_once(const DenseMatrix& embeddings, const std::vector<int>& labels,
                         const Split& split, double l2, int max_iter, Pcg32& rng) {
  contract(!split.train.empty() && !split.test.empty(), "linear_probe: empty split");
  contract(embeddings.rows() == static_cast<int>(labels.size()),
           "linear_probe: embeddings/labels size mismatch");
  int classes = 0;
  for (int l : labels) classes = std::max(classes, l + 1);
  {
    std::vector<char> seen(classes, 0);
    int distinct = 0;
    for (int id : split.train)
      if (!seen[labels[id]]) {
        seen[labels[id]] = 1;
        ++distinct;
      }
    contract(distinct >= 2, "linear_probe: training split covers a single class");
  }

  const int dim = embeddings.cols();
  std::vector<double> w(static_cast<std::size_t>(dim + 1) * classes);
  for (double& v : w) v = rng.uniform(-0.01f, 0.01f);

  SoftmaxProblem problem{embeddings, split.train, labels, classes, l2};
  Lbfgs::minimize([&](const std::vector<double>& x, std::vector<double>& g) { return problem(x, g); },
                  w, max_iter, 1e-5);

  int correct = 0;
  std::vector<double> z(classes);
  for (int id : split.test) {
    const float* row = embeddings.row(id);
    for (int j = 0; j < classes; ++j) {
      double acc = w[static_cast<std::size_t>(dim) * classes + j];
      for (int k = 0; k < dim; ++k)
        acc += w[static_cast<std::size_t>(k) * classes + j] * row[k];
      z[j] = acc;
    }
    const int pred = static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
    if (pred == labels[id]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(split.test.size());
}

EvalReport linear_probe(const DenseMatrix& embeddings, const std::vector<int>& labels,
                        const Split& split, const ProbeOptions& opts) {
  contract(opts.runs >= 1, "linear_probe: runs must be >= 1");
  EvalReport report;
  report.task = "classify";
  report.metric_names = {"accuracy"};
  report.config = {{"runs", opts.runs},
                   {"seed", opts.seed},
                   {"resample_split", opts.resample_split},
                   {"per_class", opts.per_class},
                   {"l2", opts.l2},
                   {"max_iter", opts.max_iter}};
  for (int r = 0; r < opts.runs; ++r) {
    const std::uint64_t run_seed = opts.seed + static_cast<std::uint64_t>(r);
    Pcg32 rng(run_seed, 2);
    double acc;
    if (opts.resample_split) {
      Split sp = make_split(labels, opts.per_class, run_seed);
      acc = linear_probe_once(embeddings, labels, sp, opts.l2, opts.max_iter, rng);
    } else {
      acc = linear_probe_once(embeddings, labels, split, opts.l2, opts.max_iter, rng);
    }
    report.runs.push_back({acc});
    report.seeds.push_back(run_seed);
  }
  return report;
}

// ---------------------------------------------------------------------------
// K-Means.

namespace {

double sq_dist(const float* a, const float* b, int d) {
  double acc = 0.0;
  for (int k = 0; k < d; ++k) {
    const double diff = double(a[k]) - b[k];
    acc += diff * diff;
  }
  return acc;
}

struct LloydRun {
  std::vector<int> assignment;
  std::vector<double> centers;  // k x d
  double inertia = 0.0;
  int iterations = 0;
  std::vector<double> inertia_history;
};

LloydRun lloyd_once(const DenseMatrix& x, int k, Pcg32& rng, double tol_abs, int max_iter) {
  const int n = x.rows(), d = x.cols();
  std::vector<double> centers(static_cast<std::size_t>(k) * d);

  // k-means++ seeding.
  {
    const int first = static_cast<int>(rng.below(n));
    for (int j = 0; j < d; ++j) centers[j] = x(first, j);
    std::vector<double> min_d2(n);
    for (int i = 0; i < n; ++i) min_d2[i] = sq_dist(x.row(i), x.row(first), d);
    std::vector<float> frow(d);
    for (int c = 1; c < k; ++c) {
      double total = std::accumulate(min_d2.begin(), min_d2.end(), 0.0);
      int chosen;
      if (total <= 0.0) {
        chosen = static_cast<int>(rng.below(n));
      } else {
        double target = rng.next_double() * total;
        chosen = n - 1;
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
          acc += min_d2[i];
          if (acc >= target) {
            chosen = i;
            break;
          }
        }
      }
      for (int j = 0; j < d; ++j) centers[static_cast<std::size_t>(c) * d + j] = x(chosen, j);
      for (int i = 0; i < n; ++i) {
        double d2 = 0.0;
        const float* row = x.row(i);
        for (int j = 0; j < d; ++j) {
          const double diff = double(row[j]) - centers[static_cast<std::size_t>(c) * d + j];
          d2 += diff * diff;
        }
        min_d2[i] = std::min(min_d2[i], d2);
      }
    }
  }

  LloydRun run;
  run.assignment.assign(n, 0);
  std::vector<double> new_centers(centers.size());
  std::vector<int> counts(k);
  for (int iter = 0; iter < max_iter; ++iter) {
    // Assignment step and inertia under the current centers.
    double inertia = 0.0;
    for (int i = 0; i < n; ++i) {
      const float* row = x.row(i);
      double best = -1.0;
      int best_c = 0;
      for (int c = 0; c < k; ++c) {
        double d2 = 0.0;
        const double* ctr = centers.data() + static_cast<std::size_t>(c) * d;
        for (int j = 0; j < d; ++j) {
          const double diff = double(row[j]) - ctr[j];
          d2 += diff * diff;
        }
        if (best < 0.0 || d2 < best) {
          best = d2;
          best_c = c;
        }
      }
      run.assignment[i] = best_c;
      inertia += best;
    }
    run.inertia = inertia;
    run.inertia_history.push_back(inertia);
    run.iterations = iter + 1;

    // Update step.
    std::fill(new_centers.begin(), new_centers.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (int i = 0; i < n; ++i) {
      const float* row = x.row(i);
      double* ctr = new_centers.data() + static_cast<std::size_t>(run.assignment[i]) * d;
      for (int j = 0; j < d; ++j) ctr[j] += row[j];
      ++counts[run.assignment[i]];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] == 0) {
        // Relocate an empty cluster to the point farthest from its center.
        int far_i = 0;
        double far_d = -1.0;
        for (int i = 0; i < n; ++i) {
          const double* ctr =
              centers.data() + static_cast<std::size_t>(run.assignment[i]) * d;
          double d2 = 0.0;
          const float* row = x.row(i);
          for (int j = 0; j < d; ++j) {
            const double diff = double(row[j]) - ctr[j];
            d2 += diff * diff;
          }
          if (d2 > far_d) {
            far_d = d2;
            far_i = i;
          }
        }
        for (int j = 0; j < d; ++j)
          new_centers[static_cast<std::size_t>(c) * d + j] = x(far_i, j);
        counts[c] = 1;
      } else {
        for (int j = 0; j < d; ++j) new_centers[static_cast<std::size_t>(c) * d + j] /= counts[c];
      }
    }

    double shift = 0.0;
    for (std::size_t i = 0; i < centers.size(); ++i) {
      const double diff = new_centers[i] - centers[i];
      shift += diff * diff;
    }
    centers.swap(new_centers);
    if (shift <= tol_abs) break;
  }
  run.centers = std::move(centers);
  return run;
}

}  // namespace

KmeansResult kmeans(const DenseMatrix& points, int k, Pcg32& rng) {
  const int n = points.rows();
  contract(k >= 1 && k <= n, "kmeans: need 1 <= k <= n");

  // Tolerance follows the usual convention of scaling by the mean
  // per-dimension variance of the data.
  double var_sum = 0.0;
  for (int j = 0; j < points.cols(); ++j) {
    double mean = 0.0;
    for (int i = 0; i < n; ++i) mean += points(i, j);
    mean /= n;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      const double diff = points(i, j) - mean;
      acc += diff * diff;
    }
    var_sum += acc / n;
  }
  const double tol_abs = 1e-4 * (var_sum / points.cols());

  const int restarts = 10;
  KmeansResult best;
  for (int r = 0; r < restarts; ++r) {
    LloydRun run = lloyd_once(points, k, rng, tol_abs, 300);
    if (r == 0 || run.inertia < best.inertia) {
      best.assignment = std::move(run.assignment);
      best.inertia = run.inertia;
      best.iterations = run.iterations;
      best.inertia_history = std::move(run.inertia_history);
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Partition agreement metrics.

namespace {

std::vector<int> compact_labels(const std::vector<int>& v, int& k) {
  std::map<int, int> remap;
  std::vector<int> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    auto [it, inserted] = remap.emplace(v[i], static_cast<int>(remap.size()));
    out[i] = it->second;
  }
  k = static_cast<int>(remap.size());
  return out;
}

std::vector<std::vector<long>> contingency(const std::vector<int>& a, int ka,
                                           const std::vector<int>& b, int kb) {
  std::vector<std::vector<long>> table(ka, std::vector<long>(kb, 0));
  for (std::size_t i = 0; i < a.size(); ++i) ++table[a[i]][b[i]];
  return table;
}

}  // namespace

double nmi(const std::vector<int>& pred, const std::vector<int>& truth) {
  contract(!pred.empty(), "nmi: empty labeling");
  contract(pred.size() == truth.size(), "nmi: length mismatch");
  int kp = 0, kt = 0;
  const std::vector<int> p = compact_labels(pred, kp);
  const std::vector<int> t = compact_labels(truth, kt);
  if (p == t) return 1.0;  // identical partitions, including the trivial ones
  if (kp == 1 || kt == 1) return 0.0;

  const double n = static_cast<double>(p.size());
  const auto table = contingency(p, kp, t, kt);
  std::vector<long> pa(kp, 0), tb(kt, 0);
  for (int i = 0; i < kp; ++i)
    for (int j = 0; j < kt; ++j) {
      pa[i] += table[i][j];
      tb[j] += table[i][j];
    }
  double mi = 0.0;
  for (int i = 0; i < kp; ++i)
    for (int j = 0; j < kt; ++j) {
      if (table[i][j] == 0) continue;
      const double pij = table[i][j] / n;
      mi += pij * std::log(n * table[i][j] / (double(pa[i]) * tb[j]));
    }
  double hp = 0.0, ht = 0.0;
  for (int i = 0; i < kp; ++i) hp -= (pa[i] / n) * std::log(pa[i] / n);
  for (int j = 0; j < kt; ++j) ht -= (tb[j] / n) * std::log(tb[j] / n);
  const double norm = std::sqrt(hp * ht);
  if (norm <= 0.0) return 0.0;
  return std::clamp(mi / norm, 0.0, 1.0);
}

double ari(const std::vector<int>& pred, const std::vector<int>& truth) {
  contract(!pred.empty(), "ari: empty labeling");
  contract(pred.size() == truth.size(), "ari: length mismatch");
  int kp = 0, kt = 0;
  const std::vector<int> p = compact_labels(pred, kp);
  const std::vector<int> t = compact_labels(truth, kt);
  const auto table = contingency(p, kp, t, kt);
  std::vector<long> pa(kp, 0), tb(kt, 0);
  for (int i = 0; i < kp; ++i)
    for (int j = 0; j < kt; ++j) {
      pa[i] += table[i][j];
      tb[j] += table[i][j];
    }
  auto comb2 = [](double x) { return x * (x - 1.0) / 2.0; };
  double sum_ij = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (int i = 0; i < kp; ++i)
    for (int j = 0; j < kt; ++j) sum_ij += comb2(static_cast<double>(table[i][j]));
  for (int i = 0; i < kp; ++i) sum_a += comb2(static_cast<double>(pa[i]));
  for (int j = 0; j < kt; ++j) sum_b += comb2(static_cast<double>(tb[j]));
  const double total = comb2(static_cast<double>(p.size()));
  const double expected = sum_a * sum_b / total;
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return 1.0;  // both partitions trivial
  return (sum_ij - expected) / (max_index - expected);
}

// ---------------------------------------------------------------------------
// Embedding geometry metrics.

double calinski_harabasz(const DenseMatrix& points, const std::vector<int>& assignment) {
  const int n = points.rows(), d = points.cols();
  contract(n == static_cast<int>(assignment.size()), "calinski_harabasz: length mismatch");
  int k = 0;
  const std::vector<int> a = compact_labels(assignment, k);
  contract(k >= 2, "calinski_harabasz: need at least 2 clusters");
  contract(k < n, "calinski_harabasz: need k < n");

  std::vector<double> global(d, 0.0);
  std::vector<std::vector<double>> centers(k, std::vector<double>(d, 0.0));
  std::vector<int> counts(k, 0);
  for (int i = 0; i < n; ++i) {
    const float* row = points.row(i);
    for (int j = 0; j < d; ++j) {
      global[j] += row[j];
      centers[a[i]][j] += row[j];
    }
    ++counts[a[i]];
  }
  for (int j = 0; j < d; ++j) global[j] /= n;
  for (int c = 0; c < k; ++c)
    for (int j = 0; j < d; ++j) centers[c][j] /= counts[c];

  double within = 0.0, between = 0.0;
  for (int i = 0; i < n; ++i) {
    const float* row = points.row(i);
    const auto& ctr = centers[a[i]];
    for (int j = 0; j < d; ++j) {
      const double diff = double(row[j]) - ctr[j];
      within += diff * diff;
    }
  }
  for (int c = 0; c < k; ++c)
    for (int j = 0; j < d; ++j) {
      const double diff = centers[c][j] - global[j];
      between += counts[c] * diff * diff;
    }
  return (between / (k - 1)) / (within / (n - k));
}

double silhouette(const DenseMatrix& points, const std::vector<int>& assignment) {
  const int n = points.rows(), d = points.cols();
  contract(n == static_cast<int>(assignment.size()), "silhouette: length mismatch");
  int k = 0;
  const std::vector<int> a = compact_labels(assignment, k);
  contract(k >= 2, "silhouette: need at least 2 clusters");

  std::vector<int> counts(k, 0);
  for (int c : a) ++counts[c];

  // Accumulate per-point mean distance to every cluster.
  std::vector<std::vector<double>> dist_sum(n, std::vector<double>(k, 0.0));
  for (int i = 0; i < n; ++i) {
    const float* ri = points.row(i);
    for (int j = i + 1; j < n; ++j) {
      const double dist = std::sqrt(sq_dist(ri, points.row(j), d));
      dist_sum[i][a[j]] += dist;
      dist_sum[j][a[i]] += dist;
    }
  }

  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const int own = a[i];
    if (counts[own] <= 1) continue;  // singleton scores 0
    const double ai = dist_sum[i][own] / (counts[own] - 1);
    double bi = -1.0;
    for (int c = 0; c < k; ++c) {
      if (c == own || counts[c] == 0) continue;
      const double mean = dist_sum[i][c] / counts[c];
      if (bi < 0.0 || mean < bi) bi = mean;
    }
    const double denom = std::max(ai, bi);
    if (denom > 0.0) acc += (bi - ai) / denom;
  }
  return acc / n;
}

// ---------------------------------------------------------------------------
// Aggregation.

std::vector<AggregateRow> aggregate(const std::vector<EvalReport>& reports) {
  contract(!reports.empty(), "aggregate: no reports");
  for (const auto& r : reports)
    contract(r.task == reports.front().task,
             "aggregate: mixed tasks ('" + r.task + "' vs '" + reports.front().task + "')");

  // Pool run values per (label, metric), preserving first-seen order.
  std::vector<std::pair<std::pair<std::string, std::string>, std::vector<double>>> pools;
  auto pool_for = [&](const std::string& label, const std::string& metric) -> std::vector<double>& {
    for (auto& [key, v] : pools)
      if (key.first == label && key.second == metric) return v;
    pools.push_back({{label, metric}, {}});
    return pools.back().second;
  };
  for (const auto& r : reports) {
    contract(!r.runs.empty(), "aggregate: report with no runs");
    for (std::size_t m = 0; m < r.metric_names.size(); ++m) {
      auto& pool = pool_for(r.label, r.metric_names[m]);
      for (const auto& run : r.runs) pool.push_back(run[m]);
    }
  }
  std::vector<AggregateRow> rows;
  for (auto& [key, values] : pools) {
    AggregateRow row;
    row.label = key.first;
    row.metric = key.second;
    row.mean = pooled_mean(values);
    row.stddev = pooled_stddev(values);
    row.runs = static_cast<int>(values.size());
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_aggregate_csv(const std::vector<AggregateRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "label,metric,mean,stddev,runs\n";
  out.precision(9);
  for (const auto& r : rows)
    out << r.label << ',' << r.metric << ',' << r.mean << ',' << r.stddev << ',' << r.runs
        << '\n';
}

json aggregate_json(const std::vector<AggregateRow>& rows) {
  json arr = json::array();
  for (const auto& r : rows)
    arr.push_back({{"label", r.label},
                   {"metric", r.metric},
                   {"mean", r.mean},
                   {"stddev", r.stddev},
                   {"runs", r.runs}});
  return arr;
}

}  // namespace mvmi

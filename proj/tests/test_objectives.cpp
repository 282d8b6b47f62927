#include <cmath>

#include "doctest.h"
#include "mvmi/objectives.hpp"
#include "test_util.hpp"

using namespace mvmi;
using mvmi::test::random_matrix;

namespace {

constexpr double kTwoLogHalf = -1.3862943611;  // 2 * log(0.5)

// Scalar recomputation of the discrimination objective, one node at a
// time in double precision.
double js_oracle(const DenseMatrix& z, const DenseMatrix& s, const DenseMatrix& corr,
                 const DenseMatrix& w) {
  const int n = z.rows();
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double pos = discriminate({z.row(i), (std::size_t)z.cols()},
                                    {s.row(0), (std::size_t)s.cols()}, w);
    const double neg = discriminate({corr.row(i), (std::size_t)corr.cols()},
                                    {s.row(0), (std::size_t)s.cols()}, w);
    const double cp = std::clamp(pos, -30.0, 30.0);
    const double cn = std::clamp(neg, -30.0, 30.0);
    acc += std::log(1.0 / (1.0 + std::exp(-cp)));
    acc += std::log(1.0 - 1.0 / (1.0 + std::exp(-cn)));
  }
  return acc / n;
}

}  // namespace

TEST_CASE("js objective: zero logits give 2 log 0.5 per node") {
  Pcg32 rng(3);
  Tape tape;
  NodeId z = tape.constant(random_matrix(3, 4, rng));
  NodeId corr = tape.constant(random_matrix(3, 4, rng));
  NodeId s = tape.constant(random_matrix(1, 4, rng));
  NodeId w = tape.constant(DenseMatrix(4, 4));  // zero discriminator
  NodeId v = js_mi_objective(tape, z, s, corr, w);
  CHECK(tape.value(v)(0, 0) == doctest::Approx(kTwoLogHalf).epsilon(1e-5));
}

TEST_CASE("js objective: saturated logits approach zero from below") {
  Tape tape;
  NodeId z = tape.constant(DenseMatrix(2, 1, {30.0f, 30.0f}));
  NodeId corr = tape.constant(DenseMatrix(2, 1, {-30.0f, -30.0f}));
  NodeId s = tape.constant(DenseMatrix(1, 1, {1.0f}));
  NodeId w = tape.constant(DenseMatrix::identity(1));
  NodeId v = js_mi_objective(tape, z, s, corr, w);
  CHECK(tape.value(v)(0, 0) == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(tape.value(v)(0, 0) <= 0.0f);
}

TEST_CASE("js objective matches the per-node scalar oracle") {
  Pcg32 rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    DenseMatrix z = random_matrix(3, 4, rng);
    DenseMatrix corr = random_matrix(3, 4, rng);
    DenseMatrix s = random_matrix(1, 4, rng);
    DenseMatrix w = random_matrix(4, 4, rng);
    Tape tape;
    NodeId v = js_mi_objective(tape, tape.constant(z), tape.constant(s), tape.constant(corr),
                               tape.constant(w));
    CHECK(tape.value(v)(0, 0) == doctest::Approx(js_oracle(z, s, corr, w)).epsilon(1e-4));
    CHECK(tape.value(v)(0, 0) < 0.0f);  // strict upper bound for finite logits
  }
}

TEST_CASE("multi_view_loss: zero-logit state sums two terms") {
  Pcg32 rng(11);
  const int n = 4, d = 3, h = 5;
  SparseMatrix adj_f = normalize_adjacency({{0, 1}, {2, 3}}, n);
  SparseMatrix adj_t = normalize_adjacency({{0, 2}, {1, 3}}, n);
  ModelParams params = ModelParams::init(d, h, rng);
  params.disc_ft.fill(0.0f);
  params.disc_tf.fill(0.0f);
  std::vector<int> perm = {1, 0, 3, 2};
  Tape tape;
  MvmiftNodes nodes = MvmiftNodes::bind(tape, params);
  ForwardBundle fb =
      mvmift_forward(tape, nodes, &adj_f, &adj_t, tape.constant(random_matrix(n, d, rng)), &perm);
  NodeId v = multi_view_loss(tape, fb, nodes.disc_ft, nodes.disc_tf);
  CHECK(tape.value(v)(0, 0) == doctest::Approx(2 * kTwoLogHalf).epsilon(1e-5));
}

TEST_CASE("multi_view_loss on a frozen forward matches the oracle") {
  Pcg32 rng(13);
  const int n = 5, d = 4, h = 6;
  SparseMatrix adj_f = normalize_adjacency({{0, 1}, {1, 2}, {3, 4}}, n);
  SparseMatrix adj_t = normalize_adjacency({{0, 4}, {2, 3}}, n);
  ModelParams params = ModelParams::init(d, h, rng);
  std::vector<int> perm = {4, 2, 0, 1, 3};
  Tape tape;
  MvmiftNodes nodes = MvmiftNodes::bind(tape, params);
  ForwardBundle fb =
      mvmift_forward(tape, nodes, &adj_f, &adj_t, tape.constant(random_matrix(n, d, rng)), &perm);
  NodeId v = multi_view_loss(tape, fb, nodes.disc_ft, nodes.disc_tf);
  const double oracle =
      js_oracle(tape.value(fb.z_f), tape.value(fb.s_t), tape.value(fb.corr_f), params.disc_ft) +
      js_oracle(tape.value(fb.z_t), tape.value(fb.s_f), tape.value(fb.corr_t), params.disc_tf);
  CHECK(tape.value(v)(0, 0) == doctest::Approx(oracle).epsilon(1e-4));

  NodeId c = common_mi_loss(tape, fb, nodes.disc_c);
  const double c_oracle =
      js_oracle(tape.value(fb.z_c), tape.value(fb.s_c), tape.value(fb.corr_c), params.disc_c);
  CHECK(tape.value(c)(0, 0) == doctest::Approx(c_oracle).epsilon(1e-4));
}

TEST_CASE("degenerate single-node corruption reuses the same patch") {
  Pcg32 rng(17);
  DenseMatrix z = random_matrix(1, 3, rng);
  DenseMatrix s = random_matrix(1, 3, rng);
  DenseMatrix w = random_matrix(3, 3, rng);
  Tape tape;
  NodeId v = js_mi_objective(tape, tape.constant(z), tape.constant(s), tape.constant(z),
                             tape.constant(w));
  const double logit = discriminate({z.row(0), 3}, {s.row(0), 3}, w);
  const double p = 1.0 / (1.0 + std::exp(-std::clamp(logit, -30.0, 30.0)));
  CHECK(tape.value(v)(0, 0) == doctest::Approx(std::log(p) + std::log(1 - p)).epsilon(1e-4));
}

TEST_CASE("sample_pairs: forced positives, no negatives on a complete pair") {
  Pcg32 rng(19);
  PairSample ps = sample_pairs({{0, 1}}, {{0, 1}}, 2, 1, rng);
  REQUIRE(ps.f_pos.size() == 2);
  CHECK(ps.f_pos[0] == std::pair{0, 1});
  CHECK(ps.f_pos[1] == std::pair{1, 0});
  CHECK(ps.f_neg.empty());
  CHECK(ps.t_neg.empty());
}

TEST_CASE("sample_pairs: 4-cycle negatives are the diagonals") {
  Pcg32 rng(23);
  EdgeList cycle = {{0, 1}, {1, 2}, {2, 3}, {0, 3}};
  PairSample ps = sample_pairs(cycle, cycle, 4, 1, rng);
  REQUIRE(ps.f_neg.size() == 4);
  for (auto [i, j] : ps.f_neg) CHECK(std::abs(i - j) == 2);  // 0-2 or 1-3
}

TEST_CASE("sample_pairs: deterministic and respects edge membership") {
  Pcg32 rng_a(29), rng_b(29);
  EdgeList f = {{0, 1}, {1, 2}, {2, 3}, {4, 5}, {0, 5}};
  EdgeList t = {{0, 2}, {1, 3}, {3, 5}};
  PairSample a = sample_pairs(f, t, 6, 2, rng_a);
  PairSample b = sample_pairs(f, t, 6, 2, rng_b);
  CHECK(a.f_pos == b.f_pos);
  CHECK(a.f_neg == b.f_neg);
  CHECK(a.t_pos == b.t_pos);
  CHECK(a.t_neg == b.t_neg);

  auto nb_f = neighbor_lists(f, 6);
  auto nb_t = neighbor_lists(t, 6);
  for (auto [i, j] : a.f_pos)
    CHECK(std::binary_search(nb_f[i].begin(), nb_f[i].end(), j));
  for (auto [i, j] : a.f_neg) {
    CHECK(i != j);
    CHECK(!std::binary_search(nb_f[i].begin(), nb_f[i].end(), j));
  }
  for (auto [i, j] : a.t_pos)
    CHECK(std::binary_search(nb_t[i].begin(), nb_t[i].end(), j));
  for (auto [i, j] : a.t_neg) {
    CHECK(i != j);
    CHECK(!std::binary_search(nb_t[i].begin(), nb_t[i].end(), j));
  }
  // Node 4 has no topology neighbors and is skipped in that view.
  CHECK(a.t_pos.size() == 2 * 5);
}

TEST_CASE("reconstruction_loss: zero embedding gives 4 ln 2 with 1+1 pairs per view") {
  Tape tape;
  NodeId z = tape.constant(DenseMatrix(4, 3));
  PairSample pairs;
  pairs.f_pos = {{0, 1}};
  pairs.f_neg = {{0, 2}};
  pairs.t_pos = {{1, 2}};
  pairs.t_neg = {{1, 3}};
  NodeId v = reconstruction_loss(tape, z, pairs);
  CHECK(tape.value(v)(0, 0) == doctest::Approx(4.0 * std::log(2.0)).epsilon(1e-6));
}

TEST_CASE("reconstruction_loss: saturated embedding approaches zero") {
  const float r = std::sqrt(30.0f);
  DenseMatrix z(3, 2, {r, 0.0f, r, 0.0f, -r, 0.0f});
  PairSample pairs;
  pairs.f_pos = {{0, 1}};  // dot +30
  pairs.f_neg = {{0, 2}};  // dot -30
  pairs.t_pos = {{0, 1}};
  pairs.t_neg = {{1, 2}};
  Tape tape;
  NodeId v = reconstruction_loss(tape, tape.constant(z), pairs);
  CHECK(tape.value(v)(0, 0) == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(tape.value(v)(0, 0) >= 0.0f);
}

TEST_CASE("reconstruction_loss matches a decoder loop oracle") {
  Pcg32 rng(31);
  DenseMatrix z = random_matrix(6, 4, rng);
  PairSample pairs;
  pairs.f_pos = {{0, 1}, {2, 3}, {4, 5}};
  pairs.f_neg = {{0, 4}, {1, 5}};
  pairs.t_pos = {{1, 2}};
  pairs.t_neg = {{3, 5}, {0, 2}, {1, 4}};
  Tape tape;
  NodeId v = reconstruction_loss(tape, tape.constant(z), pairs);

  AdjacencyDecoder dec(z);
  auto view_term = [&](const PairList& pos, const PairList& neg) {
    double acc = 0.0;
    for (auto [i, j] : pos) acc += -std::log(std::max(dec.prob(i, j), 1e-7)) / pos.size();
    for (auto [i, j] : neg)
      acc += -std::log(std::max(1.0 - dec.prob(i, j), 1e-7)) / neg.size();
    return acc;
  };
  const double oracle =
      view_term(pairs.f_pos, pairs.f_neg) + view_term(pairs.t_pos, pairs.t_neg);
  CHECK(tape.value(v)(0, 0) == doctest::Approx(oracle).epsilon(1e-5));
}

TEST_CASE("disagreement_loss endpoints and bounds") {
  Pcg32 rng(37);
  DenseMatrix a = random_matrix(4, 3, rng, 0.1f, 1.0f);  // nonzero rows
  Tape tape;
  NodeId an = tape.constant(a);
  CHECK(tape.value(disagreement_loss(tape, an, an, an, an))(0, 0) ==
        doctest::Approx(-2.0).epsilon(1e-6));

  DenseMatrix flipped = a;
  for (std::size_t i = 0; i < flipped.size(); ++i) flipped.data()[i] = -flipped.data()[i];
  NodeId fn = tape.constant(flipped);
  CHECK(tape.value(disagreement_loss(tape, an, fn, an, fn))(0, 0) ==
        doctest::Approx(2.0).epsilon(1e-6));

  DenseMatrix e1(2, 2, {1.0f, 0.0f, 1.0f, 0.0f});
  DenseMatrix e2(2, 2, {0.0f, 1.0f, 0.0f, 1.0f});
  CHECK(tape.value(disagreement_loss(tape, tape.constant(e1), tape.constant(e2),
                                     tape.constant(e1), tape.constant(e2)))(0, 0) ==
        doctest::Approx(0.0));

  for (int trial = 0; trial < 10; ++trial) {
    DenseMatrix w = random_matrix(5, 4, rng);
    DenseMatrix x = random_matrix(5, 4, rng);
    DenseMatrix y = random_matrix(5, 4, rng);
    DenseMatrix u = random_matrix(5, 4, rng);
    Tape t;
    const float v = t.value(disagreement_loss(t, t.constant(w), t.constant(x), t.constant(y),
                                              t.constant(u)))(0, 0);
    CHECK(v >= -2.0f);
    CHECK(v <= 2.0f);
  }
}

TEST_CASE("disagreement_loss invariant under positive per-row rescaling") {
  Pcg32 rng(41);
  DenseMatrix a = random_matrix(6, 4, rng);
  DenseMatrix b = random_matrix(6, 4, rng);
  DenseMatrix a2 = a, b2 = b;
  for (int i = 0; i < 6; ++i) {
    const float ca = rng.uniform(0.2f, 4.0f), cb = rng.uniform(0.2f, 4.0f);
    for (int j = 0; j < 4; ++j) {
      a2(i, j) *= ca;
      b2(i, j) *= cb;
    }
  }
  Tape t;
  const float v1 =
      t.value(disagreement_loss(t, t.constant(a), t.constant(b), t.constant(a), t.constant(b)))(0, 0);
  const float v2 = t.value(disagreement_loss(t, t.constant(a2), t.constant(b2), t.constant(a2),
                                             t.constant(b2)))(0, 0);
  CHECK(v1 == doctest::Approx(v2).epsilon(1e-4));
}

TEST_CASE("total_loss arithmetic identities") {
  auto total_of = [](float mmi, float cmi, float r, float d, float lc, float ld) {
    Tape t;
    NodeId v = total_loss(t, t.constant(DenseMatrix(1, 1, {mmi})),
                          t.constant(DenseMatrix(1, 1, {cmi})),
                          t.constant(DenseMatrix(1, 1, {r})),
                          t.constant(DenseMatrix(1, 1, {d})), lc, ld);
    return t.value(v)(0, 0);
  };
  CHECK(total_of(-1.0f, -1.0f, 2.0f, -2.0f, 0.3f, 0.01f) == doctest::Approx(1.92).epsilon(1e-6));
  CHECK(total_of(-1.5f, 9.0f, -3.0f, 7.0f, 0.0f, 0.0f) == doctest::Approx(1.5));
  CHECK(total_of(0.0f, 0.0f, 0.0f, 0.0f, 0.3f, 0.01f) == 0.0f);

  // The float mirror is bitwise-identical to the differentiated scalar.
  Pcg32 rng(43);
  for (int trial = 0; trial < 20; ++trial) {
    const float mmi = rng.uniform(-3.0f, 0.0f);
    const float cmi = rng.uniform(-3.0f, 0.0f);
    const float r = rng.uniform(0.0f, 4.0f);
    const float d = rng.uniform(-2.0f, 2.0f);
    const float lc = rng.uniform(0.0f, 1.0f);
    const float ld = rng.uniform(0.0f, 0.1f);
    CHECK(total_of(mmi, cmi, r, d, lc, ld) == total_from_parts(mmi, cmi, r, d, lc, ld));
  }
}

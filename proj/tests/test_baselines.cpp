#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <utility>
#include <vector>

#include "caasr/baselines.hpp"
#include "caasr/errors.hpp"
#include "caasr/graph.hpp"
#include "caasr/model.hpp"

using namespace caasr;

namespace {

SequenceDataset make_dataset(std::size_t n_items,
                             std::vector<std::vector<std::size_t>> seqs) {
  SequenceDataset ds;
  ds.n_items = n_items;
  for (std::size_t u = 0; u < seqs.size(); ++u) {
    ds.sequences.push_back({u, std::move(seqs[u])});
  }
  return ds;
}

DenseTensor random_tensor(std::size_t r, std::size_t c, Rng& rng) {
  DenseTensor t = DenseTensor::zeros({r, c});
  for (double& v : t.data) v = rng.uniform_range(-1.0, 1.0);
  return t;
}

// Brute-force cosine ranking with the same tie rule as predict_topk.
std::vector<std::size_t> cosine_rank_oracle(const DenseTensor& factors, std::size_t query) {
  std::size_t n = factors.rows(), d = factors.cols();
  auto norm = [&](std::size_t r) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += factors.at(r, j) * factors.at(r, j);
    return std::sqrt(s);
  };
  double qn = norm(query);
  std::vector<double> s(n, -2.0);
  for (std::size_t i = 0; i < n; ++i) {
    double fn = norm(i);
    if (qn == 0.0 || fn == 0.0) continue;
    double dot = 0.0;
    for (std::size_t j = 0; j < d; ++j) dot += factors.at(query, j) * factors.at(i, j);
    s[i] = dot / (qn * fn);
  }
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (s[a] != s[b]) return s[a] > s[b];
    return a < b;
  });
  return idx;
}

}  // namespace

TEST_CASE("history profiles average the factor rows of each prefix") {
  Tape tape;
  Tape::ValueRef factors = tape.leaf(
      DenseTensor::from_rows(3, 2, {1.0, 2.0, 3.0, 4.0, 5.0, 6.0}));
  Tape::ValueRef profiles =
      history_profiles(tape, factors, {{2}, {0, 1}, {0, 1, 2}});
  const DenseTensor& v = tape.value(profiles);
  REQUIRE(v.shape == std::vector<std::size_t>{3, 2});
  CHECK(v.at(0, 0) == 5.0);  // single-item history is that item's vector
  CHECK(v.at(0, 1) == 6.0);
  CHECK(v.at(1, 0) == doctest::Approx(2.0));
  CHECK(v.at(1, 1) == doctest::Approx(3.0));
  CHECK(v.at(2, 0) == doctest::Approx(3.0));
  CHECK(v.at(2, 1) == doctest::Approx(4.0));
}

TEST_CASE("factor training leaves parameters fixed at zero learning rate") {
  SequenceDataset ds = make_dataset(5, {{0, 1, 2}, {3, 4, 0}, {2, 3}});
  BprConfig cfg;
  cfg.latent_dim = 3;
  cfg.batch_size = 2;
  cfg.max_epochs = 3;
  cfg.learning_rate = 0.0;

  ParamStore trained;
  bpr_train(ds, cfg, 9, trained);

  ParamStore fresh;
  fresh.create("bpr.item_factors", {5, 3});
  Rng init_rng(derive_seed(9, "init"));
  fresh.init_uniform(-0.1, 0.1, init_rng);

  CHECK(trained.value("bpr.item_factors").data == fresh.value("bpr.item_factors").data);
}

TEST_CASE("factor training reduces the ranking loss on a small corpus") {
  SequenceDataset ds = make_dataset(
      5, {{0, 1, 2}, {0, 1, 2}, {2, 3, 4}, {2, 3, 4}, {0, 1}, {3, 4}});
  BprConfig cfg;
  cfg.latent_dim = 4;
  cfg.batch_size = 4;
  cfg.max_epochs = 20;
  cfg.learning_rate = 0.05;

  ParamStore params;
  TrainResult res = bpr_train(ds, cfg, 17, params);
  REQUIRE(res.epoch_mean_loss.size() == 20);
  CHECK(res.epoch_mean_loss.back() < res.epoch_mean_loss.front());
  CHECK(params.value("bpr.item_factors").all_finite());

  SUBCASE("same seed reproduces the trajectory") {
    ParamStore again;
    TrainResult res2 = bpr_train(ds, cfg, 17, again);
    CHECK(res2.batch_losses == res.batch_losses);
    CHECK(again.value("bpr.item_factors").data == params.value("bpr.item_factors").data);
  }
}

TEST_CASE("pairwise factor loss passes a finite-difference gradient check") {
  ParamStore params;
  params.create("bpr.item_factors", {6, 3});
  Rng init_rng(3);
  params.init_uniform(-0.5, 0.5, init_rng);

  std::vector<std::vector<std::size_t>> prefixes = {{0}, {0, 1}, {2, 3, 4}};
  std::vector<std::size_t> targets = {1, 2, 5};
  std::vector<std::size_t> negatives = {3, 5, 0};

  LossBuilder build = [&](Tape& t, const std::map<std::string, Tape::ValueRef>& leaves) {
    Tape::ValueRef f = leaves.at("bpr.item_factors");
    Tape::ValueRef profiles = history_profiles(t, f, prefixes);
    Tape::ValueRef scores =
        t.row_dot(profiles, t.sub(t.gather(f, targets), t.gather(f, negatives)));
    Tape::ValueRef loss = t.scale(t.sum(t.softplus(t.neg(scores))), 1.0 / 3.0);
    return t.add(loss, t.scale(t.sum(t.mul(f, f)), 0.005));
  };
  GradCheckResult res = gradient_check(build, params, 1e-5, 18, 41);
  CHECK(res.coords_checked == 18);
  CHECK(res.max_rel_error < 1e-7);
}

TEST_CASE("cosine ranking follows the geometry of the factor table") {
  SUBCASE("orthonormal factors put the query item first") {
    DenseTensor eye = DenseTensor::zeros({4, 4});
    for (std::size_t i = 0; i < 4; ++i) eye.at(i, i) = 1.0;
    std::vector<std::size_t> top = bpr_knn_predict({1, 2}, eye, 4);
    CHECK(top[0] == 2);  // the last history item
    CHECK(top == std::vector<std::size_t>{2, 0, 1, 3});
  }

  SUBCASE("identical factors rank purely by index") {
    DenseTensor same = DenseTensor::from_rows(3, 2, {0.4, 0.3, 0.4, 0.3, 0.4, 0.3});
    CHECK(bpr_knn_predict({2}, same, 3) == std::vector<std::size_t>{0, 1, 2});
  }

  SUBCASE("random factors match a brute-force cosine sort") {
    Rng rng(77);
    DenseTensor factors = random_tensor(12, 4, rng);
    for (std::size_t query : {0u, 5u, 11u}) {
      std::vector<std::size_t> got = bpr_knn_predict({query}, factors, 12);
      CHECK(got == cosine_rank_oracle(factors, query));
    }
  }

  SUBCASE("zero-norm rows rank behind every real similarity") {
    DenseTensor factors =
        DenseTensor::from_rows(4, 2, {1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.5, 0.5});
    std::vector<std::size_t> top = bpr_knn_predict({0}, factors, 4);
    CHECK(top.back() == 1);                  // the zero row comes last
    CHECK(top[0] == 0);                      // cosine 1 with itself
    std::vector<double> s = knn_scores(factors, {0});
    CHECK(s[1] == -2.0);
    CHECK(s[2] == doctest::Approx(-1.0));
  }

  SUBCASE("ranking is invariant under positive rescaling") {
    Rng rng(5);
    DenseTensor factors = random_tensor(8, 3, rng);
    DenseTensor scaled = factors;
    for (double& v : scaled.data) v *= 3.7;
    CHECK(bpr_knn_predict({4}, factors, 8) == bpr_knn_predict({4}, scaled, 8));
  }

  SUBCASE("mean-of-history mode queries the averaged vector") {
    DenseTensor factors = DenseTensor::from_rows(3, 2, {1.0, 0.0, 0.0, 1.0, 1.0, 1.0});
    // mean of rows 0 and 1 is (0.5, 0.5), parallel to row 2.
    std::vector<double> s = knn_scores(factors, {0, 1}, true);
    CHECK(s[2] == doctest::Approx(1.0));
    CHECK(s[0] == doctest::Approx(std::sqrt(0.5)));
  }

  SUBCASE("empty history is rejected") {
    DenseTensor factors = DenseTensor::zeros({2, 2});
    CHECK_THROWS_AS(knn_scores(factors, {}), DataError);
  }
}

TEST_CASE("joint factorization training with no stored entries matches the plain model") {
  SequenceDataset ds = make_dataset(10, {{0, 1, 2, 3},
                                         {4, 5, 6, 7},
                                         {8, 9, 0, 1},
                                         {2, 4, 6, 8},
                                         {1, 3, 5, 7},
                                         {9, 7, 5, 3}});
  ModelConfig mc;
  mc.latent_dim = 4;
  mc.batch_size = 3;
  mc.max_epochs = 3;
  mc.learning_rate = 0.01;
  mc.dropout = 0.2;

  CofactorConfig cc;
  cc.model = mc;

  SparseMatrix empty_sppmi = SparseMatrix::from_triplets(10, {});
  ParamStore cof, plain;
  TrainResult rc = cofactor_train(ds, empty_sppmi, cc, 23, cof);
  TrainResult rp = train_gru4rec(ds, mc, 23, plain);

  CHECK(rc.batch_losses == rp.batch_losses);
  CHECK(rc.epoch_mean_loss == rp.epoch_mean_loss);
  CHECK(cof.value("cof.z_seq").data == plain.value("theta.0").data);
  for (const char* gate : {"c", "r", "h"}) {
    CHECK(cof.value(std::string("cof.gru.W.") + gate).data ==
          plain.value(std::string("gru.W.") + gate).data);
    CHECK(cof.value(std::string("cof.gru.U.") + gate).data ==
          plain.value(std::string("gru.U.") + gate).data);
  }

  // The context table receives no gradient, so it stays at its own init draws.
  DenseTensor z_con = DenseTensor::zeros({10, 4});
  Rng con_rng(derive_seed(23, "init.context"));
  for (double& v : z_con.data) v = con_rng.uniform_range(-0.1, 0.1);
  CHECK(cof.value("cof.z_con").data == z_con.data);
}

TEST_CASE("association reconstruction matches hand-worked values") {
  SparseMatrix sppmi =
      SparseMatrix::from_triplets(2, {{0, 1, 2.0}, {1, 0, 2.0}});
  Tape tape;
  Tape::ValueRef z_con = tape.leaf(DenseTensor::from_rows(2, 2, {1.0, 0.0, 0.0, 1.0}));
  Tape::ValueRef z_seq = tape.leaf(DenseTensor::from_rows(2, 2, {1.0, 1.0, 2.0, 0.0}));
  // entry (0,1): (2 - row0(con).row1(seq))^2 = (2 - 2)^2 = 0
  // entry (1,0): (2 - row1(con).row0(seq))^2 = (2 - 1)^2 = 1
  Tape::ValueRef loss = association_reconstruction_loss(tape, z_con, z_seq, sppmi);
  CHECK(tape.value(loss).data[0] == doctest::Approx(1.0).epsilon(1e-15));

  SUBCASE("zeroed context reduces to the squared entry sum") {
    Tape t2;
    Tape::ValueRef zero_con = t2.leaf(DenseTensor::zeros({2, 2}));
    Rng rng(2);
    Tape::ValueRef any_seq = t2.leaf(random_tensor(2, 2, rng));
    Tape::ValueRef l = association_reconstruction_loss(t2, zero_con, any_seq, sppmi);
    CHECK(t2.value(l).data[0] == doctest::Approx(8.0).epsilon(1e-15));  // 2^2 + 2^2
  }

  SUBCASE("gradients pass a finite-difference check") {
    ParamStore params;
    params.create("cof.z_con", {4, 3});
    params.create("cof.z_seq", {4, 3});
    Rng rng(13);
    params.init_uniform(-0.6, 0.6, rng);
    SparseMatrix s = SparseMatrix::from_triplets(
        4, {{0, 1, 1.5}, {1, 0, 1.5}, {2, 3, 0.25}, {3, 2, 0.25}, {0, 3, 2.0}, {3, 0, 2.0}});
    LossBuilder build = [&](Tape& t, const std::map<std::string, Tape::ValueRef>& leaves) {
      return association_reconstruction_loss(t, leaves.at("cof.z_con"),
                                             leaves.at("cof.z_seq"), s);
    };
    GradCheckResult res = gradient_check(build, params, 1e-5, 24, 8);
    CHECK(res.max_rel_error < 1e-7);
  }

  SparseMatrix empty = SparseMatrix::from_triplets(2, {});
  Tape t3;
  Tape::ValueRef a = t3.leaf(DenseTensor::zeros({2, 2}));
  CHECK_THROWS_AS(association_reconstruction_loss(t3, a, a, empty), DataError);
}

TEST_CASE("joint factorization training reduces the combined loss") {
  // Two item clusters that never mix, so within-cluster associations are
  // stronger than independence and survive the shifted-PMI cutoff.
  SequenceDataset ds = make_dataset(6, {{0, 1, 2, 0, 1}, {1, 2, 0, 2, 1},
                                        {2, 0, 1, 0, 2}, {3, 4, 5, 3, 4},
                                        {4, 5, 3, 5, 4}, {5, 3, 4, 3, 5}});
  SparseMatrix sppmi = build_sppmi(count_cooccurrence(ds), 1.0);
  REQUIRE(sppmi.nnz() > 0);

  CofactorConfig cc;
  cc.model.latent_dim = 4;
  cc.model.batch_size = 3;
  cc.model.max_epochs = 10;
  cc.model.learning_rate = 0.01;
  cc.model.dropout = 0.0;

  ParamStore params;
  TrainResult res = cofactor_train(ds, sppmi, cc, 31, params);
  CHECK(res.epoch_mean_loss.back() < res.epoch_mean_loss.front());
  for (double v : res.epoch_mean_loss) CHECK(std::isfinite(v));
}

TEST_CASE("link sampling avoids edges, self-loops, and duplicates") {
  // Path graph 0-1-2-3-4 inside 8 nodes.
  std::vector<SparseMatrix::Entry> tri;
  for (std::size_t i = 0; i + 1 < 5; ++i) {
    tri.push_back({i, i + 1, 1.0});
    tri.push_back({i + 1, i, 1.0});
  }
  SparseMatrix adj = SparseMatrix::from_triplets(8, tri);
  std::set<std::pair<std::size_t, std::size_t>> edge_set;
  for (const SparseMatrix::Entry& e : adj.entries()) {
    if (e.row < e.col) edge_set.insert({e.row, e.col});
  }

  SUBCASE("sparse sampling path") {
    Rng rng(101);
    std::vector<std::pair<std::size_t, std::size_t>> links = sample_non_edges(adj, 10, rng);
    CHECK(links.size() == 10);
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (const auto& [i, j] : links) {
      CHECK(i < j);
      CHECK(j < 8);
      CHECK(edge_set.count({i, j}) == 0);
      CHECK(seen.insert({i, j}).second);
    }
  }

  SUBCASE("request beyond the complement is capped") {
    Rng rng(7);
    // 8 nodes -> 28 pairs, 4 edges -> 24 non-edges available.
    std::vector<std::pair<std::size_t, std::size_t>> links = sample_non_edges(adj, 1000, rng);
    CHECK(links.size() == 24);
    for (const auto& [i, j] : links) CHECK(edge_set.count({i, j}) == 0);
  }

  SUBCASE("same stream reproduces the sample") {
    Rng a(55), b(55);
    CHECK(sample_non_edges(adj, 12, a) == sample_non_edges(adj, 12, b));
  }
}

TEST_CASE("link reconstruction loss matches closed-form values") {
  Tape tape;
  // Two identical unit vectors: the edge score is 1, so the edge term is
  // -log sigmoid(1).
  Tape::ValueRef z = tape.leaf(DenseTensor::from_rows(2, 2, {1.0, 0.0, 1.0, 0.0}));
  Tape::ValueRef loss = link_bce_loss(tape, z, {{0, 1}}, {});
  CHECK(tape.value(loss).data[0] == doctest::Approx(0.31326168751822286).epsilon(1e-15));

  SUBCASE("a non-edge with the same geometry pays the complementary price") {
    Tape t2;
    Tape::ValueRef z2 = t2.leaf(DenseTensor::from_rows(3, 2, {1.0, 0.0, 1.0, 0.0, 0.0, 0.0}));
    Tape::ValueRef l = link_bce_loss(t2, z2, {{0, 2}}, {{0, 1}});
    // edge (0,2): score 0 -> ln 2; non-edge (0,1): score 1 -> -log(1-sigmoid(1))
    double want = std::log(2.0) + 1.3132616875182228;
    CHECK(t2.value(l).data[0] == doctest::Approx(want).epsilon(1e-14));
  }

  SUBCASE("gradients pass a finite-difference check") {
    ParamStore params;
    params.create("gae.z", {5, 3});
    Rng rng(19);
    params.init_uniform(-0.7, 0.7, rng);
    std::vector<std::pair<std::size_t, std::size_t>> edges = {{0, 1}, {1, 2}, {3, 4}};
    std::vector<std::pair<std::size_t, std::size_t>> non = {{0, 4}, {2, 3}};
    LossBuilder build = [&](Tape& t, const std::map<std::string, Tape::ValueRef>& leaves) {
      return link_bce_loss(t, leaves.at("gae.z"), edges, non);
    };
    GradCheckResult res = gradient_check(build, params, 1e-5, 15, 3);
    CHECK(res.max_rel_error < 1e-7);
  }

  Tape t3;
  Tape::ValueRef z3 = t3.leaf(DenseTensor::zeros({2, 2}));
  CHECK_THROWS_AS(link_bce_loss(t3, z3, {}, {{0, 1}}), DataError);
}

TEST_CASE("autoencoder-regularized training runs and reduces the combined loss") {
  SequenceDataset ds = make_dataset(6, {{0, 1, 2, 0, 1}, {2, 3, 4, 2, 3},
                                        {4, 5, 0, 4, 5}, {1, 2, 3, 1, 2},
                                        {3, 4, 5, 3, 4}, {5, 0, 1, 5, 0}});
  SparseMatrix adj = build_adjacency(count_cooccurrence(ds), 2);
  REQUIRE(adj.nnz() > 0);
  ChebyshevBasis basis = chebyshev_from_adjacency(adj, 2);

  GraphAeConfig gc;
  gc.model.latent_dim = 4;
  gc.model.batch_size = 3;
  gc.model.max_epochs = 10;
  gc.model.learning_rate = 0.01;
  gc.model.dropout = 0.0;
  gc.neg_multiplier = 2;

  ParamStore params;
  TrainResult res = graphae_train(ds, basis, adj, gc, 47, params);
  CHECK(res.epoch_mean_loss.back() < res.epoch_mean_loss.front());
  for (double v : res.epoch_mean_loss) CHECK(std::isfinite(v));
  CHECK(params.value("gae.z_seq").all_finite());
  CHECK(params.value("gae.theta.0").all_finite());

  SUBCASE("an edgeless graph is rejected") {
    SparseMatrix empty_adj = SparseMatrix::from_triplets(6, {});
    ChebyshevBasis id_basis;
    id_basis.terms.push_back(SparseMatrix::identity(6));
    ParamStore p2;
    CHECK_THROWS_AS(graphae_train(ds, id_basis, empty_adj, gc, 1, p2), DataError);
  }

  SUBCASE("a zero negative multiplier is rejected") {
    GraphAeConfig bad = gc;
    bad.neg_multiplier = 0;
    ParamStore p3;
    CHECK_THROWS_AS(graphae_train(ds, basis, adj, bad, 1, p3), DataError);
  }
}

TEST_CASE("the profile predictor scores by mean-of-history dot products") {
  Rng rng(61);
  DenseTensor factors = random_tensor(6, 3, rng);
  BprPredictor pred(factors);
  CHECK(pred.n_items() == 6);
  CHECK_THROWS_AS(pred.scores(), DataError);

  pred.observe(1);
  pred.observe(4);
  const std::vector<double>& s = pred.scores();
  for (std::size_t i = 0; i < 6; ++i) {
    double want = 0.0;
    for (std::size_t j = 0; j < 3; ++j) {
      want += 0.5 * (factors.at(1, j) + factors.at(4, j)) * factors.at(i, j);
    }
    CHECK(s[i] == doctest::Approx(want).epsilon(1e-12));
  }

  pred.reset();
  pred.observe(2);
  const std::vector<double>& s2 = pred.scores();
  for (std::size_t i = 0; i < 6; ++i) {
    double want = 0.0;
    for (std::size_t j = 0; j < 3; ++j) want += factors.at(2, j) * factors.at(i, j);
    CHECK(s2[i] == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("the cosine predictor mirrors the free scoring function") {
  Rng rng(67);
  DenseTensor factors = random_tensor(7, 4, rng);
  BprKnnPredictor pred(factors);
  pred.observe(3);
  pred.observe(6);
  CHECK(pred.scores() == knn_scores(factors, {3, 6}));

  BprKnnPredictor mean_pred(factors, true);
  mean_pred.observe(3);
  mean_pred.observe(6);
  CHECK(mean_pred.scores() == knn_scores(factors, {3, 6}, true));
  CHECK(pred.scores() != mean_pred.scores());
}

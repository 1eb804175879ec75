#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <algorithm>
#include <functional>
#include <random>

#include "bwexp/policy_net.hpp"

using namespace bwexp;

namespace {

NetConfig tiny_config(std::uint64_t seed = 3) {
  NetConfig c;
  c.d = 8;
  c.encoder_layers = 2;
  c.seed = seed;
  return c;
}

// Six vertices on a 3 x 2 lattice with random features and a random symmetric
// edge set that always links vertex 0 (the current one) to vertex 1.
InformativeGraph random_graph(std::mt19937_64& rng, int n = 6) {
  InformativeGraph g;
  g.extent_x_m = 12.0;
  g.extent_y_m = 8.0;
  for (int i = 0; i < n; ++i) {
    Vertex v;
    v.coords = {2.0 + 4.0 * (i % 3), 2.0 + 4.0 * (i / 3)};
    v.utility = static_cast<int>(rng() % 40);
    v.guidepost = static_cast<int>(rng() % 2);
    v.occupancy = i == 0 ? -1 : static_cast<int>(rng() % 2);
    g.vertices.push_back(v);
  }
  g.adjacency.assign(n, {});
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if ((i == 0 && j == 1) || rng() % 2 == 0) {
        g.adjacency[i].push_back(j);
        g.adjacency[j].push_back(i);
      }
  g.current_index = 0;
  return g;
}

// Relative error of the whole gradient vector against central differences.
double gradient_error(nn::ParameterStore& store, const std::function<Var(Tape&)>& loss, double eps = 1e-4) {
  store.zero_grad();
  {
    Tape t;
    t.backward(loss(t));
  }
  double diff = 0.0, norm_fd = 0.0, norm_an = 0.0;
  for (std::size_t p = 0; p < store.size(); ++p) {
    nn::Parameter& param = store[p];
    for (Eigen::Index i = 0; i < param.value.size(); ++i) {
      const double keep = param.value.data()[i];
      param.value.data()[i] = keep + eps;
      Tape tp;
      const double up = tp.scalar(loss(tp));
      param.value.data()[i] = keep - eps;
      Tape tm;
      const double down = tm.scalar(loss(tm));
      param.value.data()[i] = keep;
      const double fd = (up - down) / (2.0 * eps);
      const double an = param.grad.data()[i];
      diff += (fd - an) * (fd - an);
      norm_fd += fd * fd;
      norm_an += an * an;
    }
  }
  return std::sqrt(diff) / std::max(1e-12, std::max(std::sqrt(norm_fd), std::sqrt(norm_an)));
}

Vector log_probs_for(const PolicyNet& net, const std::vector<InformativeGraph>& graphs, int robot) {
  Tape t;
  std::vector<RobotEncoding> enc;
  for (const auto& g : graphs) enc.push_back(net.encode_robot(t, g));
  std::vector<Var> others;
  for (std::size_t j = 0; j < enc.size(); ++j)
    if (static_cast<int>(j) != robot) others.push_back(enc[j].message);
  return t.value(net.action_log_probs(t, enc[robot], others));
}

}  // namespace

TEST_CASE("policy gradients match finite differences") {
  std::mt19937_64 rng(21);
  PolicyNet net(tiny_config());
  // Batch of four two-robot decisions; the loss weights log-probabilities of fixed actions.
  std::vector<std::pair<InformativeGraph, InformativeGraph>> batch;
  for (int b = 0; b < 4; ++b) batch.emplace_back(random_graph(rng), random_graph(rng));
  auto loss = [&](Tape& t) {
    Var total = t.constant(Matrix::Zero(1, 1));
    for (const auto& [ga, gb] : batch) {
      const RobotEncoding a = net.encode_robot(t, ga);
      const RobotEncoding b = net.encode_robot(t, gb);
      const Var lp = net.action_log_probs(t, a, {b.message});
      const Var p = t.exp(lp);
      total = t.add(total, t.add(t.element(lp, 0, 0), t.sum(t.hadamard(p, lp))));
    }
    return total;
  };
  CHECK(gradient_error(net.params(), loss) < 1e-3);
}

TEST_CASE("critic gradients match finite differences") {
  std::mt19937_64 rng(22);
  CriticNet critic(tiny_config(4));
  std::vector<InformativeGraph> batch;
  for (int b = 0; b < 4; ++b) batch.push_back(random_graph(rng));
  auto loss = [&](Tape& t) {
    Var total = t.constant(Matrix::Zero(1, 1));
    for (const auto& g : batch) {
      const Var q = critic.q_values(t, g, g.navigable_neighbors(g.current_index));
      total = t.add(total, t.sum(t.hadamard(q, q)));
    }
    return total;
  };
  CHECK(gradient_error(critic.params(), loss) < 1e-3);
}

TEST_CASE("cooperation decoding ignores the order of other robots") {
  std::mt19937_64 rng(23);
  PolicyNet net(tiny_config());
  for (int trial = 0; trial < 20; ++trial) {
    const int others = 1 + static_cast<int>(rng() % 7);
    Tape t;
    std::normal_distribution<double> n(0.0, 1.0);
    auto random_vec = [&] {
      Matrix m(8, 1);
      for (int i = 0; i < 8; ++i) m(i, 0) = n(rng);
      return t.constant(m);
    };
    const Var own = random_vec();
    std::vector<Var> msgs;
    for (int k = 0; k < others; ++k) msgs.push_back(random_vec());
    const Matrix base = t.value(net.decode_cooperation(t, own, msgs));
    std::shuffle(msgs.begin(), msgs.end(), rng);
    const Matrix shuffled = t.value(net.decode_cooperation(t, own, msgs));
    CHECK((base - shuffled).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("one set of weights serves any team size") {
  std::mt19937_64 rng(24);
  PolicyNet net(tiny_config());
  for (int n = 1; n <= 8; ++n) {
    std::vector<InformativeGraph> graphs;
    for (int k = 0; k < n; ++k) graphs.push_back(random_graph(rng));
    for (int r = 0; r < n; ++r) {
      const Vector lp = log_probs_for(net, graphs, r);
      CHECK(lp.size() == static_cast<Eigen::Index>(graphs[r].navigable_neighbors(0).size()));
      CHECK(lp.array().exp().sum() == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(lp.maxCoeff() <= 1e-12);
    }
  }
}

TEST_CASE("logits are clipped") {
  std::mt19937_64 rng(25);
  NetConfig c = tiny_config();
  c.logit_clip = 1.0;
  PolicyNet net(c);
  for (std::size_t i = 0; i < net.params().size(); ++i) net.params()[i].value *= 50.0;
  InformativeGraph g = random_graph(rng);
  for (int j = 1; j < g.size(); ++j)
    if (!g.has_edge(0, j)) {
      g.adjacency[0].push_back(j);
      g.adjacency[j].push_back(0);
    }
  for (auto& a : g.adjacency) std::sort(a.begin(), a.end());
  const Vector lp = log_probs_for(net, {g}, 0);
  // With logits in [-1, 1] no probability ratio can exceed e^2.
  CHECK(lp.maxCoeff() - lp.minCoeff() <= 2.0 + 1e-9);
}

TEST_CASE("checkpoint round trip restores the policy exactly") {
  std::mt19937_64 rng(26);
  PolicyNet a(tiny_config(5));
  PolicyNet b(tiny_config(6));
  CHECK_FALSE(a.params().values_equal(b.params()));
  Checkpoint ck;
  ck.config = a.config();
  ck.meta["note"] = "unit test";
  store_into(ck, "policy.", a.params());
  const std::string path = "test_policy_ckpt.bin";
  save_checkpoint(path, ck);
  const Checkpoint back = load_checkpoint(path);
  std::remove(path.c_str());
  CHECK(back.config.d == 8);
  CHECK(back.config.encoder_layers == 2);
  CHECK(back.meta.at("note") == "unit test");
  load_from(back, "policy.", b.params());
  CHECK(a.params().values_equal(b.params()));
  const std::vector<InformativeGraph> graphs{random_graph(rng), random_graph(rng)};
  CHECK(log_probs_for(a, graphs, 0) == log_probs_for(b, graphs, 0));

  PolicyNet wide([] {
    NetConfig c = tiny_config();
    c.d = 16;
    return c;
  }());
  CHECK_THROWS_AS(load_from(back, "policy.", wide.params()), Error);
  CHECK_THROWS_AS(load_checkpoint("no/such/file.bin"), Error);
}

TEST_CASE("action selection") {
  std::mt19937_64 rng(27);
  Vector lp(3);
  lp << std::log(0.2), std::log(0.5), std::log(0.3);
  CHECK(choose_action(lp, false, rng) == 1);
  std::vector<int> counts(3, 0);
  const int draws = 20000;
  for (int k = 0; k < draws; ++k) ++counts[choose_action(lp, true, rng)];
  CHECK(std::abs(counts[0] / double(draws) - 0.2) < 0.015);
  CHECK(std::abs(counts[1] / double(draws) - 0.5) < 0.015);
  CHECK(std::abs(counts[2] / double(draws) - 0.3) < 0.015);
  CHECK_THROWS_AS(choose_action(Vector(0), true, rng), Error);
}

TEST_CASE("raw vertex inputs are normalised features") {
  std::mt19937_64 rng(28);
  const InformativeGraph g = random_graph(rng);
  const Matrix x = raw_vertex_inputs(g, 30.0);
  REQUIRE(x.rows() == 5);
  REQUIRE(x.cols() == g.size());
  for (int i = 0; i < g.size(); ++i) {
    CHECK(x(0, i) == doctest::Approx(g.vertices[i].coords.x / 12.0));
    CHECK(x(1, i) == doctest::Approx(g.vertices[i].coords.y / 8.0));
    CHECK(x(2, i) == doctest::Approx(g.vertices[i].utility / 30.0));
    CHECK(x(3, i) == g.vertices[i].guidepost);
    CHECK(x(4, i) == g.vertices[i].occupancy);
  }
  NetConfig bad = tiny_config();
  bad.encoder_layers = 0;
  CHECK_THROWS_AS(PolicyNet{bad}, Error);
}

#include "startrek/graphgen.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <functional>
#include <numeric>
#include <random>

#include "startrek/rng.hpp"

#include <nlohmann/json.hpp>

namespace startrek::graphgen {

GraphKind parse_kind(const std::string& name) {
  if (name == "hub") return GraphKind::hub;
  if (name == "random") return GraphKind::random_er;
  if (name == "scalefree" || name == "scale-free") return GraphKind::scalefree;
  if (name == "knn") return GraphKind::knn;
  throw InvalidInput("unknown graph kind: " + name);
}

std::string kind_name(GraphKind kind) {
  switch (kind) {
    case GraphKind::hub: return "hub";
    case GraphKind::random_er: return "random";
    case GraphKind::scalefree: return "scalefree";
    case GraphKind::knn: return "knn";
  }
  return "?";
}

namespace {

void add_edge(Eigen::MatrixXi& adj, int a, int b) {
  if (a == b) return;
  adj(a, b) = 1;
  adj(b, a) = 1;
}

// group: node ids in a fixed (already randomized) order
void build_group(Eigen::MatrixXi& adj, const std::vector<int>& group, GraphKind kind,
                 const GraphParams& params, std::mt19937_64& eng) {
  const int g = static_cast<int>(group.size());
  if (g < 2) return;
  switch (kind) {
    case GraphKind::hub: {
      int hub = group[std::uniform_int_distribution<int>(0, g - 1)(eng)];
      for (int node : group)
        if (node != hub) add_edge(adj, hub, node);
      break;
    }
    case GraphKind::random_er: {
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      for (int a = 0; a < g; ++a)
        for (int b = a + 1; b < g; ++b)
          if (unif(eng) < params.connect_prob) add_edge(adj, group[a], group[b]);
      break;
    }
    case GraphKind::scalefree: {
      // Barabasi-Albert with one edge per new node on a 2-node seed, then one
      // extra random edge so the edge count matches the node count.
      std::vector<int> degree(g, 0);
      add_edge(adj, group[0], group[1]);
      degree[0] = degree[1] = 1;
      int total_degree = 2;
      for (int t = 2; t < g; ++t) {
        int pick = std::uniform_int_distribution<int>(0, total_degree - 1)(eng);
        int target = 0;
        for (int a = 0; a < t; ++a) {
          pick -= degree[a];
          if (pick < 0) {
            target = a;
            break;
          }
        }
        add_edge(adj, group[t], group[target]);
        ++degree[t];
        ++degree[target];
        total_degree += 2;
      }
      std::vector<std::pair<int, int>> non_edges;
      for (int a = 0; a < g; ++a)
        for (int b = a + 1; b < g; ++b)
          if (adj(group[a], group[b]) == 0) non_edges.emplace_back(group[a], group[b]);
      if (!non_edges.empty()) {
        auto& e = non_edges[std::uniform_int_distribution<std::size_t>(0, non_edges.size() - 1)(
            eng)];
        add_edge(adj, e.first, e.second);
      }
      break;
    }
    case GraphKind::knn: {
      std::discrete_distribution<int> kdist({0.4, 0.3, 0.2, 0.1});
      int k = kdist(eng) + 1;
      // circular arrangement; each node takes its k nearest in ring distance
      int max_offset = (k + 1) / 2;
      max_offset = std::min(max_offset, (g - 1) / 2 == 0 ? 1 : (g - 1) / 2);
      for (int a = 0; a < g; ++a)
        for (int o = 1; o <= max_offset; ++o) add_edge(adj, group[a], group[(a + o) % g]);
      break;
    }
  }
}

}  // namespace

Matrix precision_from_adjacency(const Eigen::MatrixXi& adjacency, double v, double u) {
  const Eigen::Index d = adjacency.rows();
  Matrix vA = v * adjacency.cast<double>();
  Eigen::SelfAdjointEigenSolver<Matrix> es(vA);
  double lmin = es.eigenvalues().minCoeff();
  Matrix theta = vA + (std::abs(lmin) + u) * Matrix::Identity(d, d);
  Eigen::LLT<Matrix> llt(theta);
  if (llt.info() != Eigen::Success)
    throw InvalidInput("precision construction failed PD check");
  return theta;
}

GraphModel generate_graph(GraphKind kind, int d, int p_groups, const GraphParams& params,
                          std::uint64_t seed) {
  if (d < 1 || p_groups < 1 || d < p_groups)
    throw InvalidInput("generate_graph: need d >= p_groups >= 1");

  std::vector<int> perm(d);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 part_eng(mix_seed(seed, 0xa11c));
  std::shuffle(perm.begin(), perm.end(), part_eng);

  // near-equal split of the shuffled nodes
  std::vector<std::vector<int>> groups(p_groups);
  for (int i = 0; i < d; ++i) groups[i % p_groups].push_back(perm[i]);

  if (kind == GraphKind::scalefree)
    for (const auto& g : groups)
      if (g.size() < 2) throw InvalidInput("generate_graph: scale-free group needs >= 2 nodes");

  GraphModel model;
  model.adjacency = Eigen::MatrixXi::Zero(d, d);
  model.group_of.resize(d);
  model.n_groups = p_groups;
  model.kind = kind;
  model.params = params;
  model.seed = seed;

  for (int g = 0; g < p_groups; ++g) {
    for (int node : groups[g]) model.group_of[node] = g;
    std::mt19937_64 eng(mix_seed(seed, 1000 + g));
    build_group(model.adjacency, groups[g], kind, params, eng);
  }

  model.precision = precision_from_adjacency(model.adjacency, params.v, params.u);
  return model;
}

int connected_components(const Eigen::MatrixXi& adjacency) {
  const int d = static_cast<int>(adjacency.rows());
  std::vector<int> parent(d);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (int a = 0; a < d; ++a)
    for (int b = a + 1; b < d; ++b)
      if (adjacency(a, b)) {
        int ra = find(a), rb = find(b);
        if (ra != rb) parent[ra] = rb;
      }
  int count = 0;
  for (int a = 0; a < d; ++a)
    if (find(a) == a) ++count;
  return count;
}

long long count_s(const Eigen::MatrixXi& adjacency, int k_tau) {
  const int d = static_cast<int>(adjacency.rows());
  std::vector<int> degree(d, 0);
  for (int a = 0; a < d; ++a) degree[a] = adjacency.row(a).sum();

  // For a null pair (j1, j2) with Theta_{j1 j2} = 0, valid (k1, k2) are
  // k1 in N2\N1 and k2 in N1\N2, where N includes the node itself (diagonal
  // counted as nonzero). The two sets are disjoint so k1 != k2 is automatic.
  long long total = 0;
  for (int j1 = 0; j1 < d; ++j1) {
    if (degree[j1] >= k_tau) continue;
    for (int j2 = j1 + 1; j2 < d; ++j2) {
      if (degree[j2] >= k_tau) continue;
      if (adjacency(j1, j2)) continue;
      long long only1 = 0, only2 = 0;
      for (int k = 0; k < d; ++k) {
        bool in1 = adjacency(j1, k) || k == j1;
        bool in2 = adjacency(j2, k) || k == j2;
        if (in1 && !in2) ++only1;
        if (in2 && !in1) ++only2;
      }
      total += only1 * only2;
    }
  }
  return total;
}

GroundTruth ground_truth(const GraphModel& model, int k_tau) {
  const int d = model.d();
  GroundTruth gt;
  gt.degrees.resize(d);
  for (int a = 0; a < d; ++a) {
    gt.degrees[a] = model.adjacency.row(a).sum();
    if (gt.degrees[a] < k_tau)
      gt.h0.push_back(a);
    else
      gt.hubs.push_back(a);
  }
  gt.d0 = static_cast<int>(gt.h0.size());
  gt.s_count = count_s(model.adjacency, k_tau);
  gt.components = connected_components(model.adjacency);
  return gt;
}

std::string graph_to_json(const GraphModel& model) {
  nlohmann::json j;
  j["kind"] = kind_name(model.kind);
  j["d"] = model.d();
  j["n_groups"] = model.n_groups;
  j["seed"] = model.seed;
  j["params"] = {{"v", model.params.v},
                 {"u", model.params.u},
                 {"connect_prob", model.params.connect_prob}};
  j["group_of"] = model.group_of;
  nlohmann::json edges = nlohmann::json::array();
  for (int a = 0; a < model.d(); ++a)
    for (int b = a + 1; b < model.d(); ++b)
      if (model.adjacency(a, b)) edges.push_back({a, b});
  j["edges"] = edges;
  return j.dump(2);
}

}  // namespace startrek::graphgen

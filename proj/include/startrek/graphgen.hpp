#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "startrek/types.hpp"

namespace startrek::graphgen {

enum class GraphKind { hub, random_er, scalefree, knn };

GraphKind parse_kind(const std::string& name);
std::string kind_name(GraphKind kind);

struct GraphParams {
  double v = 0.4;            // off-diagonal precision magnitude
  double u = 0.1;            // diagonal eigenvalue margin
  double connect_prob = 0.15;  // Erdos-Renyi edge probability
};

struct GraphModel {
  Eigen::MatrixXi adjacency;  // d x d, symmetric 0/1, zero diagonal
  Matrix precision;           // v*A + (|lambda_min(v*A)| + u) * I
  std::vector<int> group_of;  // group index per node
  int n_groups = 0;
  GraphKind kind = GraphKind::hub;
  GraphParams params;
  std::uint64_t seed = 0;

  int d() const { return static_cast<int>(adjacency.rows()); }
};

struct GroundTruth {
  std::vector<int> degrees;
  std::vector<int> h0;    // null nodes: degree < k_tau
  std::vector<int> hubs;
  int d0 = 0;
  long long s_count = 0;  // dependence statistic |S|
  int components = 0;
};

GraphModel generate_graph(GraphKind kind, int d, int p_groups, const GraphParams& params,
                          std::uint64_t seed);

GroundTruth ground_truth(const GraphModel& model, int k_tau);

// |S| directly from an adjacency matrix (diagonal treated as nonzero);
// null set is {j : degree < k_tau}.
long long count_s(const Eigen::MatrixXi& adjacency, int k_tau);

int connected_components(const Eigen::MatrixXi& adjacency);

Matrix precision_from_adjacency(const Eigen::MatrixXi& adjacency, double v, double u);

std::string graph_to_json(const GraphModel& model);

}  // namespace startrek::graphgen

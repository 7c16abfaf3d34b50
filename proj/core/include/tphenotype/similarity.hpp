#pragma once

#include <string>
#include <vector>

#include "tphenotype/predictor.hpp"

namespace tphenotype {

/// Symmetric path-based distance matrix (zero diagonal, entries in [0, ln 2]).
struct DistanceMatrix {
  int n = 0;
  int steps = 0;
  std::vector<double> s;  // row-major n*n

  double at(int i, int j) const { return s[static_cast<std::size_t>(i * n + j)]; }
  double& at(int i, int j) { return s[static_cast<std::size_t>(i * n + j)]; }

  void save_csv(const std::string& path) const;
};

/// Maximum JS distance between predictions along the straight latent segment
/// from z1 to z2 and the endpoint predictions, sampled at `steps` uniform
/// interpolation points including both endpoints. Not a metric (no triangle
/// inequality is claimed); symmetric because the grid is endpoint-symmetric.
double path_distance(const Predictor& predictor, const std::vector<double>& z1,
                     const std::vector<double>& z2, int steps = 25);

/// All pairwise path distances.
DistanceMatrix distance_matrix(const Predictor& predictor,
                               const std::vector<std::vector<double>>& latents, int steps = 25);

/// Threshold graph over samples: edge (i,j) iff S_ij <= delta. Exposes
/// connected components for the reachability tests.
struct SimilarityGraph {
  int n = 0;
  double delta = 0.0;
  std::vector<std::vector<int>> adj;
  std::vector<int> component;
  int n_components = 0;

  bool reachable(int i, int j) const { return component[static_cast<std::size_t>(i)] == component[static_cast<std::size_t>(j)]; }
  std::size_t edge_count() const;
  void save_edge_list(const std::string& path) const;
};

SimilarityGraph build_graph(const DistanceMatrix& s, double delta);

}  // namespace tphenotype

#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "tphenotype/predictor.hpp"
#include "tphenotype/rng.hpp"
#include "tphenotype/similarity.hpp"

namespace tphenotype {

struct ClusterConfig {
  int k = 3;
  int max_iter = 1000;
  int patience = 5;
  double tol = 1e-7;
};

/// A K-clustering in label-distribution space: per-sample assignments, the
/// centroid (mean prediction) and representative sample of each cluster, the
/// final graph threshold and objective, plus the indices that had to be
/// assigned by the unreachable fallback (empty on well-posed instances).
struct Clustering {
  std::vector<int> assignments;
  std::vector<LabelDistribution> centroids;
  std::vector<int> seeds;  // representative sample per cluster
  double delta = 0.0;
  double objective = 0.0;
  std::vector<int> fallback;

  void save(const std::string& path) const;
  static Clustering load(const std::string& path);
};

/// sum_k sum_{X in C_k} d_y(f(X), v_k).
double cluster_objective(const std::vector<LabelDistribution>& preds,
                         const std::vector<int>& assignments,
                         const std::vector<LabelDistribution>& centroids);

/// Member-mean centroids; clusters must be nonempty.
std::vector<LabelDistribution> member_mean_centroids(const std::vector<LabelDistribution>& preds,
                                                     const std::vector<int>& assignments, int k);

/// J_bar(S) = sum_k sum_{i,j in C_k} S_ij over ordered pairs.
double pairwise_objective(const DistanceMatrix& s, const std::vector<int>& assignments);

/// Greedy K-partition minimising J_bar(S): seeds by farthest-point traversal
/// starting from the pair attaining max S_ij, remaining points assigned in
/// random order to the cluster with the smallest J_bar increase (ties to the
/// lowest cluster index).
std::vector<int> warm_start(const DistanceMatrix& s, int k, Rng& rng);

/// One graph-constrained K-means round (seeded cluster expansion): clusters
/// start at their seed samples; every sample reachable in the graph from some
/// cluster joins the reachable cluster with the nearest centroid; centroids
/// refresh to member means when no assignable sample remains. Samples
/// unreachable from every cluster are assigned to the globally nearest
/// centroid and reported in `fallback`.
struct GkMeansResult {
  std::vector<int> assignments;
  std::vector<LabelDistribution> centroids;
  std::vector<int> fallback;
};
GkMeansResult gk_means(const std::vector<LabelDistribution>& preds,
                       const std::vector<LabelDistribution>& seed_centroids,
                       const std::vector<int>& seed_samples, const SimilarityGraph& graph);

/// Full outer loop: warm start, then alternate seed refresh, threshold
/// shrinking, graph rebuild and gk_means until the objective stops improving
/// (`patience` rounds within `tol`) or `max_iter` rounds elapse. Returns the
/// best-objective clustering seen plus the iteration trace.
struct TPhenotypeTrace {
  Clustering best;
  std::vector<double> objective_history;
  std::vector<double> delta_history;
  std::vector<int> warm_assignments;
  double warm_objective_final_centroids = 0.0;
  int iterations = 0;
  int repair_events = 0;
};
TPhenotypeTrace tphenotype_cluster(const std::vector<LabelDistribution>& preds,
                                   const DistanceMatrix& s, const ClusterConfig& config,
                                   Rng& rng);

/// Plain K-means over latent vectors (K-means++ seeding, Lloyd iterations,
/// best inertia over `restarts`).
struct KMeansResult {
  std::vector<int> assignments;
  std::vector<std::vector<double>> centroids;
  double inertia = 0.0;
};
KMeansResult kmeans_latent(const std::vector<std::vector<double>>& latents, int k, Rng& rng,
                           int restarts = 10, int max_iter = 100);

/// Pick the candidate with the highest evaluator score (mean composite metric
/// over folds); ties go to the smaller K.
int select_k(const std::vector<int>& candidates, const std::function<double(int)>& score);

}  // namespace tphenotype

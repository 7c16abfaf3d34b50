#pragma once

#include <utility>
#include <vector>

namespace tphenotype::metrics {

/// (1/N) * sum_k max_c |C_k intersect class_c|.
double purity(const std::vector<int>& pred, const std::vector<int>& truth);

/// Pair-counting adjusted Rand index in [-1, 1].
double adjusted_rand(const std::vector<int>& pred, const std::vector<int>& truth);

/// I(pred;truth) / sqrt(H(pred) H(truth)), natural log; 0 when either entropy
/// vanishes and the partitions differ, 1 when identical.
double nmi(const std::vector<int>& pred, const std::vector<int>& truth);

struct RocPr {
  double auroc = 0.0;
  double auprc = 0.0;
};

/// One-vs-rest AUROC (trapezoid over the ROC curve) and AUPRC
/// (step-interpolated precision-recall), unweighted mean over the classes
/// present in the truth; classes without positives or negatives are skipped
/// with a warning.
RocPr auroc_auprc(const std::vector<std::vector<double>>& scores, const std::vector<int>& truth,
                  int dim_y);

/// m-nearest-neighbour Silhouette over squared Euclidean distances:
/// per sample a^m = mean squared distance to its m nearest same-cluster
/// neighbours, b^m = min over other clusters of the mean squared distance to
/// their m nearest members, s^m = |b^m - a^m| / max(a^m, b^m) (0/0 -> 0,
/// singleton-cluster samples contribute 0). Returns the sample mean.
double silhouette_m(const std::vector<std::vector<double>>& points,
                    const std::vector<int>& assignments, int m);

/// Per cluster, count the connected components of the union-symmetrised
/// directed m-nearest-neighbour graph restricted to the cluster; returns
/// (1/K) * sum_k 1/p_k.
double pattern_purity(const std::vector<std::vector<double>>& points,
                      const std::vector<int>& assignments, int m);

/// Area under the (P^m, (S^m+1)/2) curve for m = 1..M, trapezoid over
/// P-sorted points normalised by the P range; falls back to the mean
/// normalised Silhouette when all P^m coincide.
double ausil(const std::vector<std::vector<double>>& points, const std::vector<int>& assignments,
             int m_max);

/// The curve integrator behind ausil(), on explicit (P, normalised-S) points.
double ausil_from_curve(std::vector<std::pair<double, double>> curve);

/// Default AUSIL sweep depth: min(20, largest cluster size).
int default_ausil_m(const std::vector<int>& assignments);

/// Harmonic mean 2ab/(a+b); 0 when both are 0. Throws on negative input.
double h_score(double a, double b);

}  // namespace tphenotype::metrics

#include "tphenotype/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

namespace tphenotype::metrics {

namespace {

void check_lengths(const std::vector<int>& a, const std::vector<int>& b, const char* who) {
  if (a.size() != b.size())
    throw std::invalid_argument(std::string(who) + ": label vectors differ in length");
  if (a.empty()) throw std::invalid_argument(std::string(who) + ": empty label vectors");
}

// Contingency table between two labelings with compacted ids.
struct Contingency {
  std::vector<std::vector<long>> counts;  // pred x truth
  std::vector<long> row;                  // pred marginals
  std::vector<long> col;                  // truth marginals
  long total = 0;
};

Contingency contingency(const std::vector<int>& pred, const std::vector<int>& truth) {
  std::map<int, int> pid, tid;
  for (int p : pred) pid.emplace(p, 0);
  for (int t : truth) tid.emplace(t, 0);
  int next = 0;
  for (auto& kv : pid) kv.second = next++;
  next = 0;
  for (auto& kv : tid) kv.second = next++;

  Contingency c;
  c.counts.assign(pid.size(), std::vector<long>(tid.size(), 0));
  c.row.assign(pid.size(), 0);
  c.col.assign(tid.size(), 0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const int r = pid[pred[i]];
    const int s = tid[truth[i]];
    ++c.counts[static_cast<std::size_t>(r)][static_cast<std::size_t>(s)];
    ++c.row[static_cast<std::size_t>(r)];
    ++c.col[static_cast<std::size_t>(s)];
    ++c.total;
  }
  return c;
}

double choose2(long n) { return 0.5 * static_cast<double>(n) * static_cast<double>(n - 1); }

double entropy(const std::vector<long>& marginals, long total) {
  double h = 0.0;
  for (long m : marginals)
    if (m > 0) {
      const double p = static_cast<double>(m) / static_cast<double>(total);
      h -= p * std::log(p);
    }
  return h;
}

std::vector<std::vector<double>> sq_dist_matrix(const std::vector<std::vector<double>>& pts) {
  const std::size_t n = pts.size();
  std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < pts[i].size(); ++k) {
        const double diff = pts[i][k] - pts[j][k];
        acc += diff * diff;
      }
      d[i][j] = acc;
      d[j][i] = acc;
    }
  return d;
}

std::vector<std::vector<int>> cluster_members(const std::vector<int>& assignments) {
  int k = 0;
  for (int a : assignments) k = std::max(k, a + 1);
  std::vector<std::vector<int>> members(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < assignments.size(); ++i)
    members[static_cast<std::size_t>(assignments[i])].push_back(static_cast<int>(i));
  return members;
}

/// Indices of the m nearest candidates to `i` (ties by lower index),
/// excluding `i` itself.
std::vector<int> nearest_of(int i, const std::vector<int>& candidates,
                            const std::vector<std::vector<double>>& dist, int m) {
  std::vector<int> pool;
  pool.reserve(candidates.size());
  for (int c : candidates)
    if (c != i) pool.push_back(c);
  const std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(m), pool.size());
  std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(keep), pool.end(),
                    [&](int a, int b) {
                      const double da = dist[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)];
                      const double db = dist[static_cast<std::size_t>(i)][static_cast<std::size_t>(b)];
                      if (da != db) return da < db;
                      return a < b;
                    });
  pool.resize(keep);
  return pool;
}

}  // namespace

double purity(const std::vector<int>& pred, const std::vector<int>& truth) {
  check_lengths(pred, truth, "purity");
  const Contingency c = contingency(pred, truth);
  long hit = 0;
  for (const std::vector<long>& r : c.counts) hit += *std::max_element(r.begin(), r.end());
  return static_cast<double>(hit) / static_cast<double>(c.total);
}

double adjusted_rand(const std::vector<int>& pred, const std::vector<int>& truth) {
  check_lengths(pred, truth, "adjusted_rand");
  const Contingency c = contingency(pred, truth);
  double idx = 0.0;
  for (const std::vector<long>& r : c.counts)
    for (long v : r) idx += choose2(v);
  double sum_row = 0.0, sum_col = 0.0;
  for (long v : c.row) sum_row += choose2(v);
  for (long v : c.col) sum_col += choose2(v);
  const double expected = sum_row * sum_col / choose2(c.total);
  const double maximum = 0.5 * (sum_row + sum_col);
  const double denom = maximum - expected;
  if (denom == 0.0) return 1.0;  // both partitions trivial and identical in pair structure
  return (idx - expected) / denom;
}

double nmi(const std::vector<int>& pred, const std::vector<int>& truth) {
  check_lengths(pred, truth, "nmi");
  const Contingency c = contingency(pred, truth);
  const double hp = entropy(c.row, c.total);
  const double ht = entropy(c.col, c.total);
  if (hp == 0.0 || ht == 0.0) {
    // Degenerate partition(s): 1 iff the partitions are identical.
    const bool identical = hp == 0.0 && ht == 0.0;
    return identical ? 1.0 : 0.0;
  }
  double mi = 0.0;
  const double n = static_cast<double>(c.total);
  for (std::size_t r = 0; r < c.counts.size(); ++r)
    for (std::size_t s = 0; s < c.counts[r].size(); ++s) {
      const long v = c.counts[r][s];
      if (v <= 0) continue;
      const double pij = static_cast<double>(v) / n;
      mi += pij * std::log(pij * n * n /
                           (static_cast<double>(c.row[r]) * static_cast<double>(c.col[s])));
    }
  const double val = mi / std::sqrt(hp * ht);
  return std::min(1.0, std::max(0.0, val));
}

RocPr auroc_auprc(const std::vector<std::vector<double>>& scores, const std::vector<int>& truth,
                  int dim_y) {
  if (scores.size() != truth.size())
    throw std::invalid_argument("auroc_auprc: scores/labels length mismatch");
  const std::size_t n = truth.size();

  double roc_sum = 0.0, pr_sum = 0.0;
  int used = 0;
  for (int cls = 0; cls < dim_y; ++cls) {
    long pos = 0;
    for (int t : truth)
      if (t == cls) ++pos;
    const long neg = static_cast<long>(n) - pos;
    if (pos == 0 || neg == 0) {
      std::fprintf(stderr, "auroc_auprc: warning: class %d has no %s in truth; skipped\n", cls,
                   pos == 0 ? "positives" : "negatives");
      continue;
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (scores[a][static_cast<std::size_t>(cls)] != scores[b][static_cast<std::size_t>(cls)])
        return scores[a][static_cast<std::size_t>(cls)] > scores[b][static_cast<std::size_t>(cls)];
      return a < b;
    });

    double auroc = 0.0, ap = 0.0;
    long tp = 0, fp = 0;
    double prev_fpr = 0.0, prev_tpr = 0.0, prev_recall = 0.0;
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      long tp_g = 0, fp_g = 0;
      const double s0 = scores[order[i]][static_cast<std::size_t>(cls)];
      while (j < n && scores[order[j]][static_cast<std::size_t>(cls)] == s0) {
        if (truth[order[j]] == cls)
          ++tp_g;
        else
          ++fp_g;
        ++j;
      }
      tp += tp_g;
      fp += fp_g;
      const double tpr = static_cast<double>(tp) / static_cast<double>(pos);
      const double fpr = static_cast<double>(fp) / static_cast<double>(neg);
      auroc += (fpr - prev_fpr) * (tpr + prev_tpr) * 0.5;
      const double recall = tpr;
      const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
      ap += (recall - prev_recall) * precision;
      prev_fpr = fpr;
      prev_tpr = tpr;
      prev_recall = recall;
      i = j;
    }
    roc_sum += auroc;
    pr_sum += ap;
    ++used;
  }
  if (used == 0) throw std::runtime_error("auroc_auprc: no class usable");
  return {roc_sum / used, pr_sum / used};
}

double silhouette_m(const std::vector<std::vector<double>>& points,
                    const std::vector<int>& assignments, int m) {
  if (m < 1) throw std::invalid_argument("silhouette_m: m must be >= 1");
  if (points.size() != assignments.size())
    throw std::invalid_argument("silhouette_m: points/assignments length mismatch");
  const std::vector<std::vector<int>> members = cluster_members(assignments);
  if (members.size() < 2) throw std::invalid_argument("silhouette_m: need at least two clusters");

  const std::vector<std::vector<double>> dist = sq_dist_matrix(points);
  double acc = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const int own = assignments[i];
    const std::vector<int> same =
        nearest_of(static_cast<int>(i), members[static_cast<std::size_t>(own)], dist, m);
    if (same.empty()) continue;  // singleton contributes 0
    double a = 0.0;
    for (int j : same) a += dist[i][static_cast<std::size_t>(j)];
    a /= static_cast<double>(same.size());

    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < members.size(); ++c) {
      if (static_cast<int>(c) == own || members[c].empty()) continue;
      const std::vector<int> other = nearest_of(static_cast<int>(i), members[c], dist, m);
      double mean = 0.0;
      for (int j : other) mean += dist[i][static_cast<std::size_t>(j)];
      mean /= static_cast<double>(other.size());
      b = std::min(b, mean);
    }
    const double denom = std::max(a, b);
    acc += denom > 0.0 ? std::abs(b - a) / denom : 0.0;
  }
  return acc / static_cast<double>(points.size());
}

double pattern_purity(const std::vector<std::vector<double>>& points,
                      const std::vector<int>& assignments, int m) {
  if (m < 1) throw std::invalid_argument("pattern_purity: m must be >= 1");
  if (points.size() != assignments.size())
    throw std::invalid_argument("pattern_purity: points/assignments length mismatch");
  const std::vector<std::vector<int>> members = cluster_members(assignments);
  const std::vector<std::vector<double>> dist = sq_dist_matrix(points);

  double acc = 0.0;
  int k = 0;
  for (const std::vector<int>& cluster : members) {
    if (cluster.empty()) continue;
    ++k;
    // Union-symmetrised m-NN graph inside the cluster.
    std::map<int, int> local;
    for (std::size_t a = 0; a < cluster.size(); ++a) local[cluster[a]] = static_cast<int>(a);
    std::vector<std::vector<int>> adj(cluster.size());
    for (int i : cluster)
      for (int j : nearest_of(i, cluster, dist, m)) {
        adj[static_cast<std::size_t>(local[i])].push_back(local[j]);
        adj[static_cast<std::size_t>(local[j])].push_back(local[i]);
      }
    std::vector<char> seen(cluster.size(), 0);
    int comps = 0;
    std::vector<int> stack;
    for (std::size_t s = 0; s < cluster.size(); ++s) {
      if (seen[s]) continue;
      ++comps;
      stack.push_back(static_cast<int>(s));
      seen[s] = 1;
      while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        for (int v : adj[static_cast<std::size_t>(u)])
          if (!seen[static_cast<std::size_t>(v)]) {
            seen[static_cast<std::size_t>(v)] = 1;
            stack.push_back(v);
          }
      }
    }
    acc += 1.0 / static_cast<double>(comps);
  }
  return acc / static_cast<double>(k);
}

double ausil_from_curve(std::vector<std::pair<double, double>> curve) {
  if (curve.empty()) throw std::invalid_argument("ausil_from_curve: empty curve");
  std::stable_sort(curve.begin(), curve.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  const double span = curve.back().first - curve.front().first;
  if (span <= 0.0) {
    double mean = 0.0;
    for (const auto& pt : curve) mean += pt.second;
    return mean / static_cast<double>(curve.size());
  }
  double area = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i)
    area += (curve[i].first - curve[i - 1].first) * (curve[i].second + curve[i - 1].second) * 0.5;
  return area / span;
}

double ausil(const std::vector<std::vector<double>>& points, const std::vector<int>& assignments,
             int m_max) {
  if (m_max < 2) throw std::invalid_argument("ausil: M must be >= 2");
  std::vector<std::pair<double, double>> curve;  // (P^m, normalised S^m)
  curve.reserve(static_cast<std::size_t>(m_max));
  for (int m = 1; m <= m_max; ++m) {
    const double s = (silhouette_m(points, assignments, m) + 1.0) / 2.0;
    const double p = pattern_purity(points, assignments, m);
    curve.emplace_back(p, s);
  }
  return ausil_from_curve(std::move(curve));
}

int default_ausil_m(const std::vector<int>& assignments) {
  std::map<int, int> counts;
  for (int a : assignments) ++counts[a];
  int largest = 0;
  for (const auto& kv : counts) largest = std::max(largest, kv.second);
  return std::max(2, std::min(20, largest));
}

double h_score(double a, double b) {
  if (a < 0.0 || b < 0.0) throw std::invalid_argument("h_score: inputs must be nonnegative");
  if (a == 0.0 && b == 0.0) return 0.0;
  return 2.0 * a * b / (a + b);
}

}  // namespace tphenotype::metrics

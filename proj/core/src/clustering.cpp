#include "tphenotype/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

namespace tphenotype {

namespace {
constexpr double kLn2 = 0.6931471805599453;

int nearest_centroid(const LabelDistribution& p, const std::vector<LabelDistribution>& centroids,
                     const std::vector<int>* allowed = nullptr) {
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  const int k = static_cast<int>(centroids.size());
  for (int c = 0; c < k; ++c) {
    if (allowed && !(*allowed)[static_cast<std::size_t>(c)]) continue;
    const double d = js_distance(p, centroids[static_cast<std::size_t>(c)]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}
}  // namespace

double cluster_objective(const std::vector<LabelDistribution>& preds,
                         const std::vector<int>& assignments,
                         const std::vector<LabelDistribution>& centroids) {
  double j = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i)
    j += js_distance(preds[i], centroids[static_cast<std::size_t>(assignments[i])]);
  return j;
}

std::vector<LabelDistribution> member_mean_centroids(const std::vector<LabelDistribution>& preds,
                                                     const std::vector<int>& assignments, int k) {
  const std::size_t dim = preds.empty() ? 0 : preds[0].size();
  std::vector<LabelDistribution> centroids(static_cast<std::size_t>(k),
                                           LabelDistribution(dim, 0.0));
  std::vector<int> counts(static_cast<std::size_t>(k), 0);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const int c = assignments[i];
    ++counts[static_cast<std::size_t>(c)];
    for (std::size_t d = 0; d < dim; ++d) centroids[static_cast<std::size_t>(c)][d] += preds[i][d];
  }
  for (int c = 0; c < k; ++c) {
    if (counts[static_cast<std::size_t>(c)] == 0)
      throw std::logic_error("member_mean_centroids: empty cluster");
    for (double& v : centroids[static_cast<std::size_t>(c)])
      v /= counts[static_cast<std::size_t>(c)];
  }
  return centroids;
}

double pairwise_objective(const DistanceMatrix& s, const std::vector<int>& assignments) {
  double j = 0.0;
  const int n = s.n;
  for (int i = 0; i < n; ++i)
    for (int l = 0; l < n; ++l)
      if (assignments[static_cast<std::size_t>(i)] == assignments[static_cast<std::size_t>(l)])
        j += s.at(i, l);
  return j;
}

std::vector<int> warm_start(const DistanceMatrix& s, int k, Rng& rng) {
  const int n = s.n;
  if (k > n) throw std::invalid_argument("warm_start: K exceeds sample count");
  if (k < 1) throw std::invalid_argument("warm_start: K must be >= 1");

  // Farthest-point seed traversal from the pair attaining max S_ij.
  std::vector<int> seeds;
  {
    int bi = 0, bj = 1;
    double best = -1.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (s.at(i, j) > best) {
          best = s.at(i, j);
          bi = i;
          bj = j;
        }
    seeds.push_back(bi);
    if (k > 1) seeds.push_back(bj);
  }
  std::vector<char> is_seed(static_cast<std::size_t>(n), 0);
  for (int sd : seeds) is_seed[static_cast<std::size_t>(sd)] = 1;
  while (static_cast<int>(seeds.size()) < k) {
    int best_i = -1;
    double best_d = -1.0;
    for (int i = 0; i < n; ++i) {
      if (is_seed[static_cast<std::size_t>(i)]) continue;
      double d = std::numeric_limits<double>::infinity();
      for (int sd : seeds) d = std::min(d, s.at(i, sd));
      if (d > best_d) {
        best_d = d;
        best_i = i;
      }
    }
    seeds.push_back(best_i);
    is_seed[static_cast<std::size_t>(best_i)] = 1;
  }

  std::vector<int> assign(static_cast<std::size_t>(n), -1);
  for (int c = 0; c < k; ++c) assign[static_cast<std::size_t>(seeds[static_cast<std::size_t>(c)])] = c;

  // Row sums of S against current members; the J_bar increase of adding i to
  // cluster c is twice this sum (symmetric ordered pairs).
  std::vector<std::vector<double>> member_sum(static_cast<std::size_t>(k),
                                              std::vector<double>(static_cast<std::size_t>(n), 0.0));
  for (int c = 0; c < k; ++c)
    for (int i = 0; i < n; ++i)
      member_sum[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)] =
          s.at(i, seeds[static_cast<std::size_t>(c)]);

  std::vector<int> rest;
  for (int i = 0; i < n; ++i)
    if (assign[static_cast<std::size_t>(i)] < 0) rest.push_back(i);
  rng.shuffle(rest);

  for (int i : rest) {
    int best_c = 0;
    double best_inc = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
      const double inc = member_sum[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)];
      if (inc < best_inc) {
        best_inc = inc;
        best_c = c;
      }
    }
    assign[static_cast<std::size_t>(i)] = best_c;
    for (int j = 0; j < n; ++j)
      member_sum[static_cast<std::size_t>(best_c)][static_cast<std::size_t>(j)] += s.at(i, j);
  }
  return assign;
}

GkMeansResult gk_means(const std::vector<LabelDistribution>& preds,
                       const std::vector<LabelDistribution>& seed_centroids,
                       const std::vector<int>& seed_samples, const SimilarityGraph& graph) {
  const int n = static_cast<int>(preds.size());
  const int k = static_cast<int>(seed_samples.size());
  GkMeansResult res;
  res.assignments.assign(static_cast<std::size_t>(n), -1);
  res.centroids = seed_centroids;

  for (int c = 0; c < k; ++c)
    res.assignments[static_cast<std::size_t>(seed_samples[static_cast<std::size_t>(c)])] = c;

  // Reachability is component membership; clusters grow only inside the
  // components of their seeds, so the spans below are fixed for the run.
  std::vector<std::vector<char>> comp_has_cluster(
      static_cast<std::size_t>(graph.n_components), std::vector<char>(static_cast<std::size_t>(k), 0));
  for (int c = 0; c < k; ++c)
    comp_has_cluster[static_cast<std::size_t>(
        graph.component[static_cast<std::size_t>(seed_samples[static_cast<std::size_t>(c)])])]
                    [static_cast<std::size_t>(c)] = 1;

  bool progress = true;
  while (progress) {
    progress = false;
    for (int i = 0; i < n; ++i) {
      if (res.assignments[static_cast<std::size_t>(i)] >= 0) continue;
      const std::vector<char>& reach =
          comp_has_cluster[static_cast<std::size_t>(graph.component[static_cast<std::size_t>(i)])];
      int best = -1;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        if (!reach[static_cast<std::size_t>(c)]) continue;
        const double d = js_distance(preds[static_cast<std::size_t>(i)],
                                     res.centroids[static_cast<std::size_t>(c)]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (best >= 0) {
        res.assignments[static_cast<std::size_t>(i)] = best;
        progress = true;
      }
    }
    if (progress) {
      // Centroid refresh after each assignment sweep, over assigned members.
      const std::size_t dim = preds[0].size();
      std::vector<LabelDistribution> sums(static_cast<std::size_t>(k), LabelDistribution(dim, 0.0));
      std::vector<int> counts(static_cast<std::size_t>(k), 0);
      for (int i = 0; i < n; ++i) {
        const int c = res.assignments[static_cast<std::size_t>(i)];
        if (c < 0) continue;
        ++counts[static_cast<std::size_t>(c)];
        for (std::size_t d = 0; d < dim; ++d) sums[static_cast<std::size_t>(c)][d] += preds[static_cast<std::size_t>(i)][d];
      }
      for (int c = 0; c < k; ++c)
        if (counts[static_cast<std::size_t>(c)] > 0)
          for (std::size_t d = 0; d < dim; ++d)
            res.centroids[static_cast<std::size_t>(c)][d] =
                sums[static_cast<std::size_t>(c)][d] / counts[static_cast<std::size_t>(c)];
    }
  }

  // Unreachable samples: nearest centroid by pure distance, flagged.
  for (int i = 0; i < n; ++i)
    if (res.assignments[static_cast<std::size_t>(i)] < 0) {
      res.assignments[static_cast<std::size_t>(i)] =
          nearest_centroid(preds[static_cast<std::size_t>(i)], res.centroids);
      res.fallback.push_back(i);
    }

  res.centroids = member_mean_centroids(preds, res.assignments, k);
  return res;
}

TPhenotypeTrace tphenotype_cluster(const std::vector<LabelDistribution>& preds,
                                   const DistanceMatrix& s, const ClusterConfig& config,
                                   Rng& rng) {
  const int n = static_cast<int>(preds.size());
  const int k = config.k;
  if (k < 2) throw std::invalid_argument("tphenotype_cluster: K must be >= 2");
  if (k > n) throw std::invalid_argument("tphenotype_cluster: K exceeds sample count");

  TPhenotypeTrace trace;
  std::vector<int> assign = warm_start(s, k, rng);
  trace.warm_assignments = assign;

  double delta = kLn2;
  double best_j = std::numeric_limits<double>::infinity();
  int no_improve = 0;

  for (int iter = 0; iter < config.max_iter; ++iter) {
    // Empty-cluster repair: rehome the sample farthest (in d_y) from every
    // nonempty-cluster centroid.
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (int a : assign) ++counts[static_cast<std::size_t>(a)];
    for (int c = 0; c < k; ++c) {
      while (counts[static_cast<std::size_t>(c)] == 0) {
        ++trace.repair_events;
        const std::size_t dim = preds[0].size();
        std::vector<LabelDistribution> means(static_cast<std::size_t>(k),
                                             LabelDistribution(dim, 0.0));
        for (int i = 0; i < n; ++i)
          for (std::size_t d = 0; d < dim; ++d)
            means[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])][d] +=
                preds[static_cast<std::size_t>(i)][d];
        for (int c2 = 0; c2 < k; ++c2)
          if (counts[static_cast<std::size_t>(c2)] > 0)
            for (double& v : means[static_cast<std::size_t>(c2)])
              v /= counts[static_cast<std::size_t>(c2)];

        int worst = -1;
        double worst_d = -1.0;
        for (int i = 0; i < n; ++i) {
          const int a = assign[static_cast<std::size_t>(i)];
          if (counts[static_cast<std::size_t>(a)] < 2) continue;
          double dmin = std::numeric_limits<double>::infinity();
          for (int c2 = 0; c2 < k; ++c2)
            if (counts[static_cast<std::size_t>(c2)] > 0)
              dmin = std::min(dmin, js_distance(preds[static_cast<std::size_t>(i)],
                                                means[static_cast<std::size_t>(c2)]));
          if (dmin > worst_d) {
            worst_d = dmin;
            worst = i;
          }
        }
        if (worst < 0) throw std::logic_error("tphenotype_cluster: cannot repair empty cluster");
        --counts[static_cast<std::size_t>(assign[static_cast<std::size_t>(worst)])];
        assign[static_cast<std::size_t>(worst)] = c;
        ++counts[static_cast<std::size_t>(c)];
      }
    }

    const std::vector<LabelDistribution> centroids = member_mean_centroids(preds, assign, k);

    // Seeds (Eq. of representative members) and threshold shrink.
    std::vector<int> seeds(static_cast<std::size_t>(k), -1);
    std::vector<double> seed_d(static_cast<std::size_t>(k),
                               std::numeric_limits<double>::infinity());
    double worst_fit = 0.0;
    for (int i = 0; i < n; ++i) {
      const int c = assign[static_cast<std::size_t>(i)];
      const double d = js_distance(preds[static_cast<std::size_t>(i)],
                                   centroids[static_cast<std::size_t>(c)]);
      if (d < seed_d[static_cast<std::size_t>(c)]) {
        seed_d[static_cast<std::size_t>(c)] = d;
        seeds[static_cast<std::size_t>(c)] = i;
      }
      worst_fit = std::max(worst_fit, d);
    }
    delta = std::min(delta, 2.0 * worst_fit);
    trace.delta_history.push_back(delta);

    const SimilarityGraph graph = build_graph(s, delta);
    GkMeansResult round = gk_means(preds, centroids, seeds, graph);
    assign = round.assignments;

    const double j = cluster_objective(preds, assign, round.centroids);
    trace.objective_history.push_back(j);
    ++trace.iterations;

    if (j < best_j - config.tol) {
      best_j = j;
      no_improve = 0;
      trace.best.assignments = assign;
      trace.best.centroids = round.centroids;
      trace.best.delta = delta;
      trace.best.objective = j;
      trace.best.fallback = round.fallback;
    } else {
      ++no_improve;
    }
    if (no_improve >= config.patience) break;
  }

  // Representative members of the returned clustering.
  Clustering& best = trace.best;
  best.seeds.assign(static_cast<std::size_t>(k), -1);
  std::vector<double> seed_d(static_cast<std::size_t>(k), std::numeric_limits<double>::infinity());
  for (int i = 0; i < n; ++i) {
    const int c = best.assignments[static_cast<std::size_t>(i)];
    const double d =
        js_distance(preds[static_cast<std::size_t>(i)], best.centroids[static_cast<std::size_t>(c)]);
    if (d < seed_d[static_cast<std::size_t>(c)]) {
      seed_d[static_cast<std::size_t>(c)] = d;
      best.seeds[static_cast<std::size_t>(c)] = i;
    }
  }
  trace.warm_objective_final_centroids =
      cluster_objective(preds, trace.warm_assignments, best.centroids);
  return trace;
}

void Clustering::save(const std::string& path) const {
  nlohmann::json doc = {{"format", "tphenotype-clustering"},
                        {"version", 1},
                        {"k", centroids.size()},
                        {"assignments", assignments},
                        {"centroids", centroids},
                        {"seeds", seeds},
                        {"delta", delta},
                        {"objective", objective},
                        {"fallback", fallback}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("Clustering::save: cannot open " + path);
  out << doc.dump(2) << "\n";
}

Clustering Clustering::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("Clustering::load: cannot open " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("Clustering::load: malformed JSON in " + path + ": " + e.what());
  }
  if (doc.value("format", "") != "tphenotype-clustering")
    throw std::runtime_error("Clustering::load: not a clustering file: " + path);
  Clustering c;
  c.assignments = doc.at("assignments").get<std::vector<int>>();
  c.centroids = doc.at("centroids").get<std::vector<LabelDistribution>>();
  c.seeds = doc.at("seeds").get<std::vector<int>>();
  c.delta = doc.at("delta").get<double>();
  c.objective = doc.at("objective").get<double>();
  c.fallback = doc.at("fallback").get<std::vector<int>>();
  return c;
}

KMeansResult kmeans_latent(const std::vector<std::vector<double>>& latents, int k, Rng& rng,
                           int restarts, int max_iter) {
  const int n = static_cast<int>(latents.size());
  if (k > n) throw std::invalid_argument("kmeans_latent: K exceeds sample count");
  if (k < 1) throw std::invalid_argument("kmeans_latent: K must be >= 1");
  const std::size_t dim = latents[0].size();

  auto sq_dist = [&](const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
    return acc;
  };

  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();

  for (int run = 0; run < restarts; ++run) {
    // K-means++ seeding.
    std::vector<std::vector<double>> centroids;
    centroids.push_back(latents[static_cast<std::size_t>(rng.uniform_int(static_cast<std::uint64_t>(n)))]);
    std::vector<double> d2(static_cast<std::size_t>(n));
    while (static_cast<int>(centroids.size()) < k) {
      double total = 0.0;
      for (int i = 0; i < n; ++i) {
        double m = std::numeric_limits<double>::infinity();
        for (const std::vector<double>& c : centroids) m = std::min(m, sq_dist(latents[static_cast<std::size_t>(i)], c));
        d2[static_cast<std::size_t>(i)] = m;
        total += m;
      }
      int chosen = -1;
      if (total <= 0.0) {
        for (int i = 0; i < n && chosen < 0; ++i)
          if (d2[static_cast<std::size_t>(i)] > 0.0) chosen = i;
        if (chosen < 0) chosen = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n)));
      } else {
        const double target = rng.uniform() * total;
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
          acc += d2[static_cast<std::size_t>(i)];
          if (acc >= target) {
            chosen = i;
            break;
          }
        }
        if (chosen < 0) chosen = n - 1;
      }
      centroids.push_back(latents[static_cast<std::size_t>(chosen)]);
    }

    std::vector<int> assign(static_cast<std::size_t>(n), -1);
    for (int iter = 0; iter < max_iter; ++iter) {
      bool changed = false;
      for (int i = 0; i < n; ++i) {
        int bc = 0;
        double bd = std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c) {
          const double d = sq_dist(latents[static_cast<std::size_t>(i)], centroids[static_cast<std::size_t>(c)]);
          if (d < bd) {
            bd = d;
            bc = c;
          }
        }
        if (assign[static_cast<std::size_t>(i)] != bc) {
          assign[static_cast<std::size_t>(i)] = bc;
          changed = true;
        }
      }
      // Update step; empty clusters take the point farthest from its centroid.
      std::vector<std::vector<double>> sums(static_cast<std::size_t>(k), std::vector<double>(dim, 0.0));
      std::vector<int> counts(static_cast<std::size_t>(k), 0);
      for (int i = 0; i < n; ++i) {
        const int c = assign[static_cast<std::size_t>(i)];
        ++counts[static_cast<std::size_t>(c)];
        for (std::size_t dd = 0; dd < dim; ++dd) sums[static_cast<std::size_t>(c)][dd] += latents[static_cast<std::size_t>(i)][dd];
      }
      for (int c = 0; c < k; ++c) {
        if (counts[static_cast<std::size_t>(c)] == 0) {
          int far_i = 0;
          double far_d = -1.0;
          for (int i = 0; i < n; ++i) {
            const double d = sq_dist(latents[static_cast<std::size_t>(i)],
                                     centroids[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])]);
            if (d > far_d && counts[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])] > 1) {
              far_d = d;
              far_i = i;
            }
          }
          --counts[static_cast<std::size_t>(assign[static_cast<std::size_t>(far_i)])];
          for (std::size_t dd = 0; dd < dim; ++dd)
            sums[static_cast<std::size_t>(assign[static_cast<std::size_t>(far_i)])][dd] -=
                latents[static_cast<std::size_t>(far_i)][dd];
          assign[static_cast<std::size_t>(far_i)] = c;
          counts[static_cast<std::size_t>(c)] = 1;
          sums[static_cast<std::size_t>(c)] = latents[static_cast<std::size_t>(far_i)];
          changed = true;
        }
        for (std::size_t dd = 0; dd < dim; ++dd)
          centroids[static_cast<std::size_t>(c)][dd] =
              sums[static_cast<std::size_t>(c)][dd] / counts[static_cast<std::size_t>(c)];
      }
      if (!changed) break;
    }

    double inertia = 0.0;
    for (int i = 0; i < n; ++i)
      inertia += sq_dist(latents[static_cast<std::size_t>(i)],
                         centroids[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])]);
    if (inertia < best.inertia) {
      best.inertia = inertia;
      best.assignments = assign;
      best.centroids = centroids;
    }
  }
  return best;
}

int select_k(const std::vector<int>& candidates, const std::function<double(int)>& score) {
  if (candidates.empty()) throw std::invalid_argument("select_k: no candidates");
  std::vector<int> sorted = candidates;
  std::sort(sorted.begin(), sorted.end());
  int best_k = sorted[0];
  double best_score = -std::numeric_limits<double>::infinity();
  for (int k : sorted) {
    const double v = score(k);
    if (v > best_score + 1e-12) {
      best_score = v;
      best_k = k;
    }
  }
  return best_k;
}

}  // namespace tphenotype

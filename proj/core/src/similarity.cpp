#include "tphenotype/similarity.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace tphenotype {

double path_distance(const Predictor& predictor, const std::vector<double>& z1,
                     const std::vector<double>& z2, int steps) {
  if (steps < 2) throw std::invalid_argument("path_distance: steps must be >= 2");
  const LabelDistribution p1 = predictor.predict(z1);
  const LabelDistribution p2 = predictor.predict(z2);

  std::vector<double> z(z1.size());
  double worst = 0.0;
  for (int k = 0; k < steps; ++k) {
    const double a = static_cast<double>(k) / (steps - 1);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = (1.0 - a) * z1[i] + a * z2[i];
    const LabelDistribution p = predictor.predict(z);
    worst = std::max(worst, js_distance(p, p1));
    worst = std::max(worst, js_distance(p, p2));
  }
  return worst;
}

DistanceMatrix distance_matrix(const Predictor& predictor,
                               const std::vector<std::vector<double>>& latents, int steps) {
  const int n = static_cast<int>(latents.size());
  if (n < 2) throw std::invalid_argument("distance_matrix: need at least two samples");
  DistanceMatrix S;
  S.n = n;
  S.steps = steps;
  S.s.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double d = path_distance(predictor, latents[static_cast<std::size_t>(i)],
                                     latents[static_cast<std::size_t>(j)], steps);
      S.at(i, j) = d;
      S.at(j, i) = d;
    }
  return S;
}

void DistanceMatrix::save_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("DistanceMatrix::save_csv: cannot open " + path);
  char buf[32];
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", at(i, j));
      out << buf << (j + 1 < n ? "," : "");
    }
    out << "\n";
  }
}

SimilarityGraph build_graph(const DistanceMatrix& s, double delta) {
  if (delta < 0.0) throw std::invalid_argument("build_graph: delta must be >= 0");
  SimilarityGraph g;
  g.n = s.n;
  g.delta = delta;
  g.adj.assign(static_cast<std::size_t>(s.n), {});
  for (int i = 0; i < s.n; ++i)
    for (int j = i + 1; j < s.n; ++j)
      if (s.at(i, j) <= delta) {
        g.adj[static_cast<std::size_t>(i)].push_back(j);
        g.adj[static_cast<std::size_t>(j)].push_back(i);
      }

  g.component.assign(static_cast<std::size_t>(s.n), -1);
  int comp = 0;
  std::vector<int> stack;
  for (int i = 0; i < s.n; ++i) {
    if (g.component[static_cast<std::size_t>(i)] >= 0) continue;
    stack.push_back(i);
    g.component[static_cast<std::size_t>(i)] = comp;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (int v : g.adj[static_cast<std::size_t>(u)])
        if (g.component[static_cast<std::size_t>(v)] < 0) {
          g.component[static_cast<std::size_t>(v)] = comp;
          stack.push_back(v);
        }
    }
    ++comp;
  }
  g.n_components = comp;
  return g;
}

std::size_t SimilarityGraph::edge_count() const {
  std::size_t deg = 0;
  for (const std::vector<int>& nb : adj) deg += nb.size();
  return deg / 2;
}

void SimilarityGraph::save_edge_list(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("SimilarityGraph::save_edge_list: cannot open " + path);
  out << "# delta " << delta << "\n";
  for (int i = 0; i < n; ++i)
    for (int j : adj[static_cast<std::size_t>(i)])
      if (j > i) out << i << " " << j << "\n";
}

}  // namespace tphenotype

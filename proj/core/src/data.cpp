#include "tphenotype/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace tphenotype {

using nlohmann::json;

namespace {
constexpr double kPi = 3.14159265358979323846;

std::vector<int> largest_remainder(int total, const std::array<double, 3>& fractions) {
  std::array<double, 3> exact{};
  std::vector<int> counts(3, 0);
  int assigned = 0;
  for (int s = 0; s < 3; ++s) {
    exact[static_cast<std::size_t>(s)] = fractions[static_cast<std::size_t>(s)] * total;
    counts[static_cast<std::size_t>(s)] =
        static_cast<int>(std::floor(exact[static_cast<std::size_t>(s)] + 1e-12));
    assigned += counts[static_cast<std::size_t>(s)];
  }
  std::array<int, 3> order = {0, 1, 2};
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double fa = exact[static_cast<std::size_t>(a)] - std::floor(exact[static_cast<std::size_t>(a)] + 1e-12);
    const double fb = exact[static_cast<std::size_t>(b)] - std::floor(exact[static_cast<std::size_t>(b)] + 1e-12);
    if (fa != fb) return fa > fb;
    return a < b;
  });
  for (int k = 0; assigned < total; ++k, ++assigned)
    ++counts[static_cast<std::size_t>(order[static_cast<std::size_t>(k % 3)])];
  return counts;
}
}  // namespace

std::vector<double> TimeSeries::one_hot(int dim_y) const {
  std::vector<double> y(static_cast<std::size_t>(dim_y), 0.0);
  if (label) y.at(static_cast<std::size_t>(*label)) = 1.0;
  return y;
}

std::vector<double> TimeSeries::feature(int dim) const {
  std::vector<double> col(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) col[j] = x[j].at(static_cast<std::size_t>(dim));
  return col;
}

bool Dataset::labeled() const {
  return dim_y > 0 && !items.empty() &&
         std::all_of(items.begin(), items.end(),
                     [](const TimeSeries& s) { return s.label.has_value(); });
}

void Dataset::validate() const {
  if (statics.size() != static_cast<std::size_t>(dim_x))
    throw std::runtime_error("Dataset: statics declaration size != dim_x");
  for (std::size_t i = 0; i < items.size(); ++i) {
    const TimeSeries& s = items[i];
    std::ostringstream where;
    where << "Dataset: series " << i << ": ";
    if (s.t.empty()) throw std::runtime_error(where.str() + "empty series");
    if (s.t.size() != s.x.size()) throw std::runtime_error(where.str() + "t/x length mismatch");
    for (std::size_t j = 0; j < s.t.size(); ++j) {
      if (s.t[j] < 0.0 || s.t[j] > 1.0)
        throw std::runtime_error(where.str() + "timestamp outside [0,1]");
      if (j > 0 && s.t[j] < s.t[j - 1])
        throw std::runtime_error(where.str() + "timestamps not nondecreasing");
      if (s.x[j].size() != static_cast<std::size_t>(dim_x))
        throw std::runtime_error(where.str() + "row width != dim_x");
    }
    if (s.label && (*s.label < 0 || *s.label >= dim_y))
      throw std::runtime_error(where.str() + "label outside [0, dim_y)");
  }
}

double synthetic_trajectory(int feature, int iota, double phi, int c, double t,
                            const SyntheticParams& p) {
  if (feature == 0)
    return iota / (1.0 + std::exp(-p.slope * (t - p.offset - phi)));
  return std::sin(c * (t - phi));
}

double toy_trajectory(int type, double phi, double t) {
  switch (type) {
    case 0: return std::cos(2.0 * kPi * (t - phi));
    case 1: return std::cos(kPi * (t - phi));
    case 2: return std::sin(kPi * (t - phi));
    default: return std::sin(2.0 * kPi * (t - phi));
  }
}

Dataset gen_synthetic(int n, Rng& rng, const SyntheticParams& params) {
  if (n < 1) throw std::invalid_argument("gen_synthetic: n must be >= 1");
  Dataset ds;
  ds.dim_x = 2;
  ds.dim_y = 2;
  ds.statics = {false, false};
  ds.provenance.generator = "synthetic";
  ds.provenance.seed = rng.seed();
  ds.provenance.time_scale = params.horizon;
  json pj = {{"n", n},
             {"n_obs", params.n_obs},
             {"phi_rate", params.phi_rate},
             {"noise_std", params.noise_std},
             {"slope", params.slope},
             {"offset", params.offset},
             {"horizon", params.horizon}};
  if (params.phi_fixed) pj["phi_fixed"] = *params.phi_fixed;
  ds.provenance.params_json = pj.dump();

  static constexpr int kPeriods[3] = {4, 6, 8};
  ds.items.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int iota = rng.uniform_int(2) == 0 ? -1 : 1;
    const double phi = params.phi_fixed ? *params.phi_fixed : rng.exponential(params.phi_rate);
    const int c_idx = static_cast<int>(rng.uniform_int(3));
    const int c = kPeriods[c_idx];

    TimeSeries s;
    s.t.resize(static_cast<std::size_t>(params.n_obs));
    for (double& tj : s.t) tj = rng.uniform(0.0, params.horizon);
    std::sort(s.t.begin(), s.t.end());

    s.x.resize(s.t.size());
    for (std::size_t j = 0; j < s.t.size(); ++j) {
      s.x[j].resize(2);
      for (int dim = 0; dim < 2; ++dim) {
        double v = synthetic_trajectory(dim, iota, phi, c, s.t[j], params);
        if (params.noise_std > 0.0) v += rng.normal(0.0, params.noise_std);
        s.x[j][static_cast<std::size_t>(dim)] = v;
      }
    }
    for (double& tj : s.t) tj /= params.horizon;
    s.label = (c == 6) ? 0 : 1;
    s.truth_cluster = c_idx;
    ds.items.push_back(std::move(s));
  }
  ds.validate();
  return ds;
}

Dataset gen_toy(int n, Rng& rng, const ToyParams& params) {
  if (n < 1) throw std::invalid_argument("gen_toy: n must be >= 1");
  Dataset ds;
  ds.dim_x = 1;
  ds.dim_y = 0;
  ds.statics = {false};
  ds.provenance.generator = "toy";
  ds.provenance.seed = rng.seed();
  ds.provenance.time_scale = 1.0;
  json pj = {{"n", n},
             {"n_obs", params.n_obs},
             {"phi_rate", params.phi_rate},
             {"noise_std", params.noise_std}};
  if (params.phi_fixed) pj["phi_fixed"] = *params.phi_fixed;
  ds.provenance.params_json = pj.dump();

  ds.items.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int type = static_cast<int>(rng.uniform_int(4));
    const double phi = params.phi_fixed ? *params.phi_fixed : rng.exponential(params.phi_rate);

    TimeSeries s;
    s.t.resize(static_cast<std::size_t>(params.n_obs));
    for (double& tj : s.t) tj = rng.uniform();
    std::sort(s.t.begin(), s.t.end());
    s.x.resize(s.t.size());
    for (std::size_t j = 0; j < s.t.size(); ++j) {
      double v = toy_trajectory(type, phi, s.t[j]);
      if (params.noise_std > 0.0) v += rng.normal(0.0, params.noise_std);
      s.x[j] = {v};
    }
    s.truth_cluster = type;
    ds.items.push_back(std::move(s));
  }
  ds.validate();
  return ds;
}

std::vector<Dataset> gen_rate_study(const std::vector<int>& rates, int n_per_rate, Rng& rng,
                                    const RateStudyParams& params) {
  std::vector<Dataset> out;
  out.reserve(rates.size());
  for (int rate : rates) {
    if (rate < 2) throw std::invalid_argument("gen_rate_study: rate must be >= 2");
    Dataset ds;
    ds.dim_x = 1;
    ds.dim_y = 0;
    ds.statics = {false};
    ds.provenance.generator = "rate_study";
    ds.provenance.seed = rng.seed();
    ds.provenance.time_scale = 1.0;
    ds.provenance.params_json = json{{"n", n_per_rate},
                                     {"rate", rate},
                                     {"phi_rate", params.phi_rate},
                                     {"noise_std", params.noise_std}}
                                    .dump();
    for (int i = 0; i < n_per_rate; ++i) {
      const double phi = rng.exponential(params.phi_rate);
      TimeSeries s;
      s.t.resize(static_cast<std::size_t>(rate));
      s.x.resize(s.t.size());
      for (int j = 0; j < rate; ++j) {
        const double t = (j + 0.5) / rate;
        double v = std::sin(2.0 * kPi * t + phi);
        if (params.noise_std > 0.0) v += rng.normal(0.0, params.noise_std);
        s.t[static_cast<std::size_t>(j)] = t;
        s.x[static_cast<std::size_t>(j)] = {v};
      }
      ds.items.push_back(std::move(s));
    }
    ds.validate();
    out.push_back(std::move(ds));
  }
  return out;
}

void save_dataset(const Dataset& ds, const std::string& path) {
  ds.validate();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_dataset: cannot open " + path);
  json header = {{"format", "tphenotype-dataset"},
                 {"version", 1},
                 {"dim_x", ds.dim_x},
                 {"dim_y", ds.dim_y},
                 {"statics", std::vector<bool>(ds.statics.begin(), ds.statics.end())},
                 {"provenance",
                  {{"generator", ds.provenance.generator},
                   {"seed", ds.provenance.seed},
                   {"time_scale", ds.provenance.time_scale},
                   {"params", json::parse(ds.provenance.params_json)}}}};
  out << header.dump() << "\n";
  for (const TimeSeries& s : ds.items) {
    json rec;
    rec["t"] = s.t;
    rec["x"] = s.x;
    rec["y"] = s.label ? json(*s.label) : json(nullptr);
    rec["cluster"] = s.truth_cluster ? json(*s.truth_cluster) : json(nullptr);
    out << rec.dump() << "\n";
  }
  if (!out) throw std::runtime_error("save_dataset: write failed for " + path);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_dataset: cannot open " + path);
  std::string line;
  int lineno = 0;

  auto fail = [&](const std::string& what) {
    std::ostringstream msg;
    msg << "load_dataset: " << what << ", line " << lineno;
    throw std::runtime_error(msg.str());
  };

  if (!std::getline(in, line)) throw std::runtime_error("load_dataset: empty file " + path);
  lineno = 1;
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception&) {
    fail("malformed header record");
  }
  if (header.value("format", "") != "tphenotype-dataset") fail("not a dataset file");

  Dataset ds;
  ds.dim_x = header.at("dim_x").get<int>();
  ds.dim_y = header.at("dim_y").get<int>();
  for (bool b : header.at("statics").get<std::vector<bool>>()) ds.statics.push_back(b);
  const json& prov = header.at("provenance");
  ds.provenance.generator = prov.at("generator").get<std::string>();
  ds.provenance.seed = prov.at("seed").get<std::uint64_t>();
  ds.provenance.time_scale = prov.at("time_scale").get<double>();
  ds.provenance.params_json = prov.at("params").dump();

  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception&) {
      fail("malformed record");
    }
    TimeSeries s;
    s.t = rec.at("t").get<std::vector<double>>();
    s.x = rec.at("x").get<std::vector<std::vector<double>>>();
    if (!rec.at("y").is_null()) s.label = rec.at("y").get<int>();
    if (!rec.at("cluster").is_null()) s.truth_cluster = rec.at("cluster").get<int>();

    if (s.t.empty()) fail("empty series");
    if (s.t.size() != s.x.size()) fail("t/x length mismatch");
    for (std::size_t j = 0; j < s.t.size(); ++j) {
      if (j > 0 && s.t[j] < s.t[j - 1]) fail("timestamps not nondecreasing");
      if (s.t[j] < 0.0 || s.t[j] > 1.0) fail("timestamp outside [0,1]");
      if (s.x[j].size() != static_cast<std::size_t>(ds.dim_x)) fail("row width != dim_x");
    }
    if (s.label && (*s.label < 0 || *s.label >= ds.dim_y)) fail("label outside [0, dim_y)");
    ds.items.push_back(std::move(s));
  }
  ds.validate();
  return ds;
}

SplitResult split(const Dataset& ds, const std::array<double, 3>& fractions, Rng& rng) {
  double sum = 0.0;
  for (double f : fractions) {
    if (f <= 0.0) throw std::invalid_argument("split: fractions must be positive");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("split: fractions must sum to 1");

  const int n = static_cast<int>(ds.size());
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  rng.shuffle(idx);

  std::array<std::vector<int>, 3> buckets;
  if (ds.labeled()) {
    // Stratified: apportion each class independently; shuffled order is
    // preserved inside each class.
    std::vector<std::vector<int>> by_class(static_cast<std::size_t>(ds.dim_y));
    for (int i : idx) by_class[static_cast<std::size_t>(*ds.items[static_cast<std::size_t>(i)].label)].push_back(i);
    for (const std::vector<int>& members : by_class) {
      const std::vector<int> counts = largest_remainder(static_cast<int>(members.size()), fractions);
      std::size_t pos = 0;
      for (int s = 0; s < 3; ++s)
        for (int k = 0; k < counts[static_cast<std::size_t>(s)]; ++k)
          buckets[static_cast<std::size_t>(s)].push_back(members[pos++]);
    }
  } else {
    const std::vector<int> counts = largest_remainder(n, fractions);
    std::size_t pos = 0;
    for (int s = 0; s < 3; ++s)
      for (int k = 0; k < counts[static_cast<std::size_t>(s)]; ++k)
        buckets[static_cast<std::size_t>(s)].push_back(idx[pos++]);
  }

  SplitResult out;
  Dataset* parts[3] = {&out.train, &out.val, &out.test};
  const char* names[3] = {"train", "val", "test"};
  for (int s = 0; s < 3; ++s) {
    if (buckets[static_cast<std::size_t>(s)].empty())
      throw std::runtime_error(std::string("split: empty ") + names[s] + " split");
    Dataset& part = *parts[s];
    part.dim_x = ds.dim_x;
    part.dim_y = ds.dim_y;
    part.statics = ds.statics;
    part.provenance = ds.provenance;
    for (int i : buckets[static_cast<std::size_t>(s)])
      part.items.push_back(ds.items[static_cast<std::size_t>(i)]);
  }
  return out;
}

}  // namespace tphenotype

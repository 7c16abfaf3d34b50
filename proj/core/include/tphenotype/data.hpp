#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "tphenotype/rng.hpp"

namespace tphenotype {

/// Irregular discrete observations of one sample. `x[j]` holds the dim_x
/// observed values at timestamp `t[j]`; timestamps are nondecreasing and lie
/// in [0, 1] after normalisation. `label` is a class index (the file format
/// and the one-hot view derive from it).
struct TimeSeries {
  std::vector<double> t;
  std::vector<std::vector<double>> x;  // T rows, dim_x columns
  std::optional<int> label;
  std::optional<int> truth_cluster;

  std::size_t length() const { return t.size(); }
  std::vector<double> one_hot(int dim_y) const;
  /// Column view of one feature dimension.
  std::vector<double> feature(int dim) const;
};

struct Provenance {
  std::string generator;          // "synthetic", "toy", "rate_study", "file", ...
  std::uint64_t seed = 0;
  double time_scale = 1.0;        // original horizon mapped onto [0,1]
  std::string params_json = "{}"; // generator parameters, serialized
};

struct Dataset {
  std::vector<TimeSeries> items;
  int dim_x = 0;
  int dim_y = 0;
  std::vector<bool> statics;  // per-feature static-passthrough flags
  Provenance provenance;

  std::size_t size() const { return items.size(); }
  bool labeled() const;
  void validate() const;  // throws on any invariant violation
};

// --- generator parameter blocks -------------------------------------------

/// Two-feature trend/periodicity cohort with binary outcome. `phi_rate` is
/// the rate of the exponential delay (the written exp(3/10) is read as rate
/// 3/10; set 10/3 for the mean-3/10 reading). `phi_fixed` pins the delay for
/// deterministic checks.
struct SyntheticParams {
  int n_obs = 20;
  double phi_rate = 0.3;
  double noise_std = 0.1;
  double slope = 10.0;      // sigmoid steepness a
  double offset = 0.5;      // sigmoid centre b
  double horizon = 2.0;     // observation window before rescaling
  std::optional<double> phi_fixed;
};

/// Four-type trigonometric toy cohort (no outcome labels).
struct ToyParams {
  int n_obs = 15;
  double phi_rate = 0.5;
  double noise_std = 0.03;
  std::optional<double> phi_fixed;
};

struct RateStudyParams {
  double noise_std = 0.0;
  double phi_rate = 0.5;
};

/// Underlying trajectories, exposed for direct checks.
double synthetic_trajectory(int feature, int iota, double phi, int c, double t,
                            const SyntheticParams& p = {});
double toy_trajectory(int type, double phi, double t);

/// N samples of the two-feature cohort: per sample a sign, a shared
/// exponential delay, a periodicity c in {4,6,8}, `n_obs` sorted-uniform
/// timestamps on [0, horizon] (then rescaled to [0,1]) and white observation
/// noise. y = 0 iff c = 6; truth_cluster indexes c.
Dataset gen_synthetic(int n, Rng& rng, const SyntheticParams& params = {});

/// N samples from the four trigonometric trajectory types with exponential
/// delays; truth_cluster is the type, no outcome label.
Dataset gen_toy(int n, Rng& rng, const ToyParams& params = {});

/// One dataset per sampling rate: sin(2*pi*t + phi) observed at `rate`
/// uniformly spaced points per unit interval (midpoint grid).
std::vector<Dataset> gen_rate_study(const std::vector<int>& rates, int n_per_rate, Rng& rng,
                                    const RateStudyParams& params = {});

// --- persistence -----------------------------------------------------------

/// Line-delimited JSON: a header record (dims, statics, provenance) followed
/// by one record per series. Round-trips are value-exact.
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

// --- splits ----------------------------------------------------------------

struct SplitResult {
  Dataset train, val, test;
};

/// Seeded shuffle followed by contiguous slicing. When labels are present the
/// assignment is stratified: per-class counts deviate from exact
/// proportionality by less than one sample (largest-remainder apportionment
/// within each class). Throws if any split would be empty.
SplitResult split(const Dataset& ds, const std::array<double, 3>& fractions, Rng& rng);

}  // namespace tphenotype

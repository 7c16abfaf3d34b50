#include "tphenotype/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "tphenotype/version.hpp"

namespace tphenotype {

using nlohmann::json;

namespace {

json synthetic_to_json(const SyntheticParams& p) {
  json j = {{"n_obs", p.n_obs},     {"phi_rate", p.phi_rate}, {"noise_std", p.noise_std},
            {"slope", p.slope},     {"offset", p.offset},     {"horizon", p.horizon},
            {"phi_fixed", nullptr}};
  if (p.phi_fixed) j["phi_fixed"] = *p.phi_fixed;
  return j;
}

SyntheticParams synthetic_from_json(const json& j) {
  SyntheticParams p;
  p.n_obs = j.value("n_obs", p.n_obs);
  p.phi_rate = j.value("phi_rate", p.phi_rate);
  p.noise_std = j.value("noise_std", p.noise_std);
  p.slope = j.value("slope", p.slope);
  p.offset = j.value("offset", p.offset);
  p.horizon = j.value("horizon", p.horizon);
  if (j.contains("phi_fixed") && !j.at("phi_fixed").is_null())
    p.phi_fixed = j.at("phi_fixed").get<double>();
  return p;
}

json toy_to_json(const ToyParams& p) {
  json j = {{"n_obs", p.n_obs},
            {"phi_rate", p.phi_rate},
            {"noise_std", p.noise_std},
            {"phi_fixed", nullptr}};
  if (p.phi_fixed) j["phi_fixed"] = *p.phi_fixed;
  return j;
}

ToyParams toy_from_json(const json& j) {
  ToyParams p;
  p.n_obs = j.value("n_obs", p.n_obs);
  p.phi_rate = j.value("phi_rate", p.phi_rate);
  p.noise_std = j.value("noise_std", p.noise_std);
  if (j.contains("phi_fixed") && !j.at("phi_fixed").is_null())
    p.phi_fixed = j.at("phi_fixed").get<double>();
  return p;
}

json config_to_json(const ExperimentConfig& c) {
  return json{
      {"data",
       {{"generator", c.generator},
        {"n", c.data_n},
        {"path", c.data_path},
        {"synthetic", synthetic_to_json(c.synthetic)},
        {"toy", toy_to_json(c.toy)}}},
      {"encoder",
       {{"n", c.encoder.n},
        {"d", c.encoder.d},
        {"hidden", c.encoder.hidden},
        {"r_max", c.encoder.ranges.r_max},
        {"freq_max", c.encoder.ranges.freq_max},
        {"c_max", c.encoder.ranges.c_max},
        {"delta_pole", c.encoder.ranges.delta_pole},
        {"alpha", c.encoder_hyper.alpha},
        {"alpha1", c.encoder_hyper.alpha1},
        {"alpha2", c.encoder_hyper.alpha2},
        {"lr", c.encoder_hyper.lr},
        {"weight_decay", c.encoder_hyper.weight_decay},
        {"epochs", c.encoder_hyper.epochs},
        {"batch", c.encoder_hyper.batch},
        {"distinct_subset", c.encoder_hyper.distinct_subset}}},
      {"predictor",
       {{"hidden", c.predictor_hidden},
        {"lr", c.predictor_hyper.lr},
        {"weight_decay", c.predictor_hyper.weight_decay},
        {"epochs", c.predictor_hyper.epochs},
        {"batch", c.predictor_hyper.batch}}},
      {"similarity", {{"steps", c.similarity_steps}}},
      {"clustering",
       {{"k", c.cluster.k},
        {"max_iter", c.cluster.max_iter},
        {"patience", c.cluster.patience},
        {"tol", c.cluster.tol},
        {"candidates", c.k_candidates},
        {"kmeans_restarts", c.kmeans_restarts}}},
      {"split", {{"fractions", std::vector<double>(c.fractions.begin(), c.fractions.end())}}},
      {"seeds", c.seeds},
      {"output_dir", c.output_dir}};
}

void validate_keys(const json& input, const json& schema, const std::string& path) {
  if (!input.is_object()) return;
  if (!schema.is_object()) throw ConfigError("config: unexpected object at " + path);
  for (const auto& item : input.items()) {
    const std::string child = path + "/" + item.key();
    if (!schema.contains(item.key()))
      throw ConfigError("config: unknown key " + child);
    validate_keys(item.value(), schema.at(item.key()), child);
  }
}

}  // namespace

ExperimentConfig parse_config_json(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: malformed JSON: ") + e.what());
  }
  const json schema = config_to_json(ExperimentConfig{});
  validate_keys(doc, schema, "");

  ExperimentConfig c;
  if (doc.contains("data")) {
    const json& d = doc["data"];
    c.generator = d.value("generator", c.generator);
    c.data_n = d.value("n", c.data_n);
    c.data_path = d.value("path", c.data_path);
    if (d.contains("synthetic")) c.synthetic = synthetic_from_json(d["synthetic"]);
    if (d.contains("toy")) c.toy = toy_from_json(d["toy"]);
  }
  if (doc.contains("encoder")) {
    const json& e = doc["encoder"];
    c.encoder.n = e.value("n", c.encoder.n);
    c.encoder.d = e.value("d", c.encoder.d);
    c.encoder.hidden = e.value("hidden", c.encoder.hidden);
    c.encoder.ranges.r_max = e.value("r_max", c.encoder.ranges.r_max);
    c.encoder.ranges.freq_max = e.value("freq_max", c.encoder.ranges.freq_max);
    c.encoder.ranges.c_max = e.value("c_max", c.encoder.ranges.c_max);
    c.encoder.ranges.delta_pole = e.value("delta_pole", c.encoder.ranges.delta_pole);
    c.encoder_hyper.alpha = e.value("alpha", c.encoder_hyper.alpha);
    c.encoder_hyper.alpha1 = e.value("alpha1", c.encoder_hyper.alpha1);
    c.encoder_hyper.alpha2 = e.value("alpha2", c.encoder_hyper.alpha2);
    c.encoder_hyper.lr = e.value("lr", c.encoder_hyper.lr);
    c.encoder_hyper.weight_decay = e.value("weight_decay", c.encoder_hyper.weight_decay);
    c.encoder_hyper.epochs = e.value("epochs", c.encoder_hyper.epochs);
    c.encoder_hyper.batch = e.value("batch", c.encoder_hyper.batch);
    c.encoder_hyper.distinct_subset = e.value("distinct_subset", c.encoder_hyper.distinct_subset);
  }
  if (doc.contains("predictor")) {
    const json& p = doc["predictor"];
    c.predictor_hidden = p.value("hidden", c.predictor_hidden);
    c.predictor_hyper.lr = p.value("lr", c.predictor_hyper.lr);
    c.predictor_hyper.weight_decay = p.value("weight_decay", c.predictor_hyper.weight_decay);
    c.predictor_hyper.epochs = p.value("epochs", c.predictor_hyper.epochs);
    c.predictor_hyper.batch = p.value("batch", c.predictor_hyper.batch);
  }
  if (doc.contains("similarity")) c.similarity_steps = doc["similarity"].value("steps", c.similarity_steps);
  if (doc.contains("clustering")) {
    const json& k = doc["clustering"];
    c.cluster.k = k.value("k", c.cluster.k);
    c.cluster.max_iter = k.value("max_iter", c.cluster.max_iter);
    c.cluster.patience = k.value("patience", c.cluster.patience);
    c.cluster.tol = k.value("tol", c.cluster.tol);
    if (k.contains("candidates")) c.k_candidates = k["candidates"].get<std::vector<int>>();
    c.kmeans_restarts = k.value("kmeans_restarts", c.kmeans_restarts);
  }
  if (doc.contains("split")) {
    const auto f = doc["split"].value("fractions", std::vector<double>{0.64, 0.16, 0.20});
    if (f.size() != 3) throw ConfigError("config: split/fractions must have 3 entries");
    std::copy(f.begin(), f.end(), c.fractions.begin());
  }
  if (doc.contains("seeds")) c.seeds = doc["seeds"].get<std::vector<std::uint64_t>>();
  if (doc.contains("output_dir")) c.output_dir = doc["output_dir"].get<std::string>();

  if (c.seeds.empty()) throw ConfigError("config: seeds must be nonempty");
  if (c.generator != "synthetic" && c.generator != "toy" && c.generator != "file")
    throw ConfigError("config: unknown generator '" + c.generator + "'");
  return c;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  json doc;
  try {
    doc = json::parse(buf.str());
  } catch (const json::exception& e) {
    throw ConfigError("config: malformed JSON in " + path + ": " + e.what());
  }
  if (doc.is_object() && doc.value("format", "") == "tphenotype-manifest")
    return parse_config_json(doc.at("config").dump());
  return parse_config_json(buf.str());
}

std::string config_to_json_string(const ExperimentConfig& cfg, int indent) {
  return config_to_json(cfg).dump(indent);
}

std::string config_hash(const ExperimentConfig& cfg) {
  const std::string canon = config_to_json(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canon) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[19];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Dataset make_dataset(const ExperimentConfig& cfg, Rng& rng) {
  if (cfg.generator == "synthetic") return gen_synthetic(cfg.data_n, rng, cfg.synthetic);
  if (cfg.generator == "toy") return gen_toy(cfg.data_n, rng, cfg.toy);
  if (cfg.generator == "file") return load_dataset(cfg.data_path);
  throw std::runtime_error("make_dataset: unknown generator " + cfg.generator);
}

Checkpoint fit_pipeline(const Dataset& train, const Dataset& val, const ExperimentConfig& cfg,
                        Rng& rng, PipelineLogs* logs) {
  train.validate();
  val.validate();

  Checkpoint ckpt;
  LatentLayout layout;
  layout.dim_x = train.dim_x;
  layout.statics = train.statics;
  layout.n = cfg.encoder.n;
  layout.d = cfg.encoder.d;
  layout.ranges = cfg.encoder.ranges;
  ckpt.encoders.layout = layout;
  ckpt.dim_y = train.dim_y;

  // Stage 1: one Laplace encoder per non-static feature.
  for (int f = 0; f < train.dim_x; ++f) {
    if (train.statics[static_cast<std::size_t>(f)]) continue;
    Rng enc_rng = rng.fork(static_cast<std::uint64_t>(f) + 1);
    EncoderTrainLog log;
    LaplaceEncoder enc =
        train_encoder(collect_feature(train, f), collect_feature(val, f), cfg.encoder,
                      cfg.encoder_hyper, enc_rng, &log);
    ckpt.encoders.encoders.push_back(std::move(enc));
    if (logs) logs->encoder_logs.push_back(std::move(log));
  }

  // Stage 2: predictor over frozen encoders.
  if (train.labeled()) {
    Rng pred_rng = rng.fork(1000);
    PredictorTrainLog plog;
    ckpt.predictor = train_predictor(ckpt.encoders, train, cfg.predictor_hyper,
                                     cfg.predictor_hidden, pred_rng, &plog);
    if (logs) logs->predictor_log = std::move(plog);
  }
  ckpt.meta_json = config_to_json_string(cfg, -1);
  return ckpt;
}

void MetricReport::set(const std::string& key, double v) {
  for (auto& kv : values)
    if (kv.first == key) {
      kv.second = v;
      return;
    }
  values.emplace_back(key, v);
}

double MetricReport::get(const std::string& key) const {
  for (const auto& kv : values)
    if (kv.first == key) return kv.second;
  throw std::out_of_range("MetricReport: no key " + key);
}

bool MetricReport::has(const std::string& key) const {
  for (const auto& kv : values)
    if (kv.first == key) return true;
  return false;
}

std::string MetricReport::to_kv_text() const {
  std::ostringstream os;
  char buf[32];
  for (const auto& kv : values) {
    std::snprintf(buf, sizeof(buf), "%.17g", kv.second);
    os << kv.first << " " << buf << "\n";
  }
  return os.str();
}

void MetricReport::save_kv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("MetricReport::save_kv: cannot open " + path);
  out << to_kv_text();
}

void save_csv(const std::vector<MetricReport>& rows, const std::string& path) {
  if (rows.empty()) throw std::invalid_argument("save_csv: no rows");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_csv: cannot open " + path);
  for (std::size_t i = 0; i < rows[0].values.size(); ++i)
    out << rows[0].values[i].first << (i + 1 < rows[0].values.size() ? "," : "");
  out << "\n";
  char buf[32];
  for (const MetricReport& r : rows) {
    for (std::size_t i = 0; i < r.values.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", r.values[i].second);
      out << buf << (i + 1 < r.values.size() ? "," : "");
    }
    out << "\n";
  }
}

SplitEvaluation evaluate_split(const Checkpoint& model, const Dataset& eval_set,
                               const ExperimentConfig& cfg, Rng& rng) {
  SplitEvaluation ev;
  ev.latents.reserve(eval_set.size());
  for (const TimeSeries& s : eval_set.items)
    ev.latents.push_back(model.encoders.compose_latent(s));
  ev.preds.reserve(eval_set.size());
  for (const std::vector<double>& z : ev.latents) ev.preds.push_back(model.predictor.predict(z));

  ev.S = distance_matrix(model.predictor, ev.latents, cfg.similarity_steps);
  Rng cluster_rng = rng.fork(2000);
  ev.trace = tphenotype_cluster(ev.preds, ev.S, cfg.cluster, cluster_rng);

  MetricReport& rep = ev.report;
  const Clustering& best = ev.trace.best;

  const bool has_truth =
      std::all_of(eval_set.items.begin(), eval_set.items.end(),
                  [](const TimeSeries& s) { return s.truth_cluster.has_value(); });
  if (has_truth) {
    std::vector<int> truth;
    truth.reserve(eval_set.size());
    for (const TimeSeries& s : eval_set.items) truth.push_back(*s.truth_cluster);
    rep.set("purity", metrics::purity(best.assignments, truth));
    rep.set("rand", metrics::adjusted_rand(best.assignments, truth));
    rep.set("nmi", metrics::nmi(best.assignments, truth));
  }

  double ausil_v = 0.0;
  {
    const int m_max = metrics::default_ausil_m(best.assignments);
    ausil_v = metrics::ausil(ev.latents, best.assignments, m_max);
    rep.set("ausil", ausil_v);
  }

  if (eval_set.labeled()) {
    std::vector<int> labels;
    labels.reserve(eval_set.size());
    for (const TimeSeries& s : eval_set.items) labels.push_back(*s.label);
    const metrics::RocPr rp = metrics::auroc_auprc(ev.preds, labels, eval_set.dim_y);
    rep.set("auroc", rp.auroc);
    rep.set("auprc", rp.auprc);
    long hits = 0;
    for (std::size_t i = 0; i < ev.preds.size(); ++i) {
      const auto arg = std::max_element(ev.preds[i].begin(), ev.preds[i].end());
      if (static_cast<int>(arg - ev.preds[i].begin()) == labels[i]) ++hits;
    }
    rep.set("accuracy", static_cast<double>(hits) / static_cast<double>(ev.preds.size()));
    rep.set("h_roc", metrics::h_score(rp.auroc, ausil_v));
    rep.set("h_prc", metrics::h_score(rp.auprc, ausil_v));
  }

  rep.set("delta", best.delta);
  rep.set("objective", best.objective);
  rep.set("fallback", static_cast<double>(best.fallback.size()));
  rep.set("repairs", static_cast<double>(ev.trace.repair_events));
  rep.set("iterations", static_cast<double>(ev.trace.iterations));
  return ev;
}

MetricReport aggregate_reports(const std::vector<MetricReport>& reports) {
  if (reports.empty()) throw std::invalid_argument("aggregate_reports: no reports");
  MetricReport agg;
  for (const auto& kv : reports[0].values) {
    double mean = 0.0;
    for (const MetricReport& r : reports) mean += r.get(kv.first);
    mean /= static_cast<double>(reports.size());
    double var = 0.0;
    for (const MetricReport& r : reports) {
      const double d = r.get(kv.first) - mean;
      var += d * d;
    }
    var /= static_cast<double>(reports.size());
    agg.set(kv.first + "_mean", mean);
    agg.set(kv.first + "_std", std::sqrt(var));
  }
  return agg;
}

ExperimentOutcome run_full_experiment(const ExperimentConfig& cfg) {
  ExperimentOutcome out;
  for (std::uint64_t seed : cfg.seeds) {
    Rng rng(seed);
    Rng data_rng = rng.fork(0);
    const Dataset data = make_dataset(cfg, data_rng);
    Rng split_rng = rng.fork(10);
    const SplitResult sr = split(data, cfg.fractions, split_rng);
    Rng fit_rng = rng.fork(20);
    const Checkpoint model = fit_pipeline(sr.train, sr.val, cfg, fit_rng);
    Rng eval_rng = rng.fork(30);
    const SplitEvaluation ev = evaluate_split(model, sr.test, cfg, eval_rng);
    MetricReport rep = ev.report;
    rep.set("seed", static_cast<double>(seed));
    out.per_seed.push_back(std::move(rep));
  }
  out.aggregate = aggregate_reports(out.per_seed);
  return out;
}

SelectKOutcome run_select_k(const ExperimentConfig& cfg, const Dataset& data,
                            const std::vector<int>& candidates) {
  if (candidates.empty()) throw std::invalid_argument("run_select_k: no candidates");
  if (!data.labeled()) throw std::invalid_argument("run_select_k: dataset must be labeled");

  constexpr int kFolds = 3;
  Rng rng(cfg.seeds[0]);
  std::vector<int> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle_rng = rng.fork(1);
  shuffle_rng.shuffle(order);

  std::vector<std::vector<double>> scores(candidates.size());
  for (int fold = 0; fold < kFolds; ++fold) {
    Dataset test_fold, rest;
    test_fold.dim_x = rest.dim_x = data.dim_x;
    test_fold.dim_y = rest.dim_y = data.dim_y;
    test_fold.statics = rest.statics = data.statics;
    test_fold.provenance = rest.provenance = data.provenance;
    for (std::size_t i = 0; i < order.size(); ++i) {
      const TimeSeries& s = data.items[static_cast<std::size_t>(order[i])];
      if (static_cast<int>(i % kFolds) == fold)
        test_fold.items.push_back(s);
      else
        rest.items.push_back(s);
    }
    // Carve a validation share out of the training fold.
    Rng split_rng = rng.fork(100 + static_cast<std::uint64_t>(fold));
    const SplitResult sr = split(rest, {0.7, 0.15, 0.15}, split_rng);
    Dataset train_fold = sr.train;
    for (const TimeSeries& s : sr.test.items) train_fold.items.push_back(s);

    Rng fit_rng = rng.fork(200 + static_cast<std::uint64_t>(fold));
    const Checkpoint model = fit_pipeline(train_fold, sr.val, cfg, fit_rng);

    // Latents, predictions and distances are K-independent; reuse them.
    std::vector<std::vector<double>> latents;
    for (const TimeSeries& s : test_fold.items)
      latents.push_back(model.encoders.compose_latent(s));
    std::vector<LabelDistribution> preds;
    for (const std::vector<double>& z : latents) preds.push_back(model.predictor.predict(z));
    const DistanceMatrix S = distance_matrix(model.predictor, latents, cfg.similarity_steps);
    std::vector<int> labels;
    for (const TimeSeries& s : test_fold.items) labels.push_back(*s.label);
    const metrics::RocPr rp = metrics::auroc_auprc(preds, labels, test_fold.dim_y);

    for (std::size_t ci = 0; ci < candidates.size(); ++ci) {
      ClusterConfig cc = cfg.cluster;
      cc.k = candidates[ci];
      Rng cluster_rng = rng.fork(300 + static_cast<std::uint64_t>(fold) * 10 + ci);
      const TPhenotypeTrace trace = tphenotype_cluster(preds, S, cc, cluster_rng);
      const int m_max = metrics::default_ausil_m(trace.best.assignments);
      const double ausil_v = metrics::ausil(latents, trace.best.assignments, m_max);
      scores[ci].push_back(metrics::h_score(rp.auprc, ausil_v));
    }
  }

  SelectKOutcome out;
  std::vector<double> mean_scores(candidates.size(), 0.0);
  for (std::size_t ci = 0; ci < candidates.size(); ++ci) {
    for (double v : scores[ci]) mean_scores[ci] += v;
    mean_scores[ci] /= static_cast<double>(scores[ci].size());
    out.per_k.emplace_back(candidates[ci], mean_scores[ci]);
  }
  out.chosen = select_k(candidates, [&](int k) {
    for (std::size_t ci = 0; ci < candidates.size(); ++ci)
      if (candidates[ci] == k) return mean_scores[ci];
    return 0.0;
  });
  return out;
}

void write_manifest(const std::string& path, const std::string& command,
                    const std::string& args_json, const ExperimentConfig& cfg,
                    double wall_seconds, const std::vector<std::string>& outputs) {
  json doc = {{"format", "tphenotype-manifest"},
              {"version", 1},
              {"command", command},
              {"args", json::parse(args_json)},
              {"config", json::parse(config_to_json_string(cfg, -1))},
              {"config_hash", config_hash(cfg)},
              {"library_version", kVersion},
              {"wall_time_s", wall_seconds},
              {"outputs", outputs}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_manifest: cannot open " + path);
  out << doc.dump(2) << "\n";
}

}  // namespace tphenotype

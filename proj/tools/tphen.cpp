// Command-line driver: data generation, training, clustering, evaluation and
// K selection, with a manifest written next to every output so any run can be
// replayed bit-exactly via `tphen rerun`.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tphenotype/checkpoint.hpp"
#include "tphenotype/clustering.hpp"
#include "tphenotype/data.hpp"
#include "tphenotype/experiment.hpp"
#include "tphenotype/metrics.hpp"
#include "tphenotype/similarity.hpp"
#include "tphenotype/version.hpp"

#include "svg.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tphenotype;

namespace {

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

std::string default_outdir() {
  const char* env = std::getenv("TPHENOTYPE_OUTDIR");
  return env && *env ? env : ".";
}

// --- gen ---------------------------------------------------------------------

struct GenArgs {
  std::string generator = "synthetic";
  int n = 0;
  std::uint64_t seed = 0;
  std::string out;
  std::optional<double> noise_std;
  std::optional<double> phi_rate;
  std::optional<int> n_obs;
};

void run_gen(const GenArgs& a) {
  Timer timer;
  if (a.n < 1) throw std::invalid_argument("gen: --n must be >= 1");
  ExperimentConfig cfg;
  cfg.generator = a.generator;
  cfg.data_n = a.n;
  cfg.seeds = {a.seed};
  if (a.noise_std) {
    cfg.synthetic.noise_std = *a.noise_std;
    cfg.toy.noise_std = *a.noise_std;
  }
  if (a.phi_rate) {
    cfg.synthetic.phi_rate = *a.phi_rate;
    cfg.toy.phi_rate = *a.phi_rate;
  }
  if (a.n_obs) {
    cfg.synthetic.n_obs = *a.n_obs;
    cfg.toy.n_obs = *a.n_obs;
  }
  if (cfg.generator != "synthetic" && cfg.generator != "toy")
    throw std::invalid_argument("gen: --generator must be synthetic or toy");

  Rng rng(a.seed);
  const Dataset ds = make_dataset(cfg, rng);
  save_dataset(ds, a.out);

  const json args = {{"generator", a.generator}, {"n", a.n},
                     {"seed", a.seed},           {"out", fs::path(a.out).filename().string()},
                     {"noise_std", a.noise_std ? json(*a.noise_std) : json(nullptr)},
                     {"phi_rate", a.phi_rate ? json(*a.phi_rate) : json(nullptr)},
                     {"n_obs", a.n_obs ? json(*a.n_obs) : json(nullptr)}};
  write_manifest(a.out + ".manifest.json", "gen", args.dump(), cfg, timer.seconds(),
                 {fs::path(a.out).filename().string()});
  std::cout << "wrote " << a.out << " (" << ds.size() << " series)\n";
}

// --- train ---------------------------------------------------------------------

struct TrainArgs {
  std::string config;
  std::string data;
  std::string out;  // directory
};

void run_train(const TrainArgs& a) {
  Timer timer;
  const ExperimentConfig cfg = load_config_file(a.config);
  const Dataset data = load_dataset(a.data);
  fs::create_directories(a.out);

  Rng rng(cfg.seeds[0]);
  Rng split_rng = rng.fork(10);
  const SplitResult sr = split(data, cfg.fractions, split_rng);
  Rng fit_rng = rng.fork(20);
  PipelineLogs logs;
  Checkpoint ckpt = fit_pipeline(sr.train, sr.val, cfg, fit_rng, &logs);

  const fs::path out(a.out);
  save_checkpoint(ckpt, (out / "checkpoint.json").string());
  save_dataset(sr.train, (out / "split_train.jsonl").string());
  save_dataset(sr.val, (out / "split_val.jsonl").string());
  save_dataset(sr.test, (out / "split_test.jsonl").string());

  json tlog = json::array();
  for (const EncoderTrainLog& l : logs.encoder_logs)
    tlog.push_back({{"epoch_train_loss", l.epoch_train_loss},
                    {"epoch_val_mse", l.epoch_val_mse},
                    {"best_epoch", l.best_epoch}});
  json full_log = {{"encoders", tlog}, {"predictor_ce", logs.predictor_log.epoch_train_ce}};
  std::ofstream((out / "train_log.json").string()) << full_log.dump(2) << "\n";

  const json args = {{"config", a.config}, {"data", a.data}};
  write_manifest((out / "manifest.json").string(), "train", args.dump(), cfg, timer.seconds(),
                 {"checkpoint.json", "split_train.jsonl", "split_val.jsonl", "split_test.jsonl",
                  "train_log.json"});
  std::cout << "wrote " << (out / "checkpoint.json").string() << "\n";
}

// --- cluster ---------------------------------------------------------------------

struct ClusterArgs {
  std::string checkpoint;
  std::string data;
  int k = 0;
  std::string out;  // clustering document
  std::string export_s;
  std::string export_graph;
};

void run_cluster(const ClusterArgs& a) {
  Timer timer;
  const Checkpoint ckpt = load_checkpoint(a.checkpoint);
  const Dataset data = load_dataset(a.data);
  if (data.dim_x != ckpt.encoders.layout.dim_x) {
    std::ostringstream msg;
    msg << "cluster: dataset dim_x=" << data.dim_x << " (" << a.data
        << ") does not match checkpoint layout dim_x=" << ckpt.encoders.layout.dim_x << " ("
        << a.checkpoint << ")";
    throw std::runtime_error(msg.str());
  }
  ExperimentConfig cfg = parse_config_json(ckpt.meta_json);
  if (a.k >= 2) cfg.cluster.k = a.k;

  std::vector<std::vector<double>> latents;
  for (const TimeSeries& s : data.items) latents.push_back(ckpt.encoders.compose_latent(s));
  std::vector<LabelDistribution> preds;
  for (const std::vector<double>& z : latents) preds.push_back(ckpt.predictor.predict(z));

  const DistanceMatrix S = distance_matrix(ckpt.predictor, latents, cfg.similarity_steps);
  Rng rng(cfg.seeds[0]);
  Rng cluster_rng = rng.fork(2000);
  const TPhenotypeTrace trace = tphenotype_cluster(preds, S, cfg.cluster, cluster_rng);
  trace.best.save(a.out);

  std::vector<std::string> outputs = {fs::path(a.out).filename().string()};
  if (!a.export_s.empty()) {
    S.save_csv(a.export_s);
    outputs.push_back(fs::path(a.export_s).filename().string());
  }
  if (!a.export_graph.empty()) {
    build_graph(S, trace.best.delta).save_edge_list(a.export_graph);
    outputs.push_back(fs::path(a.export_graph).filename().string());
  }

  const json args = {{"checkpoint", a.checkpoint},
                     {"data", a.data},
                     {"k", cfg.cluster.k},
                     {"out", fs::path(a.out).filename().string()},
                     {"export_s", a.export_s.empty() ? json(nullptr) : json(fs::path(a.export_s).filename().string())},
                     {"export_graph", a.export_graph.empty() ? json(nullptr) : json(fs::path(a.export_graph).filename().string())}};
  write_manifest(a.out + ".manifest.json", "cluster", args.dump(), cfg, timer.seconds(), outputs);
  std::cout << "wrote " << a.out << " (J=" << trace.best.objective
            << ", delta=" << trace.best.delta << ", fallback=" << trace.best.fallback.size()
            << ")\n";
}

// --- eval ---------------------------------------------------------------------

struct EvalArgs {
  std::string clusters;
  std::string data;
  std::string checkpoint;
  std::string out;  // directory
};

void run_eval(const EvalArgs& a) {
  Timer timer;
  const Clustering clustering = Clustering::load(a.clusters);
  const Dataset data = load_dataset(a.data);
  const Checkpoint ckpt = load_checkpoint(a.checkpoint);
  if (clustering.assignments.size() != data.size())
    throw std::runtime_error("eval: clustering covers " +
                             std::to_string(clustering.assignments.size()) + " samples but " +
                             a.data + " has " + std::to_string(data.size()));
  fs::create_directories(a.out);
  const ExperimentConfig cfg = parse_config_json(ckpt.meta_json);
  const int k = static_cast<int>(clustering.centroids.size());

  std::vector<std::vector<double>> latents;
  for (const TimeSeries& s : data.items) latents.push_back(ckpt.encoders.compose_latent(s));
  std::vector<LabelDistribution> preds;
  for (const std::vector<double>& z : latents) preds.push_back(ckpt.predictor.predict(z));

  MetricReport rep;
  const bool has_truth = std::all_of(data.items.begin(), data.items.end(),
                                     [](const TimeSeries& s) { return s.truth_cluster.has_value(); });
  if (has_truth) {
    std::vector<int> truth;
    for (const TimeSeries& s : data.items) truth.push_back(*s.truth_cluster);
    rep.set("purity", metrics::purity(clustering.assignments, truth));
    rep.set("rand", metrics::adjusted_rand(clustering.assignments, truth));
    rep.set("nmi", metrics::nmi(clustering.assignments, truth));
  }
  const double ausil_v =
      metrics::ausil(latents, clustering.assignments, metrics::default_ausil_m(clustering.assignments));
  rep.set("ausil", ausil_v);
  if (data.labeled()) {
    std::vector<int> labels;
    for (const TimeSeries& s : data.items) labels.push_back(*s.label);
    const metrics::RocPr rp = metrics::auroc_auprc(preds, labels, data.dim_y);
    rep.set("auroc", rp.auroc);
    rep.set("auprc", rp.auprc);
    rep.set("h_roc", metrics::h_score(rp.auroc, ausil_v));
    rep.set("h_prc", metrics::h_score(rp.auprc, ausil_v));
  }
  rep.set("delta", clustering.delta);
  rep.set("objective", clustering.objective);
  rep.set("fallback", static_cast<double>(clustering.fallback.size()));

  const fs::path out(a.out);
  rep.save_kv((out / "metrics.kv").string());
  save_csv({rep}, (out / "metrics.csv").string());
  plot::write_cluster_trajectories((out / "clusters.svg").string(), data, clustering.assignments, k);

  const json args = {{"clusters", a.clusters}, {"data", a.data}, {"checkpoint", a.checkpoint}};
  write_manifest((out / "manifest.json").string(), "eval", args.dump(), cfg, timer.seconds(),
                 {"metrics.kv", "metrics.csv", "clusters.svg"});
  std::cout << rep.to_kv_text();
}

// --- select-k ---------------------------------------------------------------------

struct SelectKArgs {
  std::string config;
  std::string data;
  std::vector<int> candidates;
  std::string out;  // directory (optional table/manifest)
};

void run_select_k_cmd(const SelectKArgs& a) {
  Timer timer;
  const ExperimentConfig cfg = load_config_file(a.config);
  const Dataset data = load_dataset(a.data);
  const std::vector<int> cands = a.candidates.empty() ? cfg.k_candidates : a.candidates;
  if (cands.size() < 1) throw std::invalid_argument("select-k: need at least one candidate");

  const SelectKOutcome outcome = run_select_k(cfg, data, cands);
  std::cout << "k,h_prc\n";
  for (const auto& [k, score] : outcome.per_k) std::cout << k << "," << score << "\n";
  std::cout << "selected " << outcome.chosen << "\n";

  if (!a.out.empty()) {
    fs::create_directories(a.out);
    const fs::path out(a.out);
    std::ofstream table((out / "select_k.csv").string());
    table << "k,h_prc\n";
    for (const auto& [k, score] : outcome.per_k) table << k << "," << score << "\n";
    table << "# selected " << outcome.chosen << "\n";
    const json args = {{"config", a.config}, {"data", a.data}, {"candidates", cands}};
    write_manifest((out / "manifest.json").string(), "select-k", args.dump(), cfg,
                   timer.seconds(), {"select_k.csv"});
  }
}

// --- rerun ---------------------------------------------------------------------

void run_rerun(const std::string& manifest_path, const std::string& outdir) {
  std::ifstream in(manifest_path);
  if (!in) throw std::runtime_error("rerun: cannot open " + manifest_path);
  json doc;
  in >> doc;
  if (doc.value("format", "") != "tphenotype-manifest")
    throw std::runtime_error("rerun: not a manifest: " + manifest_path);
  const std::string command = doc.at("command").get<std::string>();
  const json args = doc.at("args");
  fs::create_directories(outdir);
  const fs::path out(outdir);

  if (command == "gen") {
    GenArgs a;
    a.generator = args.at("generator").get<std::string>();
    a.n = args.at("n").get<int>();
    a.seed = args.at("seed").get<std::uint64_t>();
    a.out = (out / args.at("out").get<std::string>()).string();
    if (!args.at("noise_std").is_null()) a.noise_std = args.at("noise_std").get<double>();
    if (!args.at("phi_rate").is_null()) a.phi_rate = args.at("phi_rate").get<double>();
    if (!args.at("n_obs").is_null()) a.n_obs = args.at("n_obs").get<int>();
    run_gen(a);
  } else if (command == "train") {
    TrainArgs a;
    a.config = manifest_path;  // embedded config is authoritative
    a.data = args.at("data").get<std::string>();
    a.out = outdir;
    run_train(a);
  } else if (command == "cluster") {
    ClusterArgs a;
    a.checkpoint = args.at("checkpoint").get<std::string>();
    a.data = args.at("data").get<std::string>();
    a.k = args.at("k").get<int>();
    a.out = (out / args.at("out").get<std::string>()).string();
    if (!args.at("export_s").is_null())
      a.export_s = (out / args.at("export_s").get<std::string>()).string();
    if (!args.at("export_graph").is_null())
      a.export_graph = (out / args.at("export_graph").get<std::string>()).string();
    run_cluster(a);
  } else if (command == "eval") {
    EvalArgs a;
    a.clusters = args.at("clusters").get<std::string>();
    a.data = args.at("data").get<std::string>();
    a.checkpoint = args.at("checkpoint").get<std::string>();
    a.out = outdir;
    run_eval(a);
  } else if (command == "select-k") {
    SelectKArgs a;
    a.config = manifest_path;
    a.data = args.at("data").get<std::string>();
    a.candidates = args.at("candidates").get<std::vector<int>>();
    a.out = outdir;
    run_select_k_cmd(a);
  } else {
    throw std::runtime_error("rerun: unknown command in manifest: " + command);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Laplace-embedding temporal phenotyping toolkit"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  GenArgs gen_args;
  double gen_noise = -1.0, gen_phi_rate = -1.0;
  int gen_n_obs = -1;
  CLI::App* gen = app.add_subcommand("gen", "Generate a benchmark dataset file");
  gen->add_option("--generator", gen_args.generator, "synthetic | toy")->required();
  gen->add_option("--n", gen_args.n, "number of series")->required();
  gen->add_option("--seed", gen_args.seed, "rng seed")->required();
  gen->add_option("--out", gen_args.out, "output dataset file")->required();
  gen->add_option("--noise-std", gen_noise, "override observation noise std");
  gen->add_option("--phi-rate", gen_phi_rate, "override exponential delay rate");
  gen->add_option("--n-obs", gen_n_obs, "override observations per series");

  TrainArgs train_args;
  CLI::App* train = app.add_subcommand("train", "Split the dataset and train encoders + predictor");
  train->add_option("--config", train_args.config, "experiment config (or manifest)")->required();
  train->add_option("--data", train_args.data, "dataset file")->required();
  train->add_option("--out", train_args.out, "output directory")->default_val(default_outdir());

  ClusterArgs cluster_args;
  CLI::App* cluster = app.add_subcommand("cluster", "Discover clusters on a dataset");
  cluster->add_option("--checkpoint", cluster_args.checkpoint)->required();
  cluster->add_option("--data", cluster_args.data)->required();
  cluster->add_option("--k", cluster_args.k, "number of clusters (default: config)");
  cluster->add_option("--out", cluster_args.out, "output clustering document")->required();
  cluster->add_option("--export-s", cluster_args.export_s, "also write the distance matrix CSV");
  cluster->add_option("--export-graph", cluster_args.export_graph,
                      "also write the final similarity-graph edge list");

  EvalArgs eval_args;
  CLI::App* eval = app.add_subcommand("eval", "Metric report and plots for a clustering");
  eval->add_option("--clusters", eval_args.clusters)->required();
  eval->add_option("--data", eval_args.data)->required();
  eval->add_option("--checkpoint", eval_args.checkpoint)->required();
  eval->add_option("--out", eval_args.out, "output directory")->default_val(default_outdir());

  SelectKArgs selectk_args;
  CLI::App* selectk = app.add_subcommand("select-k", "Cross-validated cluster-count selection");
  selectk->add_option("--config", selectk_args.config)->required();
  selectk->add_option("--data", selectk_args.data)->required();
  selectk->add_option("--candidates", selectk_args.candidates, "candidate K values");
  selectk->add_option("--out", selectk_args.out, "output directory (optional)");

  std::string rerun_manifest, rerun_outdir;
  CLI::App* rerun = app.add_subcommand("rerun", "Replay a recorded run from its manifest");
  rerun->add_option("--manifest", rerun_manifest)->required();
  rerun->add_option("--outdir", rerun_outdir, "directory for the replayed outputs")
      ->default_val(default_outdir());

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) {
      if (gen_noise >= 0.0) gen_args.noise_std = gen_noise;
      if (gen_phi_rate > 0.0) gen_args.phi_rate = gen_phi_rate;
      if (gen_n_obs > 0) gen_args.n_obs = gen_n_obs;
      run_gen(gen_args);
    } else if (train->parsed()) {
      run_train(train_args);
    } else if (cluster->parsed()) {
      run_cluster(cluster_args);
    } else if (eval->parsed()) {
      run_eval(eval_args);
    } else if (selectk->parsed()) {
      run_select_k_cmd(selectk_args);
    } else if (rerun->parsed()) {
      run_rerun(rerun_manifest, rerun_outdir);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

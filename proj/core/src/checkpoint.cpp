#include "tphenotype/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace tphenotype {

using nlohmann::json;

namespace {
json ranges_to_json(const EmbeddingRanges& r) {
  return {{"r_max", r.r_max},
          {"freq_max", r.freq_max},
          {"c_max", r.c_max},
          {"delta_pole", r.delta_pole}};
}

EmbeddingRanges ranges_from_json(const json& j) {
  EmbeddingRanges r;
  r.r_max = j.at("r_max").get<double>();
  r.freq_max = j.at("freq_max").get<double>();
  r.c_max = j.at("c_max").get<double>();
  r.delta_pole = j.at("delta_pole").get<double>();
  return r;
}
}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  const LatentLayout& lay = ckpt.encoders.layout;
  json doc;
  doc["format"] = "tphenotype-checkpoint";
  doc["version"] = 1;
  doc["layout"] = {{"dim_x", lay.dim_x},
                   {"n", lay.n},
                   {"d", lay.d},
                   {"statics", std::vector<bool>(lay.statics.begin(), lay.statics.end())},
                   {"ranges", ranges_to_json(lay.ranges)}};
  doc["dim_y"] = ckpt.dim_y;

  json encs = json::array();
  int enc_idx = 0;
  for (int f = 0; f < lay.dim_x; ++f) {
    if (lay.statics[static_cast<std::size_t>(f)]) continue;
    const LaplaceEncoder& e = ckpt.encoders.encoders[static_cast<std::size_t>(enc_idx++)];
    encs.push_back({{"feature", f},
                    {"hidden", e.spec.hidden},
                    {"shape", {{"gru", e.spec.gru_count()},
                               {"head", e.spec.param_count() - e.spec.gru_count()}}},
                    {"params", e.params}});
  }
  doc["encoders"] = encs;

  doc["predictor"] = {{"input", ckpt.predictor.spec.input},
                      {"hidden", ckpt.predictor.spec.hidden},
                      {"out", ckpt.predictor.spec.out},
                      {"params", ckpt.predictor.params},
                      {"scales", ckpt.predictor.scales},
                      {"layout_sig", ckpt.predictor.layout_sig}};
  doc["meta"] = json::parse(ckpt.meta_json);

  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
  out << doc.dump(2) << "\n";
  if (!out) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw std::runtime_error("load_checkpoint: malformed JSON in " + path + ": " + e.what());
  }
  if (doc.value("format", "") != "tphenotype-checkpoint")
    throw std::runtime_error("load_checkpoint: not a checkpoint file: " + path);

  Checkpoint ckpt;
  const json& lj = doc.at("layout");
  LatentLayout lay;
  lay.dim_x = lj.at("dim_x").get<int>();
  lay.n = lj.at("n").get<int>();
  lay.d = lj.at("d").get<int>();
  for (bool b : lj.at("statics").get<std::vector<bool>>()) lay.statics.push_back(b);
  lay.ranges = ranges_from_json(lj.at("ranges"));
  ckpt.encoders.layout = lay;
  ckpt.dim_y = doc.at("dim_y").get<int>();

  for (const json& ej : doc.at("encoders")) {
    LaplaceEncoder e;
    e.spec.n = lay.n;
    e.spec.d = lay.d;
    e.spec.hidden = ej.at("hidden").get<int>();
    e.spec.ranges = lay.ranges;
    e.params = ej.at("params").get<std::vector<double>>();
    if (e.params.size() != static_cast<std::size_t>(e.spec.param_count()))
      throw std::runtime_error("load_checkpoint: encoder weight count mismatch");
    ckpt.encoders.encoders.push_back(std::move(e));
  }

  const json& pj = doc.at("predictor");
  ckpt.predictor.spec =
      PredictorSpec{pj.at("input").get<int>(), pj.at("hidden").get<int>(), pj.at("out").get<int>()};
  ckpt.predictor.params = pj.at("params").get<std::vector<double>>();
  ckpt.predictor.scales = pj.at("scales").get<std::vector<double>>();
  ckpt.predictor.layout_sig = pj.at("layout_sig").get<std::string>();
  if (ckpt.predictor.params.size() != static_cast<std::size_t>(ckpt.predictor.spec.param_count()))
    throw std::runtime_error("load_checkpoint: predictor weight count mismatch");
  ckpt.meta_json = doc.at("meta").dump();
  return ckpt;
}

}  // namespace tphenotype

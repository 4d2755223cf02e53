#include "stg/results.hpp"

#include <charconv>
#include <cstdio>
#include <stdexcept>

#include "stg/manifest.hpp"
#include "stg/pgm.hpp"

namespace stg {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

json config_to_json(const EngineConfig& cfg) {
  json j;
  j["alpha"] = cfg.alpha;
  j["beta"] = cfg.beta;
  j["lambda1"] = cfg.lambda1;
  j["lambda2"] = cfg.lambda2;
  j["iters"] = cfg.spatial_iters;
  j["thr"] = cfg.thr;
  j["history_n"] = cfg.history_n;
  j["margin"] = cfg.margin;
  j["key_size"] = {cfg.key_height, cfg.key_width};
  j["tau_assign"] = cfg.tau_assign;
  j["gamma"] = cfg.gamma;
  j["seed"] = cfg.seed;
  j["max_memory"] = cfg.max_memory ? json(*cfg.max_memory) : json(nullptr);
  j["motion"] = cfg.use_motion;
  j["spatial"] = cfg.use_spatial;
  j["temporal"] = cfg.use_temporal;
  return j;
}

EngineConfig config_from_json(const json& j) {
  EngineConfig c;
  c.alpha = j.at("alpha").get<double>();
  c.beta = j.at("beta").get<double>();
  c.lambda1 = j.at("lambda1").get<double>();
  c.lambda2 = j.at("lambda2").get<double>();
  c.spatial_iters = j.at("iters").get<int>();
  c.thr = j.at("thr").get<double>();
  c.history_n = j.at("history_n").get<int>();
  c.margin = j.at("margin").get<double>();
  c.key_height = j.at("key_size").at(0).get<int>();
  c.key_width = j.at("key_size").at(1).get<int>();
  c.tau_assign = j.at("tau_assign").get<double>();
  c.gamma = j.at("gamma").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  if (!j.at("max_memory").is_null()) c.max_memory = j.at("max_memory").get<std::size_t>();
  c.use_motion = j.at("motion").get<bool>();
  c.use_spatial = j.at("spatial").get<bool>();
  c.use_temporal = j.at("temporal").get<bool>();
  return c;
}

std::vector<std::string> config_to_flags(const EngineConfig& cfg) {
  std::vector<std::string> f = {
      "--alpha",      format_double(cfg.alpha),
      "--beta",       format_double(cfg.beta),
      "--lambda1",    format_double(cfg.lambda1),
      "--lambda2",    format_double(cfg.lambda2),
      "--iters",      std::to_string(cfg.spatial_iters),
      "--thr",        format_double(cfg.thr),
      "--history-n",  std::to_string(cfg.history_n),
      "--margin",     format_double(cfg.margin),
      "--key-size",   std::to_string(cfg.key_height) + "x" + std::to_string(cfg.key_width),
      "--tau-assign", format_double(cfg.tau_assign),
      "--gamma",      format_double(cfg.gamma),
      "--seed",       std::to_string(cfg.seed),
  };
  if (cfg.max_memory) {
    f.push_back("--max-memory");
    f.push_back(std::to_string(*cfg.max_memory));
  }
  if (!cfg.use_motion) f.push_back("--no-motion");
  if (!cfg.use_spatial) f.push_back("--no-spatial");
  if (!cfg.use_temporal) f.push_back("--no-temporal");
  return f;
}

json frame_report(const FrameResult& frame) {
  json fj;
  fj["index"] = frame.index;
  json objs = json::object();
  for (const auto& [id, o] : frame.objects) {
    json oj;
    oj["fallback"] = o.fallback;
    oj["refine_empty"] = o.refine_empty;
    oj["assigned"] = o.assigned;
    oj["selected"] = o.selected ? json(*o.selected) : json(nullptr);
    oj["foreground"] = count_foreground(o.mask);
    if (o.prediction) {
      const BBox b = o.prediction->box();
      oj["prediction"] = {b.x_min, b.y_min, b.x_max, b.y_max};
    }
    json scores = json::array();
    for (const auto& s : o.scores) {
      scores.push_back({{"box", s.box_term}, {"prop", s.prop_term}, {"total", s.total}});
    }
    oj["scores"] = std::move(scores);
    if (o.temporal_state_mean) {
      oj["temporal"] = {{"state_mean", *o.temporal_state_mean},
                        {"message_mean", *o.temporal_message_mean}};
    }
    if (o.loss) {
      oj["loss"] = {{"distance", o.loss->distance}, {"bce", o.loss->bce}, {"total", o.loss->total}};
    }
    objs[std::to_string(id)] = std::move(oj);
  }
  fj["objects"] = std::move(objs);
  return fj;
}

json score_report(const SequenceScore& s) {
  json j;
  j["J_mean"] = s.j_mean;
  j["F_mean"] = s.f_mean;
  j["G_mean"] = s.g_mean;
  json per = json::object();
  for (const auto& [id, v] : s.j) per[std::to_string(id)] = {{"J", v}, {"F", s.f.at(id)}};
  j["per_object"] = std::move(per);
  return j;
}

void write_results(const fs::path& dir, const std::string& video_name, const EngineConfig& cfg,
                   const std::vector<FrameResult>& results, const std::optional<SequenceScore>& score) {
  fs::create_directories(dir / "masks");
  fs::create_directories(dir / "labels");
  json report;
  report["video"] = video_name;
  report["config"] = config_to_json(cfg);
  report["cli_flags"] = config_to_flags(cfg);
  json frames = json::array();
  json timing;
  timing["threads"] = cfg.threads;
  json per_frame = json::array();
  for (const auto& fr : results) {
    for (const auto& [id, o] : fr.objects) {
      write_mask(dir / "masks" / (frame_object_name(fr.index, id) + ".pgm"), o.mask);
    }
    char name[32];
    std::snprintf(name, sizeof(name), "f%05d.pgm", fr.index);
    write_label_map(dir / "labels" / name, fr.labels);
    frames.push_back(frame_report(fr));
    per_frame.push_back({{"index", fr.index}, {"ms", fr.elapsed_ms}});
  }
  report["frames"] = std::move(frames);
  if (score) report["evaluation"] = score_report(*score);
  timing["frames"] = std::move(per_frame);
  write_file(dir / "report.json", report.dump(2) + "\n");
  write_file(dir / "timing.json", timing.dump(2) + "\n");
}

MaskSequence read_predictions(const fs::path& dir, int frames, const std::vector<int>& object_ids) {
  MaskSequence out(static_cast<std::size_t>(frames));
  for (int t = 0; t < frames; ++t) {
    for (int id : object_ids) {
      const fs::path p = dir / "masks" / (frame_object_name(t, id) + ".pgm");
      if (!fs::exists(p)) {
        throw std::runtime_error("prediction missing for frame " + std::to_string(t) + ", object " +
                                 std::to_string(id) + ": " + p.string());
      }
      out[static_cast<std::size_t>(t)][id] = read_mask(p);
    }
  }
  return out;
}

MaskSequence predictions_of(const std::vector<FrameResult>& results) {
  MaskSequence out;
  out.reserve(results.size());
  for (const auto& fr : results) {
    std::map<int, BinaryMask> m;
    for (const auto& [id, o] : fr.objects) m[id] = o.mask;
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace stg

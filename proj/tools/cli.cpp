#include "cli.hpp"

#include <cctype>
#include <charconv>
#include <exception>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "stg/manifest.hpp"
#include "stg/metrics.hpp"
#include "stg/pgm.hpp"
#include "stg/pipeline.hpp"
#include "stg/results.hpp"
#include "stg/synth.hpp"

namespace stg::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Engine flags shared by `run` and `ablate`.
struct EngineFlags {
  EngineConfig cfg;
  std::string key_size;
  std::size_t max_memory = 0;
  bool no_motion = false;
  bool no_spatial = false;
  bool no_temporal = false;
  CLI::Option* max_memory_opt = nullptr;

  void attach(CLI::App& app, bool toggles) {
    app.add_option("--alpha", cfg.alpha, "edge weight on feature cosine")->capture_default_str();
    app.add_option("--beta", cfg.beta, "edge weight on box IoU")->capture_default_str();
    app.add_option("--lambda1", cfg.lambda1, "selection weight on box agreement")->capture_default_str();
    app.add_option("--lambda2", cfg.lambda2, "selection weight on prior agreement")->capture_default_str();
    app.add_option("--iters", cfg.spatial_iters, "spatial message-passing rounds (1..3)")
        ->capture_default_str();
    app.add_option("--thr", cfg.thr, "binarization threshold")->capture_default_str();
    app.add_option("--history-n", cfg.history_n, "motion history window")->capture_default_str();
    app.add_option("--margin", cfg.margin, "memory crop margin")->capture_default_str();
    app.add_option("--key-size", key_size, "memory key grid, HxW or N")->default_str("32x32");
    app.add_option("--tau-assign", cfg.tau_assign, "minimum IoU for proposal assignment")
        ->capture_default_str();
    app.add_option("--gamma", cfg.gamma, "loss weight of the distance term")->capture_default_str();
    app.add_option("--seed", cfg.seed, "echoed in the report")->capture_default_str();
    max_memory_opt = app.add_option("--max-memory", max_memory, "memory bank capacity (>= 2)");
    app.add_option("--threads", cfg.threads, "worker threads per frame")
        ->capture_default_str()
        ->check(CLI::Range(1, 256));
    if (toggles) {
      app.add_flag("--no-motion", no_motion, "anchor on the previous box instead of the prediction");
      app.add_flag("--no-spatial", no_spatial, "skip the spatial graph");
      app.add_flag("--no-temporal", no_temporal, "skip memory refinement");
    }
  }

  EngineConfig resolve() {
    if (!key_size.empty()) {
      const auto [h, w] = parse_key_size(key_size);
      cfg.key_height = h;
      cfg.key_width = w;
    }
    cfg.use_motion = !no_motion;
    cfg.use_spatial = !no_spatial;
    cfg.use_temporal = !no_temporal;
    if (max_memory_opt->count() > 0) {
      if (!cfg.use_temporal) throw UsageError("--max-memory cannot be combined with --no-temporal");
      cfg.max_memory = max_memory;
    }
    cfg.validate();
    return cfg;
  }

  static std::pair<int, int> parse_key_size(const std::string& s) {
    auto parse_int = [&](std::string_view v) {
      int out = 0;
      const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
      if (r.ec != std::errc{} || r.ptr != v.data() + v.size() || out < 1) {
        throw UsageError("--key-size: expected HxW or N with positive integers, got '" + s + "'");
      }
      return out;
    };
    const auto x = s.find_first_of("xX");
    if (x == std::string::npos) {
      const int n = parse_int(s);
      return {n, n};
    }
    return {parse_int(std::string_view(s).substr(0, x)), parse_int(std::string_view(s).substr(x + 1))};
  }
};

bool has_ground_truth(const Video& video) {
  for (const auto& f : video.frames) {
    if (f.ground_truth.size() != video.object_ids.size()) return false;
  }
  return !video.frames.empty();
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

void print_score(std::ostream& out, const SequenceScore& s) {
  for (const auto& [id, js] : s.j) {
    double jm = 0.0;
    double fm = 0.0;
    for (double v : js) jm += v;
    for (double v : s.f.at(id)) fm += v;
    const double n = js.empty() ? 1.0 : static_cast<double>(js.size());
    out << "object " << id << ": J " << fixed(jm / n) << "  F " << fixed(fm / n) << "\n";
  }
  out << "J_M " << fixed(s.j_mean) << "\n"
      << "F_M " << fixed(s.f_mean) << "\n"
      << "G_M " << fixed(s.g_mean) << "\n";
}

std::string slug(const std::string& name) {
  std::string out;
  for (char c : name) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      out.push_back(c);
    } else if (!out.empty() && out.back() != '_') {
      out.push_back('_');
    }
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

int cmd_run(const std::string& manifest, const std::string& out_dir, EngineFlags& flags,
            std::ostream& out) {
  const EngineConfig cfg = flags.resolve();
  const Video video = read_manifest(manifest);
  const auto results = run_video(video, cfg);
  std::optional<SequenceScore> score;
  if (has_ground_truth(video)) score = evaluate_sequence(predictions_of(results), ground_truth_of(video));
  write_results(out_dir, video.name, cfg, results, score);

  std::size_t fallbacks = 0;
  for (const auto& f : results) {
    for (const auto& [id, o] : f.objects) fallbacks += o.fallback ? 1 : 0;
  }
  out << "video " << video.name << ": " << results.size() << " frames, "
      << video.object_ids.size() << " objects, " << fallbacks << " fallbacks\n";
  if (score) print_score(out, *score);
  out << "results written to " << out_dir << "\n";
  return 0;
}

int cmd_eval(const std::string& pred_dir, const std::string& manifest, std::optional<int> tol,
             std::ostream& out) {
  const Video video = read_manifest(manifest);
  if (!has_ground_truth(video)) {
    throw std::runtime_error(manifest + ": ground truth missing for at least one frame/object");
  }
  const auto pred = read_predictions(pred_dir, static_cast<int>(video.frames.size()), video.object_ids);
  print_score(out, evaluate_sequence(pred, ground_truth_of(video), tol));
  return 0;
}

int cmd_synth(const std::string& spec_path, const std::string& out_dir,
              std::optional<std::uint64_t> seed, bool exact, std::ostream& out) {
  SynthSpec spec;
  if (!spec_path.empty()) {
    const std::string text = read_file(spec_path);
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw std::runtime_error(spec_path + ": " + e.what());
    }
    spec = synth_spec_from_json(j);
  }
  if (seed) spec.seed = *seed;
  if (exact) spec = zero_corruption(spec);
  const fs::path manifest = generate(spec, out_dir);
  write_file(fs::path(out_dir) / "synth_spec.json", synth_spec_to_json(spec).dump(2) + "\n");
  out << "manifest written to " << manifest.string() << "\n";
  return 0;
}

int cmd_ablate(const std::string& manifest, const std::string& out_dir, EngineFlags& flags,
               std::ostream& out) {
  const EngineConfig base = flags.resolve();
  const Video video = read_manifest(manifest);
  if (!has_ground_truth(video)) {
    throw std::runtime_error(manifest + ": ablation needs ground truth for every frame and object");
  }
  const MaskSequence gt = ground_truth_of(video);

  json rows = json::array();
  std::ostringstream table;
  table << "| variant | J_M | F_M | G_M | dG vs greedy |\n|---|---|---|---|---|\n";
  std::optional<double> greedy_g;
  for (const auto& v : ablation_grid(base)) {
    const auto results = run_video(video, v.config);
    const SequenceScore s = evaluate_sequence(predictions_of(results), gt);
    write_results(fs::path(out_dir) / slug(v.name), video.name, v.config, results, s);
    if (!greedy_g) greedy_g = s.g_mean;
    table << "| " << v.name << " | " << fixed(s.j_mean) << " | " << fixed(s.f_mean) << " | "
          << fixed(s.g_mean) << " | " << (s.g_mean >= *greedy_g ? "+" : "")
          << fixed(s.g_mean - *greedy_g) << " |\n";
    rows.push_back({{"variant", v.name},
                    {"dir", slug(v.name)},
                    {"config", config_to_json(v.config)},
                    {"j_mean", s.j_mean},
                    {"f_mean", s.f_mean},
                    {"g_mean", s.g_mean}});
  }
  write_file(fs::path(out_dir) / "ablation.json",
             json{{"video", video.name}, {"variants", rows}}.dump(2) + "\n");
  write_file(fs::path(out_dir) / "ablation.md", table.str());
  out << table.str();
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Proposal-graph video object segmentation"};
  app.name("stgnet");
  app.require_subcommand(1);

  std::string manifest;
  std::string out_dir;
  std::string pred_dir;
  std::string spec_path;
  std::uint64_t synth_seed = 0;
  std::optional<int> tol;
  bool exact = false;

  EngineFlags run_flags;
  auto* run = app.add_subcommand("run", "segment every frame of a manifest");
  run->add_option("--manifest", manifest, "input manifest.json")->required();
  run->add_option("--out", out_dir, "output directory")->required();
  run_flags.attach(*run, true);

  auto* eval = app.add_subcommand("eval", "score predicted masks against ground truth");
  eval->add_option("--pred", pred_dir, "directory written by `run`")->required();
  eval->add_option("--manifest", manifest, "manifest with ground truth")->required();
  eval->add_option("--tol", tol, "boundary tolerance in pixels (default: 0.8% of the diagonal)")
      ->check(CLI::NonNegativeNumber);

  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
  synth->add_option("--spec", spec_path, "JSON generator spec (defaults when omitted)");
  synth->add_option("--out", out_dir, "output directory")->required();
  auto* seed_opt = synth->add_option("--seed", synth_seed, "override the generator seed");
  synth->add_flag("--exact", exact, "one exact proposal per object and an exact prior");

  EngineFlags ablate_flags;
  auto* ablate = app.add_subcommand("ablate", "run the stage-toggle grid and tabulate scores");
  ablate->add_option("--manifest", manifest, "manifest with ground truth")->required();
  ablate->add_option("--out", out_dir, "output directory")->required();
  ablate_flags.attach(*ablate, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code;
  }

  try {
    if (run->parsed()) return cmd_run(manifest, out_dir, run_flags, out);
    if (eval->parsed()) return cmd_eval(pred_dir, manifest, tol, out);
    if (synth->parsed()) {
      std::optional<std::uint64_t> seed;
      if (seed_opt->count() > 0) seed = synth_seed;
      return cmd_synth(spec_path, out_dir, seed, exact, out);
    }
    if (ablate->parsed()) return cmd_ablate(manifest, out_dir, ablate_flags, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace stg::cli

#include "stg/manifest.hpp"

#include <cmath>
#include <cstdio>
#include <set>
#include <string>

#include <json.hpp>

#include "stg/pgm.hpp"
#include "stg/tensor_file.hpp"

namespace stg {

namespace fs = std::filesystem;
using nlohmann::json;

std::string frame_object_name(int frame, int object_id) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "f%05d_o%d", frame, object_id);
  return buf;
}

namespace {

std::string frame_name(int frame) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "f%05d", frame);
  return buf;
}

class Context {
 public:
  Context(const fs::path& manifest, int frame) : manifest_(manifest.string()), frame_(frame) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw ManifestError(manifest_ + ": frame " + std::to_string(frame_) + ": " + what);
  }
  [[noreturn]] void fail_object(int id, const std::string& what) const {
    fail("object " + std::to_string(id) + ": " + what);
  }
  [[noreturn]] void fail_proposal(std::size_t p, const std::string& what) const {
    fail("proposal " + std::to_string(p) + ": " + what);
  }

 private:
  std::string manifest_;
  int frame_;
};

[[noreturn]] void fail_top(const fs::path& manifest, const std::string& what) {
  throw ManifestError(manifest.string() + ": " + what);
}

int parse_object_key(const std::string& key) {
  std::size_t used = 0;
  int id = 0;
  try {
    id = std::stoi(key, &used);
  } catch (const std::exception&) {
    return -1;
  }
  return used == key.size() ? id : -1;
}

template <typename Load>
auto load_file(const Context& ctx, const fs::path& base, const json& ref, const std::string& what,
               const Load& load) {
  if (!ref.is_string()) ctx.fail(what + " path must be a string");
  const fs::path p = base / ref.get<std::string>();
  if (!fs::exists(p)) ctx.fail(what + " file not found: " + p.string());
  try {
    return load(p);
  } catch (const std::exception& e) {
    ctx.fail(what + ": " + e.what());
  }
}

BinaryMask load_frame_mask(const Context& ctx, const fs::path& base, const json& ref, int id,
                           const std::string& what, int h, int w) {
  if (!ref.is_string()) ctx.fail_object(id, what + " path must be a string");
  const fs::path p = base / ref.get<std::string>();
  if (!fs::exists(p)) ctx.fail_object(id, what + " file not found: " + p.string());
  BinaryMask m;
  try {
    m = read_mask(p);
  } catch (const std::exception& e) {
    ctx.fail_object(id, what + ": " + e.what());
  }
  if (m.height() != h || m.width() != w) {
    ctx.fail_object(id, what + " is " + std::to_string(m.width()) + "x" + std::to_string(m.height()) +
                            ", frame is " + std::to_string(w) + "x" + std::to_string(h));
  }
  return m;
}

std::map<int, BinaryMask> load_object_masks(const Context& ctx, const fs::path& base,
                                            const json& frame, const char* field,
                                            const std::set<int>& objects, int h, int w) {
  std::map<int, BinaryMask> out;
  if (!frame.contains(field)) return out;
  const json& j = frame.at(field);
  if (!j.is_object()) ctx.fail(std::string(field) + " must be an object keyed by object id");
  for (const auto& [key, ref] : j.items()) {
    const int id = parse_object_key(key);
    if (!objects.count(id)) ctx.fail(std::string(field) + " names undeclared object '" + key + "'");
    out[id] = load_frame_mask(ctx, base, ref, id, field, h, w);
  }
  return out;
}

}  // namespace

Video read_manifest(const fs::path& path) {
  if (!fs::exists(path)) throw ManifestError(path.string() + ": manifest not found");
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception& e) {
    fail_top(path, std::string("not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) fail_top(path, "top level must be an object");
  if (doc.contains("format") && doc["format"] != kManifestFormat) fail_top(path, "unknown format tag");
  if (doc.contains("version") && doc["version"] != kManifestVersion) fail_top(path, "unsupported version");

  Video video;
  const fs::path base = path.parent_path();
  try {
    video.name = doc.value("video", std::string{});
    if (!doc.contains("height") || !doc["height"].is_number_integer() ||
        !doc.contains("width") || !doc["width"].is_number_integer()) {
      fail_top(path, "height and width must be integers");
    }
    video.height = doc["height"].get<int>();
    video.width = doc["width"].get<int>();
  } catch (const json::exception& e) {
    fail_top(path, e.what());
  }
  if (video.height < 1 || video.width < 1) fail_top(path, "height and width must be positive");

  if (!doc.contains("objects") || !doc["objects"].is_array() || doc["objects"].empty()) {
    fail_top(path, "objects must be a non-empty array of ids");
  }
  std::set<int> objects;
  for (const auto& o : doc["objects"]) {
    if (!o.is_number_integer()) fail_top(path, "object ids must be integers");
    const int id = o.get<int>();
    if (id < 1 || id > 255) fail_top(path, "object id " + std::to_string(id) + " outside 1..255");
    if (!objects.insert(id).second) fail_top(path, "object id " + std::to_string(id) + " repeated");
    video.object_ids.push_back(id);
  }

  if (!doc.contains("frames") || !doc["frames"].is_array() || doc["frames"].empty()) {
    fail_top(path, "frames must be a non-empty array");
  }
  std::optional<int> key_channels;
  std::optional<std::size_t> feature_len;
  int expected = 0;
  for (const auto& fj : doc["frames"]) {
    Context ctx(path, expected);
    if (!fj.is_object()) ctx.fail("frame record must be an object");
    if (!fj.contains("index") || !fj["index"].is_number_integer()) ctx.fail("missing integer index");
    const int index = fj["index"].get<int>();
    if (index != expected) {
      ctx.fail("index " + std::to_string(index) + " breaks contiguity (expected " +
               std::to_string(expected) + ")");
    }
    FrameData frame;
    frame.index = index;

    if (!fj.contains("key_map")) ctx.fail("missing key_map");
    frame.key_map = load_file(ctx, base, fj["key_map"], "key_map",
                              [](const fs::path& p) { return feature_map_from(read_tensor(p)); });
    if (frame.key_map.height() != video.height || frame.key_map.width() != video.width) {
      ctx.fail("key_map is " + std::to_string(frame.key_map.width()) + "x" +
               std::to_string(frame.key_map.height()) + ", frame is " + std::to_string(video.width) +
               "x" + std::to_string(video.height));
    }
    if (frame.key_map.channels() < 1) ctx.fail("key_map has no channels");
    if (key_channels && *key_channels != frame.key_map.channels()) {
      ctx.fail("key_map channel count " + std::to_string(frame.key_map.channels()) +
               " differs from earlier frames (" + std::to_string(*key_channels) + ")");
    }
    key_channels = frame.key_map.channels();

    frame.annotations = load_object_masks(ctx, base, fj, "annotations", objects, video.height, video.width);
    frame.warped = load_object_masks(ctx, base, fj, "warped", objects, video.height, video.width);
    frame.ground_truth = load_object_masks(ctx, base, fj, "ground_truth", objects, video.height, video.width);

    if (index == 0) {
      LabelMap owner(video.height, video.width);
      for (int id : video.object_ids) {
        const auto a = frame.annotations.find(id);
        if (a == frame.annotations.end()) ctx.fail_object(id, "missing annotation");
        if (count_foreground(a->second) == 0) ctx.fail_object(id, "annotation is empty");
        for (std::size_t i = 0; i < owner.size(); ++i) {
          if (!a->second[i]) continue;
          if (owner[i]) {
            ctx.fail_object(id, "annotation overlaps object " + std::to_string(owner[i]));
          }
          owner[i] = static_cast<std::uint8_t>(id);
        }
      }
    } else {
      if (!frame.annotations.empty()) ctx.fail("annotations are only allowed on frame 0");
      for (int id : video.object_ids) {
        if (!frame.warped.count(id)) ctx.fail_object(id, "missing warped mask");
      }
    }

    if (fj.contains("proposals")) {
      const json& props = fj["proposals"];
      if (!props.is_array()) ctx.fail("proposals must be an array");
      for (std::size_t p = 0; p < props.size(); ++p) {
        const json& pj = props[p];
        if (!pj.is_object()) ctx.fail_proposal(p, "record must be an object");
        Proposal prop;
        const json& bb = pj.value("bbox", json());
        if (!bb.is_array() || bb.size() != 4) ctx.fail_proposal(p, "bbox must be [x_min, y_min, x_max, y_max]");
        for (const auto& c : bb) {
          if (!c.is_number()) ctx.fail_proposal(p, "bbox coordinates must be numbers");
        }
        prop.bbox = {bb[0].get<double>(), bb[1].get<double>(), bb[2].get<double>(), bb[3].get<double>()};
        if (!prop.bbox.valid()) ctx.fail_proposal(p, "bbox has x_min > x_max, y_min > y_max, or non-finite values");
        if (!pj.contains("mask")) ctx.fail_proposal(p, "missing mask");
        if (!pj.contains("feature")) ctx.fail_proposal(p, "missing feature");
        prop.mask = load_file(ctx, base, pj["mask"], "proposal " + std::to_string(p) + " mask",
                              [](const fs::path& f) { return read_mask(f); });
        prop.feature = load_file(ctx, base, pj["feature"], "proposal " + std::to_string(p) + " feature",
                                 [](const fs::path& f) { return feature_vector_from(read_tensor(f)); });
        if (prop.feature.size() == 0) ctx.fail_proposal(p, "feature is empty");
        if (feature_len && *feature_len != prop.feature.size()) {
          ctx.fail_proposal(p, "feature length " + std::to_string(prop.feature.size()) +
                                   " differs from earlier proposals (" + std::to_string(*feature_len) + ")");
        }
        feature_len = prop.feature.size();
        const double n = prop.feature.norm();
        if (!(n > 0.0) || !std::isfinite(n)) ctx.fail_proposal(p, "feature has zero or non-finite norm");
        if (pj.contains("confidence")) {
          if (!pj["confidence"].is_number()) ctx.fail_proposal(p, "confidence must be a number");
          prop.confidence = pj["confidence"].get<double>();
        }
        frame.proposals.push_back(std::move(prop));
      }
    }
    video.frames.push_back(std::move(frame));
    ++expected;
  }
  return video;
}

fs::path write_manifest(const Video& video, const fs::path& dir) {
  fs::create_directories(dir);
  json doc;
  doc["format"] = kManifestFormat;
  doc["version"] = kManifestVersion;
  doc["video"] = video.name;
  doc["height"] = video.height;
  doc["width"] = video.width;
  doc["objects"] = video.object_ids;
  json frames = json::array();
  for (const auto& f : video.frames) {
    json fj;
    fj["index"] = f.index;
    const std::string key_rel = "keys/" + frame_name(f.index) + ".stgt";
    write_tensor(dir / key_rel, to_tensor(f.key_map));
    fj["key_map"] = key_rel;
    auto masks = [&](const std::map<int, BinaryMask>& m, const std::string& sub) {
      json j = json::object();
      for (const auto& [id, mask] : m) {
        const std::string rel = sub + "/" + frame_object_name(f.index, id) + ".pgm";
        write_mask(dir / rel, mask);
        j[std::to_string(id)] = rel;
      }
      return j;
    };
    if (!f.annotations.empty()) fj["annotations"] = masks(f.annotations, "annotations");
    if (!f.warped.empty()) fj["warped"] = masks(f.warped, "warped");
    if (!f.ground_truth.empty()) fj["ground_truth"] = masks(f.ground_truth, "ground_truth");
    json props = json::array();
    for (std::size_t p = 0; p < f.proposals.size(); ++p) {
      const Proposal& prop = f.proposals[p];
      char stem[48];
      std::snprintf(stem, sizeof(stem), "proposals/%s_p%03zu", frame_name(f.index).c_str(), p);
      write_mask(dir / (std::string(stem) + ".pgm"), prop.mask);
      write_tensor(dir / (std::string(stem) + ".stgt"), to_tensor(prop.feature));
      props.push_back({{"bbox", {prop.bbox.x_min, prop.bbox.y_min, prop.bbox.x_max, prop.bbox.y_max}},
                       {"mask", std::string(stem) + ".pgm"},
                       {"feature", std::string(stem) + ".stgt"},
                       {"confidence", prop.confidence}});
    }
    if (f.index > 0 || !props.empty()) fj["proposals"] = std::move(props);
    frames.push_back(std::move(fj));
  }
  doc["frames"] = std::move(frames);
  const fs::path out = dir / "manifest.json";
  write_file(out, doc.dump(2) + "\n");
  return out;
}

}  // namespace stg

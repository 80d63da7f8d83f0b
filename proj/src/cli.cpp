#include "gwm/cli.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "gwm/error.hpp"
#include "gwm/eval.hpp"
#include "gwm/merging.hpp"
#include "gwm/scenes.hpp"
#include "gwm/segmenter.hpp"

#ifndef GWM_GIT_DESCRIBE
#define GWM_GIT_DESCRIBE "unknown"
#endif

namespace gwm::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string frame_file(const std::string& dir, const char* stem, int t, const char* ext) {
  char name[64];
  std::snprintf(name, sizeof name, "%s_%04d.%s", stem, t, ext);
  return (fs::path(dir) / name).string();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoFailure, "cannot open " + path);
  out << text;
  if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + path);
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::IoFailure, "cannot create " + dir);
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Defaults double as the key allowlist: a config key absent here is unknown.
json command_defaults(const std::string& command) {
  if (command == "gen")
    return {{"preset", nullptr}, {"seed", nullptr}, {"out", nullptr}, {"verify", false}};
  if (command == "segment")
    return {{"scene", nullptr}, {"out", nullptr},      {"mode", "perpixel"},
            {"k", 4},           {"family", "quadratic12"}, {"iters", 300},
            {"lr", nullptr},    {"momentum", 0.9},     {"seed", 0},
            {"init_sigma", 0.01}, {"ridge", nullptr},  {"weight_floor", nullptr}};
  if (command == "merge")
    return {{"scene", nullptr}, {"masks", nullptr}, {"out", nullptr}, {"epsilon", 1e-12}};
  if (command == "eval")
    return {{"scene", nullptr}, {"pred", nullptr}, {"mode", "heuristic"}, {"out", nullptr}};
  if (command == "viz")
    return {{"flow", nullptr}, {"masks", nullptr}, {"out", nullptr}, {"max_magnitude", 0.0}};
  throw Error(ErrorKind::ConfigError, "unknown command '" + command + "'");
}

std::string require_string(const json& config, const char* key) {
  const auto& v = config.at(key);
  if (!v.is_string() || v.get<std::string>().empty())
    throw Error(ErrorKind::ConfigError, std::string("missing required option '") + key + "'");
  return v.get<std::string>();
}

std::optional<double> optional_number(const json& config, const char* key) {
  const auto& v = config.at(key);
  if (v.is_null()) return std::nullopt;
  if (!v.is_number()) throw Error(ErrorKind::ConfigError, std::string(key) + " must be a number");
  return v.get<double>();
}

}  // namespace

json materialize_config(const std::string& command, const json& file_config,
                        const json& overrides) {
  json config = command_defaults(command);
  for (const json* layer : {&file_config, &overrides}) {
    if (layer->is_null()) continue;
    if (!layer->is_object()) throw Error(ErrorKind::ConfigError, "config must be a JSON object");
    for (const auto& [key, value] : layer->items()) {
      if (!config.contains(key))
        throw Error(ErrorKind::ConfigError, "unknown config key '" + key + "' for " + command);
      config[key] = value;
    }
  }
  return config;
}

void write_soft_masks(const SoftMasks& masks, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoFailure, "cannot open " + path);
  out.write("SMK1", 4);
  const std::int32_t dims[3] = {masks.k, masks.width, masks.height};
  out.write(reinterpret_cast<const char*>(dims), sizeof dims);
  out.write(reinterpret_cast<const char*>(masks.probs.data()),
            static_cast<std::streamsize>(masks.probs.size() * sizeof(double)));
  if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + path);
}

SoftMasks read_soft_masks(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot open " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "SMK1", 4) != 0)
    throw Error(ErrorKind::BadMagic, path + ": not a soft-mask dump");
  std::int32_t dims[3];
  if (!in.read(reinterpret_cast<char*>(dims), sizeof dims))
    throw Error(ErrorKind::TruncatedFile, path + ": header short");
  if (dims[0] < 1 || dims[1] <= 0 || dims[2] <= 0 || dims[0] > 1024 || dims[1] > 65535 ||
      dims[2] > 65535)
    throw Error(ErrorKind::DimensionOverflow, path + ": bad dimensions");
  SoftMasks masks(dims[0], dims[1], dims[2]);
  if (!in.read(reinterpret_cast<char*>(masks.probs.data()),
               static_cast<std::streamsize>(masks.probs.size() * sizeof(double))))
    throw Error(ErrorKind::TruncatedFile, path + ": payload short");
  masks.validate();
  return masks;
}

json cmd_gen(const json& config) {
  const std::string preset_name = require_string(config, "preset");
  const std::string out_dir = require_string(config, "out");

  SceneSpec spec = preset(preset_name);
  if (!config.at("seed").is_null()) spec.seed = config.at("seed").get<std::uint64_t>();

  const Scene scene = generate(spec);
  save_scene(scene, out_dir);

  if (config.at("verify").get<bool>()) {
    // Reload and regenerate; the directory must reproduce the scene exactly.
    const Scene loaded = load_scene(out_dir);
    const Scene again = generate(loaded.spec);
    if (again.frames.size() != loaded.frames.size())
      throw Error(ErrorKind::IoFailure, "verify failed: frame count mismatch");
    for (std::size_t t = 0; t < again.frames.size(); ++t) {
      const auto& a = again.frames[t];
      const auto& b = loaded.frames[t];
      if (a.image.data != b.image.data || a.flow.data != b.flow.data ||
          a.instances.labels != b.instances.labels || a.foreground.labels != b.foreground.labels)
        throw Error(ErrorKind::IoFailure, "verify failed: frame content mismatch");
    }
  }

  json manifest;
  manifest["command"] = "gen";
  manifest["config"] = config;
  manifest["git_describe"] = GWM_GIT_DESCRIBE;
  manifest["frames"] = spec.frames;
  return manifest;
}

json cmd_segment(const json& config) {
  const std::string scene_dir = require_string(config, "scene");
  const std::string out_dir = require_string(config, "out");

  const auto mode = mode_from_string(config.at("mode").get<std::string>());
  if (!mode) throw Error(ErrorKind::ConfigError, "mode must be perpixel or linear");
  const auto family = family_from_string(config.at("family").get<std::string>());
  if (!family) throw Error(ErrorKind::ConfigError, "family must be constant, affine or quadratic12");

  TrainConfig train;
  train.family = *family;
  train.k = config.at("k").get<int>();
  train.iterations = config.at("iters").get<int>();
  if (auto lr = optional_number(config, "lr")) train.learning_rate = lr;
  train.momentum = config.at("momentum").get<double>();
  train.seed = config.at("seed").get<std::uint64_t>();
  train.init_sigma = config.at("init_sigma").get<double>();
  train.ridge = optional_number(config, "ridge");
  train.weight_floor = optional_number(config, "weight_floor");

  const Scene scene = load_scene(scene_dir);
  const int total_frames = static_cast<int>(scene.frames.size());
  const int train_count = scene.spec.train_frames > 0
                              ? std::min(scene.spec.train_frames, total_frames)
                              : total_frames;

  std::vector<RgbImage> images;
  std::vector<FlowField> flows;
  for (int t = 0; t < train_count; ++t) {
    images.push_back(scene.frames[t].image);
    flows.push_back(scene.frames[t].flow);
  }

  const TrainedSegmenter seg = train_internal(images, flows, train, *mode);

  ensure_dir(out_dir);
  // Per-pixel segmenters only describe their training frames; linear ones
  // predict the held-out tail as well.
  const int written = *mode == SegmenterMode::Linear ? total_frames : train_count;
  for (int t = 0; t < written; ++t) {
    const SoftMasks masks =
        t < train_count ? seg.masks(t) : predict(seg, scene.frames[t].image);
    write_soft_masks(masks, frame_file(out_dir, "masks", t, "smk"));
    write_components_pgm(masks.argmax(), train.k, frame_file(out_dir, "comp", t, "pgm"));
  }

  std::string csv = "iteration,loss\n";
  for (std::size_t i = 0; i < seg.loss_trace.size(); ++i)
    csv += std::to_string(i) + "," + fmt_double(seg.loss_trace[i]) + "\n";
  write_text((fs::path(out_dir) / "loss_trace.csv").string(), csv);

  if (*mode == SegmenterMode::Linear)
    save_segmenter(seg, (fs::path(out_dir) / "segmenter.json").string());

  json manifest;
  manifest["command"] = "segment";
  manifest["config"] = config;
  manifest["git_describe"] = GWM_GIT_DESCRIBE;
  manifest["initial_loss"] = fmt_double(seg.loss_trace.front());
  manifest["final_loss"] = fmt_double(seg.loss_trace.back());
  manifest["frames_trained"] = train_count;
  manifest["frames_written"] = written;
  manifest["merge"] = train.k == 2 ? "identity" : "spectral";
  write_text((fs::path(out_dir) / "manifest.json").string(), manifest.dump(2) + "\n");
  return manifest;
}

json cmd_merge(const json& config) {
  const std::string scene_dir = require_string(config, "scene");
  const std::string masks_dir = require_string(config, "masks");
  const std::string out_dir = require_string(config, "out");
  const double epsilon = config.at("epsilon").get<double>();

  const Scene scene = load_scene(scene_dir);
  ensure_dir(out_dir);

  int merged = 0;
  for (int t = 0; t < static_cast<int>(scene.frames.size()); ++t) {
    const std::string mask_path = frame_file(masks_dir, "masks", t, "smk");
    if (!fs::exists(mask_path)) {
      if (t == 0) throw Error(ErrorKind::IoFailure, "no masks found at " + mask_path);
      break;
    }
    const SoftMasks masks = read_soft_masks(mask_path);
    const FeatureMap features = featurize(scene.frames[t].image);
    const LabelMap fg = merge_to_foreground(features, masks, epsilon);
    write_mask_pgm(fg, frame_file(out_dir, "fg", t, "pgm"));
    ++merged;
  }

  json manifest;
  manifest["command"] = "merge";
  manifest["config"] = config;
  manifest["git_describe"] = GWM_GIT_DESCRIBE;
  manifest["frames_merged"] = merged;
  return manifest;
}

json cmd_eval(const json& config) {
  const std::string scene_dir = require_string(config, "scene");
  const std::string pred_dir = require_string(config, "pred");
  const std::string mode = config.at("mode").get<std::string>();
  if (mode != "heuristic" && mode != "oracle")
    throw Error(ErrorKind::ConfigError, "mode must be heuristic or oracle");

  const Scene scene = load_scene(scene_dir);
  std::vector<LabelMap> gt;
  for (const auto& frame : scene.frames) gt.push_back(frame.foreground);

  JaccardReport report;
  if (mode == "heuristic") {
    std::vector<LabelMap> preds;
    for (int t = 0; t < static_cast<int>(gt.size()); ++t) {
      const std::string path = frame_file(pred_dir, "fg", t, "pgm");
      if (!fs::exists(path)) {
        if (t == 0) throw Error(ErrorKind::IoFailure, "no predictions found at " + path);
        break;
      }
      preds.push_back(read_mask_pgm(path));
    }
    gt.resize(preds.size());
    report = evaluate_run(gt, preds);
  } else {
    std::vector<SoftMasks> preds;
    for (int t = 0; t < static_cast<int>(gt.size()); ++t) {
      const std::string path = frame_file(pred_dir, "masks", t, "smk");
      if (!fs::exists(path)) {
        if (t == 0) throw Error(ErrorKind::IoFailure, "no predictions found at " + path);
        break;
      }
      preds.push_back(read_soft_masks(path));
    }
    gt.resize(preds.size());
    report = evaluate_run_oracle(gt, preds);
  }

  std::cout << report.to_table();
  if (!config.at("out").is_null())
    write_text(config.at("out").get<std::string>(), report.to_json() + "\n");

  json doc = json::parse(report.to_json());
  doc["command"] = "eval";
  doc["config"] = config;
  return doc;
}

json cmd_viz(const json& config) {
  const std::string out_path = require_string(config, "out");
  const bool has_flow = !config.at("flow").is_null();
  const bool has_masks = !config.at("masks").is_null();
  if (has_flow == has_masks)
    throw Error(ErrorKind::ConfigError, "pass exactly one of --flow or --masks");

  if (has_flow) {
    const FlowField field = read_flo(config.at("flow").get<std::string>());
    write_ppm(flow_to_color(field, config.at("max_magnitude").get<double>()), out_path);
  } else {
    // Fixed component palette, cycled beyond 8 entries.
    static constexpr std::uint8_t kPalette[8][3] = {
        {230, 25, 75}, {60, 180, 75},  {255, 225, 25}, {0, 130, 200},
        {245, 130, 48}, {145, 30, 180}, {70, 240, 240}, {240, 50, 230}};
    const SoftMasks masks = read_soft_masks(config.at("masks").get<std::string>());
    const LabelMap argmax = masks.argmax();
    RgbImage image(masks.width, masks.height);
    for (int y = 0; y < masks.height; ++y)
      for (int x = 0; x < masks.width; ++x) {
        const auto* c = kPalette[argmax.at(x, y) % 8];
        image.set(x, y, c[0], c[1], c[2]);
      }
    write_ppm(image, out_path);
  }

  json manifest;
  manifest["command"] = "viz";
  manifest["config"] = config;
  manifest["git_describe"] = GWM_GIT_DESCRIBE;
  return manifest;
}

namespace {

void validate_node(const json& doc, const json& schema, const std::string& path) {
  if (schema.contains("type")) {
    const std::string type = schema.at("type").get<std::string>();
    bool ok = (type == "object" && doc.is_object()) || (type == "array" && doc.is_array()) ||
              (type == "string" && doc.is_string()) || (type == "number" && doc.is_number()) ||
              (type == "integer" && doc.is_number_integer()) ||
              (type == "boolean" && doc.is_boolean()) || (type == "null" && doc.is_null());
    if (!ok) throw Error(ErrorKind::ConfigError, path + ": expected " + type);
  }
  if (schema.contains("enum")) {
    bool ok = false;
    for (const auto& v : schema.at("enum")) ok = ok || v == doc;
    if (!ok) throw Error(ErrorKind::ConfigError, path + ": value not in enum");
  }
  if (schema.contains("minimum") && doc.is_number() &&
      doc.get<double>() < schema.at("minimum").get<double>())
    throw Error(ErrorKind::ConfigError, path + ": below minimum");
  if (doc.is_object()) {
    if (schema.contains("required"))
      for (const auto& key : schema.at("required"))
        if (!doc.contains(key.get<std::string>()))
          throw Error(ErrorKind::ConfigError, path + ": missing required key " + key.get<std::string>());
    const bool closed =
        schema.contains("additionalProperties") && schema.at("additionalProperties") == false;
    for (const auto& [key, value] : doc.items()) {
      if (schema.contains("properties") && schema.at("properties").contains(key)) {
        validate_node(value, schema.at("properties").at(key), path + "/" + key);
      } else if (closed) {
        throw Error(ErrorKind::ConfigError, path + ": unexpected key " + key);
      }
    }
  }
  if (doc.is_array() && schema.contains("items")) {
    for (std::size_t i = 0; i < doc.size(); ++i)
      validate_node(doc[i], schema.at("items"), path + "/" + std::to_string(i));
  }
}

}  // namespace

void validate_against_schema(const json& doc, const json& schema) {
  validate_node(doc, schema, "#");
}

namespace {

json load_json_file(const std::string& path, ErrorKind missing_kind) {
  std::ifstream in(path);
  if (!in) throw Error(missing_kind, "cannot open " + path);
  json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ConfigError, path + ": " + e.what());
  }
  return doc;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"guess-what-moves segmentation pipeline"};
  app.require_subcommand(1);

  struct {
    std::string config_path;
    std::string preset, scene, out, masks, pred, mode, family, flow;
    std::int64_t seed = -1;
    int k = -1, iters = -1;
    double lr = -1, max_magnitude = -1, epsilon = -1;
    bool verify = false;
  } opt;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", opt.config_path, "JSON config file");
    cmd->add_option("--out", opt.out, "output path");
  };

  CLI::App* gen = app.add_subcommand("gen", "generate a synthetic scene directory");
  add_common(gen);
  gen->add_option("--preset", opt.preset, "scene preset name");
  gen->add_option("--seed", opt.seed, "scene seed");
  gen->add_flag("--verify", opt.verify, "re-load and re-generate to verify the output");

  CLI::App* segment = app.add_subcommand("segment", "train a segmenter on a scene");
  add_common(segment);
  segment->add_option("--scene", opt.scene, "scene directory");
  segment->add_option("--mode", opt.mode, "perpixel or linear");
  segment->add_option("--k", opt.k, "component count");
  segment->add_option("--family", opt.family, "constant, affine or quadratic12");
  segment->add_option("--iters", opt.iters, "gradient-descent iterations");
  segment->add_option("--lr", opt.lr, "learning rate");
  segment->add_option("--seed", opt.seed, "training seed");

  CLI::App* merge = app.add_subcommand("merge", "merge components to a binary foreground");
  add_common(merge);
  merge->add_option("--scene", opt.scene, "scene directory (feature source)");
  merge->add_option("--masks", opt.masks, "directory with masks_%04d.smk");
  merge->add_option("--epsilon", opt.epsilon, "affinity floor");

  CLI::App* eval = app.add_subcommand("eval", "evaluate predictions against ground truth");
  add_common(eval);
  eval->add_option("--scene", opt.scene, "scene directory");
  eval->add_option("--pred", opt.pred, "prediction directory");
  eval->add_option("--mode", opt.mode, "heuristic or oracle");

  CLI::App* viz = app.add_subcommand("viz", "render flow or masks to PPM");
  add_common(viz);
  viz->add_option("--flow", opt.flow, "a .flo file");
  viz->add_option("--masks", opt.masks, "a .smk file");
  viz->add_option("--max-magnitude", opt.max_magnitude, "flow color saturation scale");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    CLI::App* active = app.get_subcommands().front();
    const std::string command = active->get_name();

    json overrides = json::object();
    auto set_if = [&](const char* key, const auto& value, bool present) {
      if (present) overrides[key] = value;
    };
    auto used = [&](const char* name) {
      const CLI::Option* o = active->get_option_no_throw(name);
      return o != nullptr && o->count() > 0;
    };
    set_if("preset", opt.preset, !opt.preset.empty());
    set_if("scene", opt.scene, !opt.scene.empty());
    set_if("out", opt.out, !opt.out.empty());
    set_if("masks", opt.masks, !opt.masks.empty());
    set_if("pred", opt.pred, !opt.pred.empty());
    set_if("mode", opt.mode, !opt.mode.empty());
    set_if("family", opt.family, !opt.family.empty());
    set_if("flow", opt.flow, !opt.flow.empty());
    set_if("seed", opt.seed, used("--seed"));
    set_if("k", opt.k, used("--k"));
    set_if("iters", opt.iters, used("--iters"));
    set_if("lr", opt.lr, used("--lr"));
    set_if("epsilon", opt.epsilon, used("--epsilon"));
    set_if("max_magnitude", opt.max_magnitude, used("--max-magnitude"));
    set_if("verify", opt.verify, opt.verify);

    json file_config;
    if (!opt.config_path.empty()) file_config = load_json_file(opt.config_path, ErrorKind::IoFailure);

    const json config = materialize_config(command, file_config, overrides);
    if (command == "gen") cmd_gen(config);
    else if (command == "segment") cmd_segment(config);
    else if (command == "merge") cmd_merge(config);
    else if (command == "eval") cmd_eval(config);
    else cmd_viz(config);
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace gwm::cli

#include "cli.hpp"

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "keyopt/errors.hpp"
#include "keyopt/geometry.hpp"
#include "keyopt/keygnet.hpp"
#include "keyopt/loss.hpp"
#include "keyopt/optimizer.hpp"
#include "keyopt/posesim.hpp"
#include "keyopt/sampling.hpp"
#include "keyopt/serialize.hpp"
#include "keyopt/votes.hpp"

namespace keyopt::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

[[noreturn]] void bad_config(const std::string& what) {
  fail(ErrorKind::ConfigInvalid, what);
}

// Schema checks reject unknown keys at every level so typos fail loudly
// instead of silently falling back to defaults.
void check_keys(const json& node, const std::string& where,
                std::initializer_list<const char*> allowed) {
  if (!node.is_object()) bad_config(where + " must be a JSON object");
  for (const auto& item : node.items()) {
    bool known = false;
    for (const char* key : allowed)
      if (item.key() == key) {
        known = true;
        break;
      }
    if (!known) bad_config("unknown key \"" + item.key() + "\" in " + where);
  }
}

const json* find(const json& node, const char* key) {
  const auto it = node.find(key);
  return it == node.end() ? nullptr : &*it;
}

std::string get_string(const json& node, const char* key,
                       const std::string& where) {
  const json* v = find(node, key);
  if (!v || !v->is_string())
    bad_config(where + " needs a string \"" + key + "\"");
  return v->get<std::string>();
}

std::string get_string_or(const json& node, const char* key,
                          const std::string& fallback) {
  const json* v = find(node, key);
  if (!v) return fallback;
  if (!v->is_string()) bad_config(std::string("\"") + key + "\" must be a string");
  return v->get<std::string>();
}

double get_number_or(const json& node, const char* key, double fallback) {
  const json* v = find(node, key);
  if (!v) return fallback;
  if (!v->is_number()) bad_config(std::string("\"") + key + "\" must be a number");
  return v->get<double>();
}

std::uint64_t get_u64_or(const json& node, const char* key,
                         std::uint64_t fallback) {
  const json* v = find(node, key);
  if (!v) return fallback;
  if (!v->is_number_integer() || (v->is_number_integer() && v->get<std::int64_t>() < 0 && !v->is_number_unsigned()))
    bad_config(std::string("\"") + key + "\" must be a non-negative integer");
  return v->get<std::uint64_t>();
}

std::size_t get_size_or(const json& node, const char* key, std::size_t fallback) {
  return static_cast<std::size_t>(get_u64_or(node, key, fallback));
}

bool get_bool_or(const json& node, const char* key, bool fallback) {
  const json* v = find(node, key);
  if (!v) return fallback;
  if (!v->is_boolean()) bad_config(std::string("\"") + key + "\" must be a boolean");
  return v->get<bool>();
}

Vec3 get_vec3(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 3)
    bad_config(where + " must be an array of 3 numbers");
  for (const json& x : v)
    if (!x.is_number()) bad_config(where + " must be an array of 3 numbers");
  return Vec3(v[0].get<double>(), v[1].get<double>(), v[2].get<double>());
}

VoteScheme parse_scheme(const std::string& name) {
  if (name == "radial") return VoteScheme::Radial;
  if (name == "offset") return VoteScheme::Offset;
  if (name == "vector") return VoteScheme::Vector;
  bad_config("unknown scheme \"" + name + "\" (radial, offset, vector)");
}

SimilarityKind parse_similarity(const std::string& name) {
  if (name == "exact_w1") return SimilarityKind::ExactW1;
  if (name == "critic") return SimilarityKind::Critic;
  if (name == "kl") return SimilarityKind::KL;
  if (name == "js") return SimilarityKind::JS;
  if (name == "ce") return SimilarityKind::CE;
  bad_config("unknown similarity \"" + name +
             "\" (exact_w1, critic, kl, js, ce)");
}

ShapeKind parse_shape(const std::string& name) {
  if (name == "box") return ShapeKind::Box;
  if (name == "ellipsoid") return ShapeKind::Ellipsoid;
  if (name == "lbracket") return ShapeKind::LBracket;
  bad_config("unknown shape \"" + name + "\" (box, ellipsoid, lbracket)");
}

// keypoint count when the config leaves it unset: 3 for scalar radial
// votes, 8 for the vector-valued schemes
std::size_t default_n_keypoints(VoteScheme scheme) {
  return scheme == VoteScheme::Radial ? std::size_t{3} : std::size_t{8};
}

VoteScheme scheme_from(const json& config) {
  return parse_scheme(get_string_or(config, "scheme", "radial"));
}

std::vector<Vec3> projections_from(const json& config) {
  const json* arr = find(config, "projections");
  if (!arr) return axis_projections();
  if (!arr->is_array() || arr->empty())
    bad_config("\"projections\" must be a non-empty array of 3-vectors");
  std::vector<Vec3> dirs;
  for (const json& v : *arr) dirs.push_back(get_vec3(v, "projections[]"));
  return dirs;
}

// ---- objects ---------------------------------------------------------

ObjectModel load_object(const json& entry, const fs::path& base_dir) {
  check_keys(entry, "objects[]",
             {"id", "kind", "extents", "n_points", "seed", "path", "format"});
  const std::string id = get_string(entry, "id", "objects[]");
  if (find(entry, "path")) {
    for (const char* key : {"kind", "extents", "n_points", "seed"})
      if (find(entry, key))
        bad_config("object \"" + id + "\" mixes \"path\" with synthetic fields");
    const fs::path path = base_dir / get_string(entry, "path", "objects[]");
    const std::string format =
        get_string_or(entry, "format", path.extension() == ".obj" ? "obj" : "ply");
    CloudFormat fmt;
    if (format == "ply")
      fmt = CloudFormat::PlyAscii;
    else if (format == "obj")
      fmt = CloudFormat::ObjVertices;
    else
      bad_config("unknown cloud format \"" + format + "\" (ply, obj)");
    return ObjectModel::from_cloud(id, load_point_cloud(path, fmt));
  }
  const ShapeKind kind = parse_shape(get_string(entry, "kind", "objects[]"));
  const json* ext = find(entry, "extents");
  if (!ext) bad_config("object \"" + id + "\" needs \"extents\"");
  const Vec3 extents = get_vec3(*ext, "\"extents\"");
  const std::size_t n_points = get_size_or(entry, "n_points", 2000);
  const std::uint64_t seed = get_u64_or(entry, "seed", 0);
  return make_synthetic_object(kind, extents, n_points, seed, id);
}

std::vector<ObjectModel> load_objects(const json& config,
                                      const fs::path& base_dir) {
  const json* arr = find(config, "objects");
  if (!arr || !arr->is_array() || arr->empty())
    bad_config("config needs a non-empty \"objects\" array");
  std::vector<ObjectModel> objects;
  for (const json& entry : *arr) objects.push_back(load_object(entry, base_dir));
  for (std::size_t i = 0; i < objects.size(); ++i)
    for (std::size_t j = i + 1; j < objects.size(); ++j)
      if (objects[i].id == objects[j].id)
        bad_config("duplicate object id \"" + objects[i].id + "\"");
  return objects;
}

// ---- keypoint sources ------------------------------------------------

struct KeypointSource {
  std::string method = "fps";
  std::size_t n = 0;  // 0: fall back to the scheme default
  std::size_t seed_index = 0;
  std::vector<int> subset;
  double region_radius = 0.1;
  std::uint64_t seed = 0;
  fs::path path;
};

KeypointSource parse_keypoint_source(const json& node, const std::string& where,
                                     const fs::path& base_dir) {
  check_keys(node, where,
             {"method", "n", "seed_index", "subset", "region_radius", "seed",
              "path"});
  KeypointSource src;
  src.method = get_string_or(node, "method", "fps");
  bool known = false;
  for (const char* m :
       {"fps", "bbox-corners", "random-sphere", "random-bbox", "file"})
    if (src.method == m) known = true;
  if (!known)
    bad_config(where + ": unknown method \"" + src.method +
               "\" (fps, bbox-corners, random-sphere, random-bbox, file)");
  src.n = get_size_or(node, "n", 0);
  src.seed_index = get_size_or(node, "seed_index", 0);
  if (const json* sub = find(node, "subset")) {
    if (!sub->is_array()) bad_config(where + ": \"subset\" must be an array");
    for (const json& c : *sub) {
      if (!c.is_number_integer())
        bad_config(where + ": \"subset\" entries must be integers");
      src.subset.push_back(c.get<int>());
    }
  }
  src.region_radius = get_number_or(node, "region_radius", 0.1);
  src.seed = get_u64_or(node, "seed", 0);
  if (src.method == "file")
    src.path = base_dir / get_string(node, "path", where);
  else if (find(node, "path"))
    bad_config(where + ": \"path\" is only valid with method \"file\"");
  return src;
}

KeypointSet sample_keypoints(const KeypointSource& src,
                             const ObjectModel& normalized, VoteScheme scheme) {
  const std::size_t n = src.n > 0 ? src.n : default_n_keypoints(scheme);
  if (src.method == "fps")
    return fps_sample(normalized.cloud, n, src.seed_index);
  if (src.method == "bbox-corners") {
    std::vector<int> subset = src.subset;
    if (subset.empty())
      for (std::size_t c = 0; c < n && c < 8; ++c)
        subset.push_back(static_cast<int>(c));
    return bbox_corner_keypoints(normalized, subset);
  }
  if (src.method == "random-sphere")
    return random_keypoints(normalized, RandomKeypointMode::Sphere, n,
                            src.region_radius, src.seed);
  if (src.method == "random-bbox")
    return random_keypoints(normalized, RandomKeypointMode::BboxRegion, n,
                            src.region_radius, src.seed);
  KeypointSet kps = keypoints_from_json(read_text_file(src.path));
  kps.validate();
  return kps;
}

// ---- loss / shared config blocks -------------------------------------

LossConfig parse_loss(const json* node, VoteScheme scheme,
                      const std::vector<Vec3>& projections) {
  LossConfig cfg;
  cfg.scheme = scheme;
  cfg.projections = projections;
  if (!node) return cfg;
  check_keys(*node, "loss",
             {"alpha", "beta", "gamma", "similarity", "bins", "critic_steps",
              "critic_lr", "critic_lambda", "seed"});
  cfg.alpha = get_number_or(*node, "alpha", cfg.alpha);
  cfg.beta = get_number_or(*node, "beta", cfg.beta);
  cfg.gamma = get_number_or(*node, "gamma", cfg.gamma);
  cfg.similarity =
      parse_similarity(get_string_or(*node, "similarity", "exact_w1"));
  cfg.bins = get_size_or(*node, "bins", cfg.bins);
  cfg.critic_steps = get_size_or(*node, "critic_steps", cfg.critic_steps);
  cfg.critic_lr = get_number_or(*node, "critic_lr", cfg.critic_lr);
  cfg.critic_lambda = get_number_or(*node, "critic_lambda", cfg.critic_lambda);
  cfg.seed = get_u64_or(*node, "seed", cfg.seed);
  return cfg;
}

// ---- run context and artifact bookkeeping ----------------------------

struct Context {
  std::string command;
  json config;
  fs::path config_dir;  // relative paths in the config resolve against it
  fs::path out_dir;
  std::uint64_t config_hash = 0;
  std::size_t threads = 1;
};

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

class Workspace {
 public:
  explicit Workspace(const Context& ctx) : ctx_(ctx) {
    fs::create_directories(ctx.out_dir);
  }

  void write(const std::string& name, const std::string& content) {
    write_text_file(ctx_.out_dir / name, content);
    artifacts_.push_back(name);
  }

  // Every artifact plus the hash of the effective config. Timestamps live
  // only in the metadata block, so re-runs are comparable byte for byte
  // outside it.
  void finish() const {
    json manifest;
    manifest["command"] = ctx_.command;
    char hex[24];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(ctx_.config_hash));
    manifest["config_hash"] = hex;
    manifest["artifacts"] = artifacts_;
    json meta;
    meta["created_unix"] = static_cast<std::int64_t>(std::time(nullptr));
    meta["threads"] = ctx_.threads;
    manifest["metadata"] = meta;
    write_text_file(ctx_.out_dir / "manifest.json", manifest.dump(2) + "\n");
  }

 private:
  const Context& ctx_;
  std::vector<std::string> artifacts_;
};

std::vector<ObjectModel> normalize_all(const std::vector<ObjectModel>& objects) {
  std::vector<ObjectModel> out;
  out.reserve(objects.size());
  for (const ObjectModel& obj : objects) out.push_back(normalize_object(obj));
  return out;
}

// ---- subcommands -----------------------------------------------------

void run_synth(const Context& ctx, Workspace& ws) {
  check_keys(ctx.config, "config", {"objects"});
  const std::vector<ObjectModel> objects =
      load_objects(ctx.config, ctx.config_dir);
  json index;
  index["objects"] = json::array();
  for (const ObjectModel& obj : objects) {
    const std::string ply_name = obj.id + ".ply";
    ws.write(ply_name, cloud_to_ply(obj.cloud));
    json entry;
    entry["id"] = obj.id;
    entry["file"] = ply_name;
    entry["n_points"] = obj.cloud.size();
    entry["diameter"] = obj.diameter;
    entry["centroid"] = {obj.centroid.x(), obj.centroid.y(), obj.centroid.z()};
    index["objects"].push_back(entry);
  }
  ws.write("objects.json", index.dump(2) + "\n");
  std::cout << "synth: wrote " << objects.size() << " object(s) to "
            << ctx.out_dir.string() << "\n";
}

void run_sample(const Context& ctx, Workspace& ws) {
  check_keys(ctx.config, "config", {"objects", "scheme", "keypoints"});
  const VoteScheme scheme = scheme_from(ctx.config);
  const std::vector<ObjectModel> objects =
      load_objects(ctx.config, ctx.config_dir);
  const json* node = find(ctx.config, "keypoints");
  const KeypointSource src =
      node ? parse_keypoint_source(*node, "keypoints", ctx.config_dir)
           : KeypointSource{};
  std::size_t n_k = 0;
  for (const ObjectModel& obj : objects) {
    const KeypointSet kps = sample_keypoints(src, normalize_object(obj), scheme);
    n_k = kps.n_k();
    ws.write("keypoints-" + obj.id + ".json", keypoints_to_json(kps, {obj.id}));
  }
  std::cout << "sample: " << src.method << " keypoints (n=" << n_k << ") for "
            << objects.size() << " object(s)\n";
}

void run_optimize(const Context& ctx, Workspace& ws) {
  check_keys(ctx.config, "config",
             {"objects", "scheme", "projections", "keypoints", "optimize"});
  const VoteScheme scheme = scheme_from(ctx.config);
  const std::vector<Vec3> projections = projections_from(ctx.config);
  const std::vector<ObjectModel> normalized =
      normalize_all(load_objects(ctx.config, ctx.config_dir));

  const json* kp_node = find(ctx.config, "keypoints");
  const KeypointSource src =
      kp_node ? parse_keypoint_source(*kp_node, "keypoints", ctx.config_dir)
              : KeypointSource{};
  // one shared set over every object; the first object seeds the init
  const KeypointSet init = sample_keypoints(src, normalized.front(), scheme);

  const json* node = find(ctx.config, "optimize");
  OptimizeConfig cfg;
  if (node) {
    check_keys(*node, "optimize", {"steps", "lr", "min_separation", "loss"});
    cfg.steps = get_size_or(*node, "steps", cfg.steps);
    cfg.lr = get_number_or(*node, "lr", cfg.lr);
    cfg.min_separation =
        get_number_or(*node, "min_separation", cfg.min_separation);
  }
  cfg.loss = parse_loss(node ? find(*node, "loss") : nullptr, scheme, projections);

  const SearchResult result = optimize_keypoints_direct(init, normalized, cfg);
  ws.write("optimize-result.json", search_result_to_json(result));
  std::printf("optimize: score %.6g after %zu evaluations (%zu keypoints)\n",
              result.score, result.evaluated, result.keypoints.n_k());
}

void run_search(const Context& ctx, Workspace& ws) {
  check_keys(ctx.config, "config",
             {"objects", "scheme", "projections", "search"});
  const VoteScheme scheme = scheme_from(ctx.config);
  const std::vector<Vec3> projections = projections_from(ctx.config);
  const std::vector<ObjectModel> objects =
      load_objects(ctx.config, ctx.config_dir);

  const json* node = find(ctx.config, "search");
  std::string mode = "corners";
  std::size_t n = default_n_keypoints(scheme);
  RansacConfig rcfg;
  rcfg.scheme = scheme;
  rcfg.projections = projections;
  if (node) {
    check_keys(*node, "search",
               {"mode", "n", "iterations", "sampler", "region_radius", "w_sim",
                "w_disp", "seed"});
    mode = get_string_or(*node, "mode", mode);
    n = get_size_or(*node, "n", n);
    rcfg.iterations = get_size_or(*node, "iterations", rcfg.iterations);
    const std::string sampler = get_string_or(*node, "sampler", "sphere");
    if (sampler == "sphere")
      rcfg.mode = RandomKeypointMode::Sphere;
    else if (sampler == "bbox-region")
      rcfg.mode = RandomKeypointMode::BboxRegion;
    else
      bad_config("unknown sampler \"" + sampler + "\" (sphere, bbox-region)");
    rcfg.region_radius = get_number_or(*node, "region_radius", rcfg.region_radius);
    rcfg.w_sim = get_number_or(*node, "w_sim", rcfg.w_sim);
    rcfg.w_disp = get_number_or(*node, "w_disp", rcfg.w_disp);
    rcfg.seed = get_u64_or(*node, "seed", rcfg.seed);
  }
  if (mode != "corners" && mode != "ransac")
    bad_config("unknown search mode \"" + mode + "\" (corners, ransac)");

  for (const ObjectModel& obj : objects) {
    if (mode == "corners") {
      const auto [best, worst] = exhaustive_corner_search(obj, n, scheme);
      json doc;
      doc["best"] = json::parse(search_result_to_json(best));
      doc["worst"] = json::parse(search_result_to_json(worst));
      ws.write("search-" + obj.id + ".json", doc.dump(2) + "\n");
    } else {
      const SearchResult result = ransac_keypoint_search(obj, n, rcfg);
      ws.write("search-" + obj.id + ".json", search_result_to_json(result));
    }
  }
  std::cout << "search: " << mode << " over " << objects.size()
            << " object(s), n=" << n << "\n";
}

void run_train_encoder(const Context& ctx, Workspace& ws) {
  check_keys(ctx.config, "config",
             {"objects", "scheme", "projections", "encoder", "train"});
  const VoteScheme scheme = scheme_from(ctx.config);
  const std::vector<Vec3> projections = projections_from(ctx.config);
  const std::vector<ObjectModel> normalized =
      normalize_all(load_objects(ctx.config, ctx.config_dir));

  EncoderConfig arch;
  arch.n_keypoints = default_n_keypoints(scheme);
  if (const json* node = find(ctx.config, "encoder")) {
    check_keys(*node, "encoder", {"k", "hidden", "n_keypoints", "use_color"});
    arch.k = get_size_or(*node, "k", arch.k);
    arch.hidden = get_size_or(*node, "hidden", arch.hidden);
    arch.n_keypoints = get_size_or(*node, "n_keypoints", arch.n_keypoints);
    arch.use_color = get_bool_or(*node, "use_color", arch.use_color);
  }

  EncoderTrainConfig cfg;
  cfg.scheme = scheme;
  cfg.projections = projections;
  if (const json* node = find(ctx.config, "train")) {
    check_keys(*node, "train",
               {"epochs", "lr0", "lr_decay", "decay_every", "schedule_swap",
                "similarity", "gamma", "seed"});
    cfg.epochs = get_size_or(*node, "epochs", cfg.epochs);
    cfg.lr0 = get_number_or(*node, "lr0", cfg.lr0);
    cfg.lr_decay = get_number_or(*node, "lr_decay", cfg.lr_decay);
    cfg.decay_every = get_size_or(*node, "decay_every", cfg.decay_every);
    cfg.schedule_swap = get_size_or(*node, "schedule_swap", cfg.schedule_swap);
    cfg.similarity =
        parse_similarity(get_string_or(*node, "similarity", "exact_w1"));
    cfg.gamma = get_number_or(*node, "gamma", cfg.gamma);
    cfg.seed = get_u64_or(*node, "seed", cfg.seed);
  }

  const EncoderTraining result = train_encoder(normalized, arch, cfg);
  ws.write("encoder.json", encoder_to_json(result.encoder));
  json training;
  training["loss_trace"] = result.loss_trace;
  if (!result.loss_trace.empty()) training["final_loss"] = result.loss_trace.back();
  ws.write("training.json", training.dump(2) + "\n");
  // predictions for eval's file-backed method
  for (const ObjectModel& obj : normalized)
    ws.write("keypoints-" + obj.id + ".json",
             keypoints_to_json(result.encoder.forward(obj.cloud), {obj.id}));
  std::cout << "train-encoder: " << cfg.epochs << " epoch(s), final loss "
            << (result.loss_trace.empty() ? 0.0 : result.loss_trace.back())
            << "\n";
}

KeypointMethod parse_method(const json& node,
                            const std::vector<ObjectModel>& normalized,
                            VoteScheme scheme, const fs::path& base_dir) {
  if (!node.is_object()) bad_config("methods[] entries must be objects");
  KeypointMethod method;
  method.name = get_string(node, "name", "methods[]");
  json source = node;
  source.erase("name");
  if (const json* paths = find(source, "paths")) {
    // one file per object, in object order
    check_keys(source, "methods[] \"" + method.name + "\"", {"method", "paths"});
    if (get_string_or(source, "method", "file") != "file")
      bad_config("\"paths\" is only valid with method \"file\"");
    if (!paths->is_array() || paths->size() != normalized.size())
      bad_config("method \"" + method.name + "\" needs one path per object");
    for (const json& p : *paths) {
      if (!p.is_string()) bad_config("\"paths\" entries must be strings");
      KeypointSet kps =
          keypoints_from_json(read_text_file(base_dir / p.get<std::string>()));
      kps.validate();
      method.per_object.push_back(kps);
    }
    return method;
  }
  const KeypointSource src = parse_keypoint_source(
      source, "methods[] \"" + method.name + "\"", base_dir);
  if (src.method == "file") {
    // a single file is a shared set applied to every object
    method.shared = true;
    KeypointSet kps = keypoints_from_json(read_text_file(src.path));
    kps.validate();
    method.per_object = {kps};
    return method;
  }
  for (const ObjectModel& obj : normalized)
    method.per_object.push_back(sample_keypoints(src, obj, scheme));
  return method;
}

void run_eval(const Context& ctx, Workspace& ws) {
  check_keys(ctx.config, "config",
             {"objects", "scheme", "methods", "experiment"});
  const VoteScheme scheme = scheme_from(ctx.config);
  const std::vector<ObjectModel> objects =
      load_objects(ctx.config, ctx.config_dir);
  const std::vector<ObjectModel> normalized = normalize_all(objects);

  const json* marr = find(ctx.config, "methods");
  if (!marr || !marr->is_array() || marr->empty())
    bad_config("config needs a non-empty \"methods\" array");
  std::vector<KeypointMethod> methods;
  for (const json& node : *marr)
    methods.push_back(parse_method(node, normalized, scheme, ctx.config_dir));

  ExperimentConfig cfg;
  cfg.scheme = scheme;
  if (const json* node = find(ctx.config, "experiment")) {
    check_keys(*node, "experiment",
               {"noise_levels", "outlier_rate", "outlier_spread", "trials",
                "translation_range", "symmetric", "seed"});
    if (const json* levels = find(*node, "noise_levels")) {
      if (!levels->is_array() || levels->empty())
        bad_config("\"noise_levels\" must be a non-empty array of numbers");
      cfg.noise_levels.clear();
      for (const json& v : *levels) {
        if (!v.is_number() || v.get<double>() < 0.0)
          bad_config("\"noise_levels\" entries must be numbers >= 0");
        cfg.noise_levels.push_back(v.get<double>());
      }
    }
    cfg.outlier_rate = get_number_or(*node, "outlier_rate", cfg.outlier_rate);
    cfg.outlier_spread =
        get_number_or(*node, "outlier_spread", cfg.outlier_spread);
    cfg.trials = get_size_or(*node, "trials", cfg.trials);
    cfg.translation_range =
        get_number_or(*node, "translation_range", cfg.translation_range);
    cfg.symmetric = get_bool_or(*node, "symmetric", cfg.symmetric);
    cfg.seed = get_u64_or(*node, "seed", cfg.seed);
  }

  const ExperimentReport report = run_experiment(objects, methods, cfg);
  ws.write("report.json", experiment_report_to_json(report));
  ws.write("trials.csv", experiment_report_to_csv(report));
  std::cout << "eval: " << report.records.size() << " trial record(s), "
            << report.aggregates.size() << " aggregate row(s)\n";
}

void run_hist_export(const Context& ctx, Workspace& ws) {
  check_keys(ctx.config, "config",
             {"objects", "scheme", "projections", "keypoints", "hist"});
  const VoteScheme scheme = scheme_from(ctx.config);
  const std::vector<Vec3> projections = projections_from(ctx.config);
  const std::vector<ObjectModel> objects =
      load_objects(ctx.config, ctx.config_dir);

  const json* kp_node = find(ctx.config, "keypoints");
  const KeypointSource src =
      kp_node ? parse_keypoint_source(*kp_node, "keypoints", ctx.config_dir)
              : KeypointSource{};
  std::size_t bins = 256;
  if (const json* node = find(ctx.config, "hist")) {
    check_keys(*node, "hist", {"bins"});
    bins = get_size_or(*node, "bins", bins);
  }

  std::size_t files = 0;
  for (const ObjectModel& obj : objects) {
    const ObjectModel normalized = normalize_object(obj);
    const KeypointSet kps = sample_keypoints(src, normalized, scheme);
    const VoteField field = compute_votes(normalized.cloud, kps, scheme);
    const ScalarChannels channels = scalar_channels(field, projections);
    for (std::size_t j = 0; j < kps.n_k(); ++j) {
      std::vector<double> pooled;
      for (std::size_t c = 0; c < channels.n_channels; ++c) {
        const std::vector<double>& ch = channels.channel(j, c);
        pooled.insert(pooled.end(), ch.begin(), ch.end());
      }
      double lo = pooled.front(), hi = pooled.front();
      for (const double v : pooled) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (!(hi > lo)) {
        lo -= 0.5;
        hi += 0.5;
      }
      ws.write("hist-" + obj.id + "-k" + std::to_string(j) + ".csv",
               histogram_to_csv(build_histogram(pooled, bins, lo, hi)));
      ++files;
    }
  }
  std::cout << "hist-export: " << files << " histogram file(s) for "
            << objects.size() << " object(s)\n";
}

// ---- dispatch --------------------------------------------------------

// --seed lands on the seed the subcommand actually consumes
void apply_seed_override(json& config, const std::string& command,
                         std::uint64_t seed) {
  if (command == "synth") {
    json* arr = config.contains("objects") ? &config["objects"] : nullptr;
    if (arr && arr->is_array())
      for (json& obj : *arr)
        if (obj.is_object() && !obj.contains("path")) obj["seed"] = seed;
  } else if (command == "sample" || command == "hist-export") {
    config["keypoints"]["seed"] = seed;
  } else if (command == "optimize") {
    config["optimize"]["loss"]["seed"] = seed;
  } else if (command == "search") {
    config["search"]["seed"] = seed;
  } else if (command == "train-encoder") {
    config["train"]["seed"] = seed;
  } else if (command == "eval") {
    config["experiment"]["seed"] = seed;
  }
}

int execute(Context& ctx) {
  try {
    Workspace ws(ctx);
    if (ctx.command == "synth")
      run_synth(ctx, ws);
    else if (ctx.command == "sample")
      run_sample(ctx, ws);
    else if (ctx.command == "optimize")
      run_optimize(ctx, ws);
    else if (ctx.command == "search")
      run_search(ctx, ws);
    else if (ctx.command == "train-encoder")
      run_train_encoder(ctx, ws);
    else if (ctx.command == "eval")
      run_eval(ctx, ws);
    else
      run_hist_export(ctx, ws);
    ws.finish();
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::ConfigInvalid ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"keypoint selection and pose-simulation toolkit"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  std::string method_override;
  std::size_t n_override = 0;

  std::vector<CLI::Option*> config_opts, seed_opts;
  CLI::Option* method_opt = nullptr;
  CLI::Option* n_opt = nullptr;
  const std::pair<const char*, const char*> commands[] = {
      {"synth", "generate synthetic objects and write them as PLY"},
      {"sample", "sample keypoint sets per object"},
      {"optimize", "gradient descent on one shared keypoint set"},
      {"search", "exhaustive corner or draw-and-score keypoint search"},
      {"train-encoder", "fit the toy graph encoder"},
      {"eval", "simulated pose-recovery experiment"},
      {"hist-export", "per-keypoint vote histograms as CSV"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    config_opts.push_back(
        sub->add_option("--config", config_path, "JSON config file")
            ->required());
    sub->add_option("--out", out_dir, "output directory (default .)");
    seed_opts.push_back(sub->add_option("--seed", seed, "seed override"));
    if (std::string(name) == "sample") {
      method_opt = sub->add_option("--method", method_override,
                                   "keypoint method override");
      n_opt = sub->add_option("--n", n_override, "keypoint count override");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  Context ctx;
  ctx.command = app.get_subcommands().front()->get_name();
  ctx.out_dir = out_dir;

  try {
    const fs::path path(config_path);
    ctx.config = json::parse(read_text_file(path));
    if (!ctx.config.is_object())
      bad_config("config root must be a JSON object");
    ctx.config_dir = path.has_parent_path() ? path.parent_path() : fs::path(".");

    bool seed_given = false;
    for (const CLI::Option* opt : seed_opts) seed_given |= opt->count() > 0;
    if (seed_given) apply_seed_override(ctx.config, ctx.command, seed);
    if (method_opt && method_opt->count() > 0)
      ctx.config["keypoints"]["method"] = method_override;
    if (n_opt && n_opt->count() > 0) ctx.config["keypoints"]["n"] = n_override;

    ctx.config_hash = fnv1a64(ctx.config.dump());

    if (const char* env = std::getenv("KEYOPT_THREADS")) {
      char* end = nullptr;
      const unsigned long v = std::strtoul(env, &end, 10);
      if (end == env || *end != '\0' || v < 1)
        bad_config("KEYOPT_THREADS must be a positive integer");
      ctx.threads = static_cast<std::size_t>(v);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  return execute(ctx);
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"keyopt"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace keyopt::cli

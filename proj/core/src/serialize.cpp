#include "keyopt/serialize.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "keyopt/errors.hpp"

namespace keyopt {
namespace {

using nlohmann::json;

constexpr int kCheckpointVersion = 1;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

json vec3_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

}  // namespace

std::string keypoints_to_json(const KeypointSet& kps,
                              const std::vector<std::string>& object_ids) {
  json doc;
  doc["frame"] = "normalized";
  doc["object_ids"] = object_ids;
  json arr = json::array();
  for (const Vec3& k : kps.coords) arr.push_back(vec3_to_json(k));
  doc["keypoints"] = arr;
  return doc.dump(2) + "\n";
}

KeypointSet keypoints_from_json(const std::string& text) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.contains("keypoints") ||
      !doc["keypoints"].is_array())
    fail(ErrorKind::MalformedHeader, "keypoint document is not valid JSON");
  KeypointSet kps;
  for (const auto& entry : doc["keypoints"]) {
    if (!entry.is_array() || entry.size() != 3)
      fail(ErrorKind::MalformedHeader, "keypoint entries must be [x,y,z]");
    kps.coords.emplace_back(entry[0].get<double>(), entry[1].get<double>(),
                            entry[2].get<double>());
  }
  return kps;
}

std::string loss_report_to_json(const LossReport& report) {
  json doc;
  doc["total"] = report.total;
  doc["similarity_pairs"] = report.wass_pairs;
  doc["dispersion_pairs"] = report.dis_pairs;
  doc["per_object_similarity"] = report.per_object_similarity;
  doc["similarity_sum"] = report.similarity_sum();
  doc["dispersion_sum"] = report.dispersion_sum();
  return doc.dump(2) + "\n";
}

std::string search_result_to_json(const SearchResult& result) {
  json doc;
  doc["score"] = result.score;
  doc["evaluated"] = result.evaluated;
  doc["separation_ok"] = result.separation_ok;
  json arr = json::array();
  for (const Vec3& k : result.keypoints.coords) arr.push_back(vec3_to_json(k));
  doc["keypoints"] = arr;
  doc["trace"] = result.trace;
  if (!result.corners.empty()) doc["corners"] = result.corners;
  return doc.dump(2) + "\n";
}

std::string experiment_report_to_json(const ExperimentReport& report) {
  json doc;
  json recs = json::array();
  for (const TrialRecord& r : report.records) {
    json e;
    e["method"] = r.method;
    e["object"] = r.object;
    e["noise_std"] = r.noise_std;
    e["trial"] = r.trial;
    e["failed"] = r.failed;
    if (!r.failed) {
      e["add"] = r.add;
      e["add_ratio"] = r.add_ratio;
      e["rot_err_deg"] = r.rot_err_deg;
      e["trans_err"] = r.trans_err;
      e["keypoint_err"] = r.keypoint_err;
    }
    recs.push_back(std::move(e));
  }
  doc["trials"] = std::move(recs);
  json aggs = json::array();
  for (const MethodAggregate& a : report.aggregates) {
    json e;
    e["method"] = a.method;
    e["noise_std"] = a.noise_std;
    e["trials"] = a.trials;
    e["failures"] = a.failures;
    e["mean_add"] = a.mean_add;
    e["mean_rot_err_deg"] = a.mean_rot_err_deg;
    e["accuracy"] = a.accuracy;
    e["auc"] = a.auc;
    aggs.push_back(std::move(e));
  }
  doc["aggregates"] = std::move(aggs);
  return doc.dump(2) + "\n";
}

std::string experiment_report_to_csv(const ExperimentReport& report) {
  std::ostringstream out;
  out << "method,object,trial,add,rot_err_deg,trans_err\n";
  for (const TrialRecord& r : report.records) {
    out << r.method << ',' << r.object << ',' << r.trial << ',';
    if (r.failed)
      out << "nan,nan,nan\n";
    else
      out << fmt(r.add) << ',' << fmt(r.rot_err_deg) << ',' << fmt(r.trans_err)
          << '\n';
  }
  return out.str();
}

std::string histogram_to_csv(const Histogram& hist) {
  std::ostringstream out;
  out << "bin_lo,bin_hi,count,mass\n";
  for (std::size_t b = 0; b < hist.bins(); ++b)
    out << fmt(hist.bin_edges[b]) << ',' << fmt(hist.bin_edges[b + 1]) << ','
        << hist.raw_counts[b] << ',' << fmt(hist.mass[b]) << '\n';
  return out.str();
}

std::string cloud_to_ply(const PointCloud& cloud) {
  std::ostringstream out;
  out << "ply\nformat ascii 1.0\nelement vertex " << cloud.size() << "\n";
  for (const char* p : {"x", "y", "z"}) out << "property float " << p << "\n";
  for (const char* p : {"red", "green", "blue"}) out << "property float " << p << "\n";
  out << "end_header\n";
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.positions[i];
    const Vec3& c = cloud.colors[i];
    out << fmt(p.x()) << ' ' << fmt(p.y()) << ' ' << fmt(p.z()) << ' ' << fmt(c.x())
        << ' ' << fmt(c.y()) << ' ' << fmt(c.z()) << '\n';
  }
  return out.str();
}

std::string encoder_to_json(const GraphEncoder& enc) {
  json doc;
  doc["version"] = kCheckpointVersion;
  doc["kind"] = "graph-encoder";
  doc["k"] = enc.arch.k;
  doc["hidden"] = enc.arch.hidden;
  doc["n_keypoints"] = enc.arch.n_keypoints;
  doc["use_color"] = enc.arch.use_color;
  doc["params"] = enc.params;
  return doc.dump() + "\n";
}

GraphEncoder encoder_from_json(const std::string& text) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded())
    fail(ErrorKind::MalformedHeader, "checkpoint is not valid JSON");
  if (!doc.contains("version"))
    fail(ErrorKind::MalformedHeader, "checkpoint is missing the version field");
  if (doc["version"].get<int>() != kCheckpointVersion)
    fail(ErrorKind::MalformedHeader,
         "unsupported checkpoint version " + doc["version"].dump());
  for (const char* key : {"k", "hidden", "n_keypoints", "use_color", "params"})
    if (!doc.contains(key))
      fail(ErrorKind::MalformedHeader,
           std::string("checkpoint is missing field '") + key + "'");
  GraphEncoder enc;
  enc.arch.k = doc["k"].get<std::size_t>();
  enc.arch.hidden = doc["hidden"].get<std::size_t>();
  enc.arch.n_keypoints = doc["n_keypoints"].get<std::size_t>();
  enc.arch.use_color = doc["use_color"].get<bool>();
  enc.params = doc["params"].get<std::vector<double>>();
  if (enc.params.size() != GraphEncoder::param_count(enc.arch))
    fail(ErrorKind::MalformedHeader,
         "checkpoint parameter count does not match its architecture");
  return enc;
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::FileUnreadable, "cannot open " + path.string() +
                                                " for writing");
  out << content;
  if (!out) fail(ErrorKind::FileUnreadable, "failed writing " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::FileUnreadable, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace keyopt

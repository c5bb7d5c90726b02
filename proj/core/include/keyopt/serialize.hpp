#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "keyopt/keygnet.hpp"
#include "keyopt/optimizer.hpp"
#include "keyopt/posesim.hpp"

namespace keyopt {

// JSON and CSV views of the core artifacts. All formatting is deterministic,
// so identical inputs serialize to identical bytes.

std::string keypoints_to_json(const KeypointSet& kps,
                              const std::vector<std::string>& object_ids);
KeypointSet keypoints_from_json(const std::string& text);

std::string loss_report_to_json(const LossReport& report);
std::string search_result_to_json(const SearchResult& result);

std::string experiment_report_to_json(const ExperimentReport& report);
// per-trial rows: method,object,trial,add,rot_err_deg,trans_err
std::string experiment_report_to_csv(const ExperimentReport& report);

// rows: bin_lo,bin_hi,count,mass
std::string histogram_to_csv(const Histogram& hist);

// ascii PLY with float colors; load_point_cloud reads it back bit-exact
std::string cloud_to_ply(const PointCloud& cloud);

// Checkpoint with a version field, the architecture header, and the flat
// parameter vector.
std::string encoder_to_json(const GraphEncoder& enc);
GraphEncoder encoder_from_json(const std::string& text);

void write_text_file(const std::filesystem::path& path,
                     const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace keyopt

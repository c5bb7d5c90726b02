#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "keyopt/geometry.hpp"
#include "keyopt/serialize.hpp"

using namespace keyopt;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// scratch directory per test case, removed on destruction
struct TempDir {
  fs::path path;

  TempDir() {
    path = fs::temp_directory_path() /
           ("keyopt_cli_test_" + std::to_string(std::rand()) + "_" +
            std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }

  std::string file(const std::string& name, const std::string& content) const {
    const fs::path p = path / name;
    std::ofstream out(p);
    out << content;
    return p.string();
  }
  std::string sub(const std::string& name) const {
    return (path / name).string();
  }
};

const char* kBoxConfig = R"({
  "objects": [
    {"id": "box", "kind": "box", "extents": [2.0, 1.0, 0.5], "n_points": 300, "seed": 7}
  ]
})";

json read_json(const std::string& path) {
  return json::parse(read_text_file(path));
}

}  // namespace

TEST_CASE("sample writes the requested keypoint count") {
  TempDir tmp;
  const std::string cfg = tmp.file("cfg.json", kBoxConfig);
  const int code = cli::run({"sample", "--config", cfg, "--out", tmp.sub("out"),
                             "--method", "fps", "--n", "8"});
  REQUIRE(code == 0);
  const KeypointSet kps = keypoints_from_json(
      read_text_file(tmp.sub("out") + "/keypoints-box.json"));
  CHECK(kps.n_k() == 8);
  kps.validate();
}

TEST_CASE("sample keypoint count defaults follow the scheme") {
  TempDir tmp;
  const std::string radial = tmp.file("radial.json", R"({
    "objects": [{"id": "b", "kind": "box", "extents": [1, 1, 1], "n_points": 200, "seed": 1}],
    "scheme": "radial"
  })");
  REQUIRE(cli::run({"sample", "--config", radial, "--out", tmp.sub("r")}) == 0);
  CHECK(keypoints_from_json(read_text_file(tmp.sub("r") + "/keypoints-b.json"))
            .n_k() == 3);

  const std::string offset = tmp.file("offset.json", R"({
    "objects": [{"id": "b", "kind": "box", "extents": [1, 1, 1], "n_points": 200, "seed": 1}],
    "scheme": "offset"
  })");
  REQUIRE(cli::run({"sample", "--config", offset, "--out", tmp.sub("o")}) == 0);
  CHECK(keypoints_from_json(read_text_file(tmp.sub("o") + "/keypoints-b.json"))
            .n_k() == 8);
}

TEST_CASE("hist-export writes one normalized histogram per keypoint") {
  TempDir tmp;
  const std::string cfg = tmp.file("cfg.json", R"({
    "objects": [{"id": "box", "kind": "box", "extents": [2.0, 1.0, 0.5], "n_points": 300, "seed": 7}],
    "scheme": "radial",
    "keypoints": {"method": "fps", "n": 3},
    "hist": {"bins": 32}
  })");
  REQUIRE(cli::run({"hist-export", "--config", cfg, "--out", tmp.sub("h")}) == 0);

  for (int k = 0; k < 3; ++k) {
    const std::string csv =
        read_text_file(tmp.sub("h") + "/hist-box-k" + std::to_string(k) + ".csv");
    std::istringstream lines(csv);
    std::string line;
    std::getline(lines, line);
    REQUIRE(line == "bin_lo,bin_hi,count,mass");
    double mass = 0.0;
    std::size_t rows = 0;
    while (std::getline(lines, line)) {
      const auto last_comma = line.rfind(',');
      mass += std::stod(line.substr(last_comma + 1));
      ++rows;
    }
    CHECK(rows == 32);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK_FALSE(fs::exists(tmp.sub("h") + "/hist-box-k3.csv"));
}

TEST_CASE("eval at zero noise recovers every pose") {
  TempDir tmp;
  const std::string cfg = tmp.file("cfg.json", R"({
    "objects": [{"id": "box", "kind": "box", "extents": [2.0, 1.0, 0.5], "n_points": 300, "seed": 7}],
    "scheme": "offset",
    "methods": [{"name": "fps", "method": "fps", "n": 4}],
    "experiment": {"noise_levels": [0.0], "trials": 4, "seed": 11}
  })");
  REQUIRE(cli::run({"eval", "--config", cfg, "--out", tmp.sub("e")}) == 0);

  const json report = read_json(tmp.sub("e") + "/report.json");
  REQUIRE(report["trials"].size() == 4);
  for (const json& rec : report["trials"]) {
    CHECK_FALSE(rec["failed"].get<bool>());
    CHECK(rec["add"].get<double>() < 1e-6);
  }
  const std::string csv = read_text_file(tmp.sub("e") + "/trials.csv");
  CHECK(csv.rfind("method,object,trial,add,rot_err_deg,trans_err", 0) == 0);
}

TEST_CASE("synth output loads back bit for bit") {
  TempDir tmp;
  const std::string cfg = tmp.file("cfg.json", kBoxConfig);
  REQUIRE(cli::run({"synth", "--config", cfg, "--out", tmp.sub("s")}) == 0);

  const ObjectModel direct = make_synthetic_object(
      ShapeKind::Box, Vec3(2.0, 1.0, 0.5), 300, 7, "box");
  const PointCloud loaded =
      load_point_cloud(tmp.sub("s") + "/box.ply", CloudFormat::PlyAscii);
  REQUIRE(loaded.size() == direct.cloud.size());
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    CHECK(loaded.positions[i] == direct.cloud.positions[i]);
    CHECK(loaded.colors[i] == direct.cloud.colors[i]);
  }

  const json index = read_json(tmp.sub("s") + "/objects.json");
  REQUIRE(index["objects"].size() == 1);
  CHECK(index["objects"][0]["n_points"].get<std::size_t>() == 300);
  CHECK(index["objects"][0]["diameter"].get<double>() ==
        doctest::Approx(direct.diameter));
}

TEST_CASE("re-running a command reproduces its artifacts byte for byte") {
  TempDir tmp;
  const std::string cfg = tmp.file("cfg.json", R"({
    "objects": [{"id": "box", "kind": "box", "extents": [2.0, 1.0, 0.5], "n_points": 200, "seed": 7}],
    "scheme": "radial",
    "methods": [{"name": "rand", "method": "random-sphere", "n": 4, "seed": 3}],
    "experiment": {"noise_levels": [0.0, 0.02], "trials": 3, "outlier_rate": 0.1, "outlier_spread": 0.3, "seed": 5}
  })");
  REQUIRE(cli::run({"eval", "--config", cfg, "--out", tmp.sub("a")}) == 0);
  REQUIRE(cli::run({"eval", "--config", cfg, "--out", tmp.sub("b")}) == 0);

  CHECK(read_text_file(tmp.sub("a") + "/report.json") ==
        read_text_file(tmp.sub("b") + "/report.json"));
  CHECK(read_text_file(tmp.sub("a") + "/trials.csv") ==
        read_text_file(tmp.sub("b") + "/trials.csv"));

  // the manifest may differ only inside its metadata block
  json ma = read_json(tmp.sub("a") + "/manifest.json");
  json mb = read_json(tmp.sub("b") + "/manifest.json");
  ma.erase("metadata");
  mb.erase("metadata");
  CHECK(ma == mb);
}

TEST_CASE("seed override reseeds random sampling") {
  TempDir tmp;
  const std::string cfg = tmp.file("cfg.json", R"({
    "objects": [{"id": "b", "kind": "box", "extents": [1, 1, 1], "n_points": 200, "seed": 1}],
    "keypoints": {"method": "random-sphere", "n": 4, "seed": 3}
  })");
  REQUIRE(cli::run({"sample", "--config", cfg, "--out", tmp.sub("x")}) == 0);
  REQUIRE(cli::run({"sample", "--config", cfg, "--out", tmp.sub("y"),
                    "--seed", "3"}) == 0);
  REQUIRE(cli::run({"sample", "--config", cfg, "--out", tmp.sub("z"),
                    "--seed", "99"}) == 0);

  const std::string base = read_text_file(tmp.sub("x") + "/keypoints-b.json");
  CHECK(read_text_file(tmp.sub("y") + "/keypoints-b.json") == base);
  CHECK(read_text_file(tmp.sub("z") + "/keypoints-b.json") != base);

  // the override is part of the hashed config
  CHECK(read_json(tmp.sub("x") + "/manifest.json")["config_hash"] !=
        read_json(tmp.sub("z") + "/manifest.json")["config_hash"]);
}

TEST_CASE("search in corner mode reports the full enumeration") {
  TempDir tmp;
  const std::string cfg = tmp.file("cfg.json", R"({
    "objects": [{"id": "bar", "kind": "box", "extents": [2.0, 0.6, 0.4], "n_points": 400, "seed": 3}],
    "scheme": "radial",
    "search": {"mode": "corners", "n": 3}
  })");
  REQUIRE(cli::run({"search", "--config", cfg, "--out", tmp.sub("s")}) == 0);

  const json doc = read_json(tmp.sub("s") + "/search-bar.json");
  CHECK(doc["best"]["evaluated"].get<int>() == 56);
  CHECK(doc["best"]["corners"].size() == 3);
  CHECK(doc["worst"]["corners"].size() == 3);
  CHECK(doc["best"]["score"].get<double>() < doc["worst"]["score"].get<double>());
}

TEST_CASE("optimize writes a monotone trace and final score") {
  TempDir tmp;
  const std::string cfg = tmp.file("cfg.json", R"({
    "objects": [{"id": "box", "kind": "box", "extents": [2.0, 1.0, 0.5], "n_points": 150, "seed": 7}],
    "scheme": "radial",
    "keypoints": {"method": "fps", "n": 3},
    "optimize": {"steps": 15, "lr": 0.05}
  })");
  REQUIRE(cli::run({"optimize", "--config", cfg, "--out", tmp.sub("o")}) == 0);

  const json doc = read_json(tmp.sub("o") + "/optimize-result.json");
  const std::vector<double> trace = doc["trace"].get<std::vector<double>>();
  REQUIRE(!trace.empty());
  for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] <= trace[i - 1]);
  CHECK(doc["score"].get<double>() == doctest::Approx(trace.back()));
}

TEST_CASE("train-encoder artifacts feed a file-backed eval") {
  TempDir tmp;
  const std::string train_cfg = tmp.file("train.json", R"({
    "objects": [{"id": "box", "kind": "box", "extents": [2.0, 1.0, 0.5], "n_points": 60, "seed": 7}],
    "scheme": "radial",
    "encoder": {"k": 4, "hidden": 6, "n_keypoints": 4},
    "train": {"epochs": 2, "seed": 5}
  })");
  REQUIRE(cli::run({"train-encoder", "--config", train_cfg, "--out",
                    tmp.sub("t")}) == 0);

  const GraphEncoder enc =
      encoder_from_json(read_text_file(tmp.sub("t") + "/encoder.json"));
  CHECK(enc.arch.hidden == 6);
  CHECK(read_json(tmp.sub("t") + "/training.json")["loss_trace"].size() == 2);

  const std::string eval_cfg = tmp.file("eval.json", R"({
    "objects": [{"id": "box", "kind": "box", "extents": [2.0, 1.0, 0.5], "n_points": 60, "seed": 7}],
    "scheme": "offset",
    "methods": [{"name": "trained", "method": "file", "path": ")" +
                                                tmp.sub("t") +
                                                R"(/keypoints-box.json"}],
    "experiment": {"noise_levels": [0.0], "trials": 2, "seed": 1}
  })");
  REQUIRE(cli::run({"eval", "--config", eval_cfg, "--out", tmp.sub("e")}) == 0);
  CHECK(read_json(tmp.sub("e") + "/report.json")["trials"].size() == 2);
}

TEST_CASE("manifest lists every artifact with the config hash") {
  TempDir tmp;
  const std::string cfg = tmp.file("cfg.json", kBoxConfig);
  REQUIRE(cli::run({"synth", "--config", cfg, "--out", tmp.sub("s")}) == 0);

  const json manifest = read_json(tmp.sub("s") + "/manifest.json");
  CHECK(manifest["command"] == "synth");
  CHECK(manifest["config_hash"].get<std::string>().size() == 16);
  const auto artifacts = manifest["artifacts"].get<std::vector<std::string>>();
  REQUIRE(artifacts == std::vector<std::string>{"box.ply", "objects.json"});
  for (const std::string& name : artifacts)
    CHECK(fs::exists(fs::path(tmp.sub("s")) / name));
  CHECK(manifest["metadata"].contains("created_unix"));
  CHECK(manifest["metadata"]["threads"].get<int>() == 1);
}

TEST_CASE("validation problems exit with code 1") {
  TempDir tmp;

  SUBCASE("missing config flag") {
    CHECK(cli::run({"sample"}) == 1);
  }
  SUBCASE("unreadable config") {
    CHECK(cli::run({"sample", "--config", tmp.sub("absent.json")}) == 1);
  }
  SUBCASE("malformed json") {
    const std::string cfg = tmp.file("bad.json", "{nope");
    CHECK(cli::run({"sample", "--config", cfg, "--out", tmp.sub("o")}) == 1);
  }
  SUBCASE("unknown top-level key") {
    const std::string cfg = tmp.file("bad.json", R"({
      "objects": [{"id": "b", "kind": "box", "extents": [1, 1, 1]}],
      "schemee": "radial"
    })");
    CHECK(cli::run({"sample", "--config", cfg, "--out", tmp.sub("o")}) == 1);
  }
  SUBCASE("unknown nested key") {
    const std::string cfg = tmp.file("bad.json", R"({
      "objects": [{"id": "b", "kind": "box", "extents": [1, 1, 1], "n_pointz": 50}]
    })");
    CHECK(cli::run({"sample", "--config", cfg, "--out", tmp.sub("o")}) == 1);
  }
  SUBCASE("wrong value type") {
    const std::string cfg = tmp.file("bad.json", R"({
      "objects": [{"id": "b", "kind": "box", "extents": "big"}]
    })");
    CHECK(cli::run({"sample", "--config", cfg, "--out", tmp.sub("o")}) == 1);
  }
  SUBCASE("unknown subcommand") {
    CHECK(cli::run({"frobnicate"}) == 1);
  }
  SUBCASE("invalid loss weights") {
    const std::string cfg = tmp.file("bad.json", R"({
      "objects": [{"id": "b", "kind": "box", "extents": [1, 1, 1], "n_points": 80, "seed": 1}],
      "optimize": {"loss": {"alpha": 0.9, "beta": 0.3}}
    })");
    CHECK(cli::run({"optimize", "--config", cfg, "--out", tmp.sub("o")}) == 1);
  }
}

TEST_CASE("runtime failures exit with code 2") {
  TempDir tmp;

  SUBCASE("missing object file") {
    const std::string cfg = tmp.file("cfg.json", R"({
      "objects": [{"id": "b", "path": "missing.ply"}]
    })");
    CHECK(cli::run({"sample", "--config", cfg, "--out", tmp.sub("o")}) == 2);
  }
  SUBCASE("more keypoints than cloud points") {
    const std::string cfg = tmp.file("cfg.json", R"({
      "objects": [{"id": "b", "kind": "box", "extents": [1, 1, 1], "n_points": 5, "seed": 1}],
      "keypoints": {"method": "fps", "n": 9}
    })");
    CHECK(cli::run({"sample", "--config", cfg, "--out", tmp.sub("o")}) == 2);
  }
}

#include "boxfield/manifest.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "boxfield/measure.hpp"
#include "boxfield/process.hpp"
#include "doctest.h"

using namespace boxfield;

namespace {

std::filesystem::path scratch_dir() {
  const auto dir = std::filesystem::temp_directory_path() / "boxfield_manifest_test";
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("measure schema mirrors the mini-language fields") {
  const nlohmann::json lap = measure_schema(parse_measure("laplace:C=1,c=2"));
  CHECK(lap["kind"] == "laplace");
  CHECK(lap["C"] == 1.0);
  CHECK(lap["c"] == 2.0);
  CHECK(lap["tx"] == 0.0);
  // "spec" reparses to the same descriptor.
  CHECK(parse_measure(lap["spec"].get<std::string>()).format() ==
        parse_measure("laplace:C=1,c=2").format());

  const nlohmann::json g = measure_schema(parse_measure("gauss:C=2,s=0.5,tx=1"));
  CHECK(g["kind"] == "gauss");
  CHECK(g["s"] == 0.5);
  CHECK(g["tx"] == 1.0);

  const nlohmann::json combo =
      measure_schema(parse_measure("combo:1*laplace:c=1;-0.5*box:0,0,1,1"));
  CHECK(combo["kind"] == "combo");
  REQUIRE(combo["terms"].size() == 2);
  CHECK(combo["terms"][0]["weight"] == 1.0);
  CHECK(combo["terms"][0]["measure"]["kind"] == "laplace");
  CHECK(combo["terms"][1]["weight"] == -0.5);
  CHECK(combo["terms"][1]["measure"]["x_hi"] == 1.0);
  // laplace(1,1) has total mass 4, the unit box 1.
  CHECK(parse_measure(combo["spec"].get<std::string>()).total_mass() ==
        doctest::Approx(1.0 * 4.0 - 0.5 * 1.0).epsilon(1e-12));
}

TEST_CASE("value csv round-trips doubles bit-for-bit") {
  const auto dir = scratch_dir();
  const std::string path = (dir / "samples.csv").string();
  const std::vector<double> values = {0.1,
                                      1.0 / 3.0,
                                      -2.5e17,
                                      1e-300,
                                      std::numbers::pi,
                                      0.0,
                                      -0.0,
                                      123456789.123456789};
  write_value_csv(path, values);

  const std::vector<double> back = read_value_csv(path);
  REQUIRE(back.size() == values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    CHECK(std::memcmp(&back[i], &values[i], sizeof(double)) == 0);
  }

  // Rewriting from the parsed values reproduces the bytes: reruns of a run
  // with the same samples give byte-identical artifacts.
  const std::string again = (dir / "samples2.csv").string();
  write_value_csv(again, back);
  CHECK(slurp(path) == slurp(again));
  CHECK(slurp(path).substr(0, 6) == "value\n");

  std::ofstream bad(dir / "bad.csv", std::ios::binary);
  bad << "not_the_header\n1.0\n";
  bad.close();
  CHECK_THROWS_AS(read_value_csv((dir / "bad.csv").string()), std::invalid_argument);
  CHECK_THROWS_AS(read_value_csv((dir / "absent.csv").string()), std::runtime_error);
}

TEST_CASE("cf csv keeps its three columns") {
  const auto dir = scratch_dir();
  const std::string path = (dir / "cf.csv").string();
  const std::vector<CfRow> rows = {{-2.0, 0.5, -0.25}, {0.0, 1.0, 0.0}, {2.0, 0.5, 0.25}};
  write_cf_csv(path, rows);
  CHECK(slurp(path).substr(0, 8) == "t,re,im\n");
  const auto back = read_cf_csv(path);
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].t == rows[i].t);
    CHECK(back[i].re == rows[i].re);
    CHECK(back[i].im == rows[i].im);
  }
}

TEST_CASE("atomic writes land whole and leave no droppings") {
  const auto dir = scratch_dir();
  const std::string path = (dir / "artifact.txt").string();
  write_file_atomic(path, "first\n");
  write_file_atomic(path, "second\n");  // overwrite through rename
  CHECK(slurp(path) == "second\n");
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    CHECK(entry.path().string().find(".tmp.") == std::string::npos);
  }
}

TEST_CASE("manifests echo the run and load back") {
  const auto dir = scratch_dir();
  const std::string path = (dir / "manifest.json").string();

  TruncationReport trunc;
  trunc.window_half = Eigen::Array2d{3.5, 3.5};
  trunc.cap = Eigen::Array2d{100.0, std::numeric_limits<double>::infinity()};
  trunc.discarded_mass = 1e-7;
  trunc.eps_budget = 1e-6;
  trunc.expected_count = 12345.0;

  RunManifest m;
  m.command = "simulate";
  m.seed = 42;
  m.wall_ms = 17.25;
  m.config = {{"regime", "points"}, {"gamma1", 1.3}, {"gamma2", 2.5},
              {"rho", 0.01},        {"measure", "laplace:C=1,c=1"}};
  m.truncation = truncation_json(trunc);
  m.results = {{"replicates", 1000}};
  write_manifest(path, m);

  const std::string raw = slurp(path);
  CHECK(raw.find("\"versions\"") != std::string::npos);
  CHECK(raw.find(std::string(kBoxfieldVersion)) != std::string::npos);
  CHECK(raw.find("\"zlib\"") != std::string::npos);

  const RunManifest back = load_manifest(path);
  CHECK(back.command == "simulate");
  CHECK(back.seed == 42);
  CHECK(back.status == "success");
  CHECK(back.config["gamma1"] == 1.3);
  CHECK(back.config["measure"] == "laplace:C=1,c=1");
  CHECK(back.truncation["window_half"][0] == 3.5);
  CHECK(back.truncation["cap"][0] == 100.0);
  CHECK(back.truncation["cap"][1].is_null());  // +inf serializes as null
  CHECK(back.results["replicates"] == 1000);
}

#pragma once
// Persistence layer shared by the CLI and the test suites: the measure
// mini-language, CSV sample/CF tables, atomic file writes, and the run
// manifest that makes every invocation replayable.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "boxfield/measure.hpp"
#include "boxfield/process.hpp"

namespace boxfield {

inline constexpr std::string_view kBoxfieldVersion = "0.1.0";

// JSON object mirroring the fields of the measure mini-language: the flat
// families carry their keys ("kind", "C", "c"/"s", "tx", "ty" or the box
// corners), combinations nest under "terms", and "spec" holds the string
// that parse_measure would accept to rebuild the descriptor.
nlohmann::json measure_schema(const MeasureDescriptor& mu);

// Sample arrays: header line "value", one value per line, %.17g (so parsing
// back reproduces the doubles bit-for-bit and reruns compare byte-identical).
void write_value_csv(const std::string& path, const std::vector<double>& values);
std::vector<double> read_value_csv(const std::string& path);

// CF tables: header "t,re,im".
struct CfRow {
  double t = 0, re = 0, im = 0;
};
void write_cf_csv(const std::string& path, const std::vector<CfRow>& rows);
std::vector<CfRow> read_cf_csv(const std::string& path);

// All writers go through here: write a sibling temp file, then rename, so a
// crash never leaves a half-written artifact under the target name.
void write_file_atomic(const std::string& path, std::string_view bytes);
void write_json_atomic(const std::string& path, const nlohmann::json& j);

nlohmann::json truncation_json(const TruncationReport& report);

// Record of one run: the full resolved configuration (enough to re-run it),
// library versions, seed, timing, and command-specific results.
struct RunManifest {
  std::string command;
  std::string status = "success";  // or "numerical-failure" with best estimate
  std::uint64_t seed = 0;
  double wall_ms = 0;
  nlohmann::json config;      // resolved flag/file values, post-merge
  nlohmann::json truncation;  // present when a field was sampled
  nlohmann::json results;

  nlohmann::json to_json() const;  // adds the versions block
  static RunManifest from_json(const nlohmann::json& j);
};

void write_manifest(const std::string& path, const RunManifest& m);
RunManifest load_manifest(const std::string& path);

}  // namespace boxfield

#include "boxfield/manifest.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <stdexcept>

#include <zlib.h>

#include <Eigen/Core>

namespace boxfield {

namespace {

nlohmann::json term_schema(const ProductTerm& t) {
  const double amp = t.k1.amp * t.k2.amp;
  switch (t.k1.kind) {
    case Kernel1D::Kind::exp_decay:
      return {{"kind", "laplace"}, {"C", amp},          {"c", t.k1.par},
              {"tx", t.k1.shift},  {"ty", t.k2.shift}};
    case Kernel1D::Kind::gaussian:
      return {{"kind", "gauss"},  {"C", amp},          {"s", t.k1.par},
              {"tx", t.k1.shift}, {"ty", t.k2.shift}};
    case Kernel1D::Kind::interval:
      return {{"kind", "box"},   {"x_lo", t.k1.lo}, {"y_lo", t.k2.lo},
              {"x_hi", t.k1.hi}, {"y_hi", t.k2.hi}, {"amp", amp}};
  }
  return {};
}

}  // namespace

nlohmann::json measure_schema(const MeasureDescriptor& mu) {
  const auto& terms = mu.terms();
  nlohmann::json j;
  // Mirror format(): a lone unit-weight term flattens, everything else nests.
  if (terms.size() == 1 && std::abs(terms.front().weight) == 1.0) {
    ProductTerm t = terms.front();
    t.k1.amp *= terms.front().weight;
    j = term_schema(t);
  } else {
    j["kind"] = "combo";
    j["terms"] = nlohmann::json::array();
    for (const ProductTerm& t : terms) {
      j["terms"].push_back({{"weight", t.weight}, {"measure", term_schema(t)}});
    }
  }
  j["spec"] = mu.format();
  return j;
}

// ---------------------------------------------------------------------------
// CSV.

namespace {

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t pos; (pos = s.find(sep, start)) != std::string::npos; start = pos + 1) {
    out.push_back(s.substr(start, pos - start));
  }
  out.push_back(s.substr(start));
  return out;
}

double parse_csv_number(const std::string& token, std::size_t line_no) {
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(token.c_str(), &end);
  if (token.empty() || end != token.c_str() + token.size()) {
    throw std::invalid_argument("csv: malformed number at line " + std::to_string(line_no) +
                                ": '" + token + "'");
  }
  return v;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("csv: cannot open '" + path + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

}  // namespace

void write_value_csv(const std::string& path, const std::vector<double>& values) {
  std::string out = "value\n";
  for (double v : values) {
    out += format_g17(v);
    out += '\n';
  }
  write_file_atomic(path, out);
}

std::vector<double> read_value_csv(const std::string& path) {
  const std::vector<std::string> lines = read_lines(path);
  if (lines.empty() || lines[0] != "value") {
    throw std::invalid_argument("csv: '" + path + "' does not start with header 'value'");
  }
  std::vector<double> values;
  values.reserve(lines.size() - 1);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;  // tolerate a trailing blank line
    values.push_back(parse_csv_number(lines[i], i + 1));
  }
  return values;
}

void write_cf_csv(const std::string& path, const std::vector<CfRow>& rows) {
  std::string out = "t,re,im\n";
  for (const CfRow& r : rows) {
    out += format_g17(r.t);
    out += ',';
    out += format_g17(r.re);
    out += ',';
    out += format_g17(r.im);
    out += '\n';
  }
  write_file_atomic(path, out);
}

std::vector<CfRow> read_cf_csv(const std::string& path) {
  const std::vector<std::string> lines = read_lines(path);
  if (lines.empty() || lines[0] != "t,re,im") {
    throw std::invalid_argument("csv: '" + path + "' does not start with header 't,re,im'");
  }
  std::vector<CfRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::vector<std::string> cells = split(lines[i], ',');
    if (cells.size() != 3) {
      throw std::invalid_argument("csv: expected 3 columns at line " + std::to_string(i + 1));
    }
    rows.push_back(CfRow{parse_csv_number(cells[0], i + 1), parse_csv_number(cells[1], i + 1),
                         parse_csv_number(cells[2], i + 1)});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Atomic writes and manifests.

void write_file_atomic(const std::string& path, std::string_view bytes) {
  static int counter = 0;
  const std::string tmp = path + ".tmp." + std::to_string(++counter);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("write: cannot open temp file '" + tmp + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
      std::remove(tmp.c_str());
      throw std::runtime_error("write: short write to '" + tmp + "'");
    }
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw std::runtime_error("write: cannot rename '" + tmp + "' to '" + path + "'");
  }
}

void write_json_atomic(const std::string& path, const nlohmann::json& j) {
  write_file_atomic(path, j.dump(2) + "\n");
}

namespace {

nlohmann::json finite_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

}  // namespace

nlohmann::json truncation_json(const TruncationReport& report) {
  nlohmann::json j;
  j["window_half"] = {report.window_half.x(), report.window_half.y()};
  j["cap"] = {finite_or_null(report.cap.x()), finite_or_null(report.cap.y())};
  j["discarded_mass"] = report.discarded_mass;
  j["eps_budget"] = report.eps_budget;
  j["expected_count"] = report.expected_count;
  return j;
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json j;
  j["command"] = command;
  j["status"] = status;
  j["seed"] = seed;
  j["wall_ms"] = wall_ms;
  j["config"] = config;
  if (!truncation.is_null()) j["truncation"] = truncation;
  if (!results.is_null()) j["results"] = results;
  j["versions"] = {
      {"boxfield", std::string(kBoxfieldVersion)},
      {"compiler", __VERSION__},
      {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                    "." + std::to_string(EIGEN_MINOR_VERSION)},
      {"json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                   std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                   std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
      {"zlib", ZLIB_VERSION},
  };
  return j;
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
  RunManifest m;
  m.command = j.at("command").get<std::string>();
  m.status = j.value("status", "success");
  m.seed = j.at("seed").get<std::uint64_t>();
  m.wall_ms = j.value("wall_ms", 0.0);
  m.config = j.at("config");
  m.truncation = j.value("truncation", nlohmann::json{});
  m.results = j.value("results", nlohmann::json{});
  return m;
}

void write_manifest(const std::string& path, const RunManifest& m) {
  write_json_atomic(path, m.to_json());
}

RunManifest load_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("manifest: cannot open '" + path + "'");
  nlohmann::json j;
  in >> j;
  return RunManifest::from_json(j);
}

}  // namespace boxfield

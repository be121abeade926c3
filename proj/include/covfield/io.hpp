#pragma once

#include "covfield/recovery.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace covfield {

using Json = nlohmann::json;

inline constexpr std::string_view kVersion = "0.1.0";

/// Parses JSON text; syntax errors become Parse errors with line and column.
Json parse_json_text(const std::string& text, const std::string& source);
Json read_json_file(const std::string& path);
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);
/// Two-space indented dump plus a trailing newline. Doubles use the
/// shortest representation that round-trips (at most 17 significant digits).
std::string dump_json(const Json& j);

/// Points are plain coordinate arrays; the manifold tag lives in the
/// enclosing object.
Json point_to_json(const Point& p);
Point point_from_json(const Manifold& m, const Json& j, const std::string& where);
std::vector<Point> points_from_json(const Manifold& m, const Json& j, const std::string& where);

/// {"dim": n, "data": [row-major entries]}
Json spd_to_json(const SpdMatrix& s);
SpdMatrix spd_from_json(const Json& j, const std::string& where);

/// {"manifold": tag, "support": [[...], ...], "weights": [...]}
Json pmf_to_json(const Pmf& f);
Pmf pmf_from_json(const Json& j);

/// Recovery problem file. Either `tensors` or `ground_truth` must be given;
/// missing tensors are synthesized from the ground truth.
struct ProblemFile {
  Manifold manifold = Manifold::sphere2();
  Amplitude amplitude = Amplitude::unit();
  std::optional<InvariantKind> invariant;
  std::vector<Point> support;
  std::vector<Point> observations;
  std::vector<SpdMatrix> tensors;
  std::optional<Vec> ground_truth;

  CovarianceSet covariance_set() const;
};

Json problem_to_json(const ProblemFile& p);
ProblemFile problem_from_json(const Json& j);

std::uint64_t fnv1a(std::string_view data);

/// Output envelope: {"meta": {"command", "version", "config_hash", "config"},
/// "payload": ...}. The hash is FNV-1a over the compact dump of the config.
struct ResultRecord {
  std::string command;
  Json config;
  Json payload;

  Json to_json() const;
  static ResultRecord from_json(const Json& j);
  friend bool operator==(const ResultRecord&, const ResultRecord&) = default;
};

/// Shortest round-trip form of a double, or null for non-finite values.
Json number_json(double v);
Json vector_json(const Vec& v);
Vec vector_from_json(const Json& j, const std::string& where);

/// Number with 12 significant digits for CSV output.
std::string csv_number(double v);
std::string csv_row(const std::vector<std::string>& cells);

}  // namespace covfield

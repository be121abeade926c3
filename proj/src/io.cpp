#include "covfield/io.hpp"

#include "covfield/error.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace covfield {

namespace {

// Line and column of a byte offset, both 1-based.
std::pair<std::size_t, std::size_t> locate(const std::string& text, std::size_t offset) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

const Json& require(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) {
    throw Error(ErrorKind::Parse, where + ": missing field '" + key + "'");
  }
  return j.at(key);
}

double number_from_json(const Json& j, const std::string& where) {
  if (!j.is_number()) throw Error(ErrorKind::Parse, where + ": expected a number");
  return j.get<double>();
}

template <class F>
auto with_context(const std::string& where, F f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Parse) throw;
    throw Error(ErrorKind::Parse, where + ": " + e.what());
  }
}

}  // namespace

Json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto [line, col] = locate(text, e.byte == 0 ? 0 : e.byte - 1);
    throw Error(ErrorKind::Parse, source + ":" + std::to_string(line) + ":" + std::to_string(col) +
                                      ": invalid JSON");
  }
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json read_json_file(const std::string& path) { return parse_json_text(read_text_file(path), path); }

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path + "'");
  out << content;
  if (!out) throw Error(ErrorKind::Io, "write to '" + path + "' failed");
}

std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

Json number_json(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json vector_json(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number_json(v(i)));
  return a;
}

Vec vector_from_json(const Json& j, const std::string& where) {
  if (!j.is_array()) throw Error(ErrorKind::Parse, where + ": expected an array");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = number_from_json(j[i], where + "[" + std::to_string(i) + "]");
  }
  return v;
}

Json point_to_json(const Point& p) { return vector_json(p.coords()); }

Point point_from_json(const Manifold& m, const Json& j, const std::string& where) {
  const Vec x = vector_from_json(j, where);
  if (x.size() != m.ambient_dimension()) {
    throw Error(ErrorKind::Parse, where + ": expected " + std::to_string(m.ambient_dimension()) +
                                      " coordinates");
  }
  return with_context(where, [&] { return Point(m, x); });
}

std::vector<Point> points_from_json(const Manifold& m, const Json& j, const std::string& where) {
  if (!j.is_array()) throw Error(ErrorKind::Parse, where + ": expected an array of points");
  std::vector<Point> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(point_from_json(m, j[i], where + "[" + std::to_string(i) + "]"));
  }
  return out;
}

Json spd_to_json(const SpdMatrix& s) {
  Json data = Json::array();
  for (int i = 0; i < s.dim(); ++i) {
    for (int k = 0; k < s.dim(); ++k) data.push_back(number_json(s(i, k)));
  }
  return Json{{"dim", s.dim()}, {"data", data}};
}

SpdMatrix spd_from_json(const Json& j, const std::string& where) {
  const Json& dim = require(j, "dim", where);
  if (!dim.is_number_integer() || dim.get<long long>() < 1) {
    throw Error(ErrorKind::Parse, where + ".dim: expected a positive integer");
  }
  const auto n = static_cast<int>(dim.get<long long>());
  const Vec data = vector_from_json(require(j, "data", where), where + ".data");
  if (data.size() != static_cast<Eigen::Index>(n) * n) {
    throw Error(ErrorKind::Parse, where + ".data: expected " + std::to_string(n * n) + " entries");
  }
  Mat m(n, n);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) m(i, k) = data(i * n + k);
  }
  return with_context(where, [&] { return SpdMatrix(m); });
}

Json pmf_to_json(const Pmf& f) {
  Json support = Json::array();
  for (const auto& p : f.support()) support.push_back(point_to_json(p));
  return Json{{"manifold", f.manifold().tag()}, {"support", support}, {"weights", vector_json(f.weights())}};
}

Pmf pmf_from_json(const Json& j) {
  const Manifold m = with_context("manifold", [&] {
    const Json& tag = require(j, "manifold", "pmf");
    if (!tag.is_string()) throw Error(ErrorKind::Parse, "manifold: expected a string");
    return Manifold::parse(tag.get<std::string>());
  });
  auto support = points_from_json(m, require(j, "support", "pmf"), "support");
  const Vec w = vector_from_json(require(j, "weights", "pmf"), "weights");
  return with_context("weights", [&] { return Pmf(std::move(support), w); });
}

CovarianceSet ProblemFile::covariance_set() const {
  const ObservationSet q = ObservationSet::from_points(observations);
  if (!tensors.empty()) return CovarianceSet{q, tensors, amplitude};
  if (!ground_truth) {
    throw Error(ErrorKind::Validation, "problem has neither tensors nor ground_truth");
  }
  return forward_covariance_set(Pmf(support, *ground_truth), q, amplitude);
}

Json problem_to_json(const ProblemFile& p) {
  Json j;
  j["manifold"] = p.manifold.tag();
  j["amplitude"] = p.amplitude.tag();
  if (p.invariant) j["invariant"] = std::string(to_string(*p.invariant));
  Json support = Json::array(), obs = Json::array(), tensors = Json::array();
  for (const auto& x : p.support) support.push_back(point_to_json(x));
  for (const auto& x : p.observations) obs.push_back(point_to_json(x));
  for (const auto& t : p.tensors) tensors.push_back(spd_to_json(t));
  j["support"] = support;
  j["observations"] = obs;
  if (!p.tensors.empty()) j["tensors"] = tensors;
  if (p.ground_truth) j["ground_truth"] = vector_json(*p.ground_truth);
  return j;
}

ProblemFile problem_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorKind::Parse, "problem: expected an object");
  ProblemFile p;
  p.manifold = with_context("manifold", [&] {
    const Json& tag = require(j, "manifold", "problem");
    if (!tag.is_string()) throw Error(ErrorKind::Parse, "manifold: expected a string");
    return Manifold::parse(tag.get<std::string>());
  });
  if (j.contains("amplitude")) {
    p.amplitude = with_context("amplitude", [&] {
      if (!j["amplitude"].is_string()) throw Error(ErrorKind::Parse, "amplitude: expected a string");
      return Amplitude::parse(j["amplitude"].get<std::string>());
    });
  }
  if (j.contains("invariant")) {
    p.invariant = with_context("invariant", [&] {
      if (!j["invariant"].is_string()) throw Error(ErrorKind::Parse, "invariant: expected a string");
      return parse_invariant(j["invariant"].get<std::string>());
    });
  }
  p.support = points_from_json(p.manifold, require(j, "support", "problem"), "support");
  p.observations =
      j.contains("observations") ? points_from_json(p.manifold, j["observations"], "observations")
                                 : p.support;
  if (p.observations.size() != p.support.size()) {
    throw Error(ErrorKind::Parse, "observations: expected as many points as the support");
  }
  if (j.contains("tensors")) {
    const Json& t = j["tensors"];
    if (!t.is_array()) throw Error(ErrorKind::Parse, "tensors: expected an array");
    if (t.size() != p.observations.size()) {
      throw Error(ErrorKind::Parse, "tensors: expected one tensor per observation point");
    }
    for (std::size_t i = 0; i < t.size(); ++i) {
      const std::string where = "tensors[" + std::to_string(i) + "]";
      SpdMatrix s = spd_from_json(t[i], where);
      if (s.dim() != p.manifold.dimension()) {
        throw Error(ErrorKind::Parse, where + ": dimension does not match the manifold");
      }
      p.tensors.push_back(std::move(s));
    }
  }
  if (j.contains("ground_truth")) {
    const Vec w = vector_from_json(j["ground_truth"], "ground_truth");
    with_context("ground_truth", [&] { return Pmf(p.support, w); });
    p.ground_truth = w;
  }
  if (p.tensors.empty() && !p.ground_truth) {
    throw Error(ErrorKind::Parse, "problem: needs 'tensors' or 'ground_truth'");
  }
  return p;
}

std::uint64_t fnv1a(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Json ResultRecord::to_json() const {
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a(config.dump())));
  return Json{{"meta",
               {{"command", command},
                {"version", std::string(kVersion)},
                {"config_hash", std::string(hash)},
                {"config", config}}},
              {"payload", payload}};
}

ResultRecord ResultRecord::from_json(const Json& j) {
  const Json& meta = require(j, "meta", "record");
  ResultRecord r;
  r.command = require(meta, "command", "meta").get<std::string>();
  r.config = require(meta, "config", "meta");
  r.payload = require(j, "payload", "record");
  const Json again = r.to_json();
  if (again["meta"]["config_hash"] != require(meta, "config_hash", "meta")) {
    throw Error(ErrorKind::Parse, "meta.config_hash does not match the config");
  }
  return r;
}

std::string csv_number(double v) {
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string csv_row(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    out += cells[i];
  }
  out += '\n';
  return out;
}

}  // namespace covfield

#pragma once

#include <chrono>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "hslab/dynamics.hpp"
#include "hslab/experiments.hpp"
#include "hslab/model.hpp"

namespace hslab {

inline constexpr std::string_view kCodeVersion = "hslab/1.0.0";
inline constexpr int kSnapshotFormatVersion = 1;

using ordered_json = nlohmann::ordered_json;

// One JSON object per report. Everything except the trailing "ts" field is a
// deterministic function of (name, params, seed, code version); "ts" is
// excluded from identity comparisons.
inline ordered_json report_to_json(const ExperimentReport& r, bool with_timestamp = true) {
  ordered_json j;
  j["name"] = r.name;
  ordered_json p = ordered_json::object();
  for (const auto& [k, v] : r.params) p[k] = v;
  j["params"] = std::move(p);
  j["estimate"] = r.estimate;
  j["stderr"] = r.std_error;
  j["bound"] = r.bound;
  j["comparison"] = r.comparison;
  j["verdict"] = r.verdict;
  j["replicas"] = r.replicas;
  j["seed"] = r.seed;
  j["code_version"] = std::string(kCodeVersion) + " rng=" + std::string(RngStream::kAlgorithm);
  if (with_timestamp) {
    j["ts"] = std::chrono::duration_cast<std::chrono::milliseconds>(
                  std::chrono::system_clock::now().time_since_epoch())
                  .count();
  }
  return j;
}

inline std::string report_record_body(const ExperimentReport& r) {
  return report_to_json(r, false).dump();
}

inline void write_report_record(const ExperimentReport& r, std::ostream& sink,
                                bool with_timestamp = true) {
  sink << report_to_json(r, with_timestamp).dump() << '\n';
  if (!sink) throw std::runtime_error("write_report_record: sink write failed");
}

inline std::string report_record_csv_header() {
  return "name,estimate,stderr,bound,comparison,verdict,replicas,seed,params";
}

inline std::string report_record_csv(const ExperimentReport& r) {
  ordered_json p = ordered_json::object();
  for (const auto& [k, v] : r.params) p[k] = v;
  std::string params = p.dump();
  std::string escaped;
  escaped.reserve(params.size());
  for (char ch : params) {
    if (ch == '"') escaped += "\"\"";
    else escaped += ch;
  }
  return r.name + "," + to_shortest_string(r.estimate) + "," + to_shortest_string(r.std_error) +
         "," + to_shortest_string(r.bound) + "," + r.comparison + "," + r.verdict + "," +
         std::to_string(r.replicas) + "," + std::to_string(r.seed) + ",\"" + escaped + "\"";
}

// ---------------------------------------------------------------------------
// chain snapshots
// ---------------------------------------------------------------------------

namespace detail {

inline ordered_json point_to_json(const Point& p) {
  ordered_json a = ordered_json::array();
  for (int i = 0; i < p.dim; ++i) a.push_back(p[i]);
  return a;
}

inline Point point_from_json(const ordered_json& a) {
  if (!a.is_array() || a.empty() || a.size() > static_cast<std::size_t>(kMaxDim))
    throw std::runtime_error("snapshot: malformed coordinate array");
  Point p = zero_point(static_cast<int>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) p[static_cast<int>(i)] = a[i].get<double>();
  return p;
}

}  // namespace detail

inline ordered_json snapshot_to_json(const ChainState& s, std::uint64_t seed) {
  ordered_json j;
  j["format_version"] = kSnapshotFormatVersion;
  j["d"] = s.params.dim;
  j["box"] = {{"low", detail::point_to_json(s.params.domain.low)},
              {"high", detail::point_to_json(s.params.domain.high)}};
  j["lambda"] = s.params.lambda;
  ordered_json tau;
  ordered_json balls = ordered_json::array();
  for (const Ball& b : s.params.tau.forbidden_balls)
    balls.push_back({{"center", detail::point_to_json(b.center)}, {"radius", b.radius}});
  tau["balls"] = std::move(balls);
  tau["shell"] = s.params.tau.shell_width ? ordered_json(*s.params.tau.shell_width)
                                          : ordered_json(nullptr);
  if (s.params.tau.active_box) {
    tau["active_box"] = {{"low", detail::point_to_json(s.params.tau.active_box->low)},
                         {"high", detail::point_to_json(s.params.tau.active_box->high)}};
  } else {
    tau["active_box"] = nullptr;
  }
  j["tau"] = std::move(tau);
  ordered_json centers = ordered_json::array();
  for (const Point& p : s.config.centers()) centers.push_back(detail::point_to_json(p));
  j["centers"] = std::move(centers);
  j["step"] = s.step;
  j["seed"] = seed;
  j["state_class"] = to_string(s.state_class);
  return j;
}

inline void write_snapshot(const ChainState& s, std::uint64_t seed, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_snapshot: cannot open " + path);
  out << snapshot_to_json(s, seed).dump() << '\n';
  if (!out) throw std::runtime_error("write_snapshot: write failed for " + path);
}

// Rebuilds the chain (cell grid included) and re-validates the stored state
// class; a snapshot violating its own class is refused.
inline ChainState read_snapshot_json(const ordered_json& j, long star_check_samples = 10000) {
  if (!j.contains("format_version") ||
      j["format_version"].get<int>() != kSnapshotFormatVersion)
    throw std::runtime_error("snapshot: unsupported format version");
  const int d = j["d"].get<int>();
  const Box box = make_box(detail::point_from_json(j["box"]["low"]),
                           detail::point_from_json(j["box"]["high"]));
  BoundaryCondition tau;
  for (const auto& b : j["tau"]["balls"])
    tau.forbidden_balls.push_back(
        Ball{detail::point_from_json(b["center"]), b["radius"].get<double>()});
  if (!j["tau"]["shell"].is_null()) tau.shell_width = j["tau"]["shell"].get<double>();
  if (!j["tau"]["active_box"].is_null())
    tau.active_box = make_box(detail::point_from_json(j["tau"]["active_box"]["low"]),
                              detail::point_from_json(j["tau"]["active_box"]["high"]));
  const ModelParams params = make_model_params(d, j["lambda"].get<double>(), box, tau);

  ChainState s = make_chain_state(params, RngStream(j["seed"].get<std::uint64_t>(), 0));
  const std::string cls = j["state_class"].get<std::string>();
  if (cls == "omega") {
    s.state_class = StateClass::omega;
  } else if (cls == "omega_star") {
    s.state_class = StateClass::omega_star;
  } else {
    throw std::runtime_error("snapshot: unknown state class '" + cls + "'");
  }
  for (const auto& c : j["centers"]) {
    const Point p = detail::point_from_json(c);
    if (p.dim != d) throw std::runtime_error("snapshot: center dimension mismatch");
    s.config.add(p);
  }
  s.step = j["step"].get<long>();

  if (s.state_class == StateClass::omega) {
    if (!is_valid_configuration(s.config, s.params.tau))
      throw std::runtime_error(
          "snapshot: load refused, configuration violates the pairwise-2r/legal-center rule");
  } else {
    for (const Point& p : s.config.centers())
      if (!inside_margin(box, p, params.radius))
        throw std::runtime_error("snapshot: load refused, center outside the legal interior");
    RngStream check_rng(j["seed"].get<std::uint64_t>(), 0x5eed);
    if (!is_star_configuration(s.config, star_check_samples, check_rng).is_star)
      throw std::runtime_error(
          "snapshot: load refused, configuration violates the coverage-at-most-two rule");
  }
  return s;
}

inline ChainState read_snapshot(const std::string& path, long star_check_samples = 10000) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_snapshot: cannot open " + path);
  ordered_json j;
  in >> j;
  return read_snapshot_json(j, star_check_samples);
}

}  // namespace hslab

#include "mrnav/mission_log.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "mrnav/errors.hpp"

namespace mrnav {

using nlohmann::json;

MissionLog::MissionLog(std::string run_id, json meta) : run_id_(std::move(run_id)), meta_(std::move(meta)) {
  json header = meta_;
  header["run"] = run_id_;
  run_meta_.push_back(std::move(header));
}

void MissionLog::add(double t, std::string kind, json data) {
  if (!records_.empty() && records_.back().run == run_id_ && t < records_.back().t) {
    throw std::invalid_argument("mission log timestamps must be monotone");
  }
  if (!data.is_object()) throw std::invalid_argument("mission log payload must be an object");
  records_.push_back({run_id_, t, std::move(kind), std::move(data)});
}

void MissionLog::append(const MissionLog& other) {
  for (const json& h : other.run_meta_) {
    const bool seen = std::any_of(run_meta_.begin(), run_meta_.end(), [&](const json& m) { return m["run"] == h["run"]; });
    if (!seen) run_meta_.push_back(h);
  }
  records_.insert(records_.end(), other.records_.begin(), other.records_.end());
}

std::vector<std::string> MissionLog::run_ids() const {
  std::vector<std::string> ids;
  for (const auto& r : records_) {
    if (std::find(ids.begin(), ids.end(), r.run) == ids.end()) ids.push_back(r.run);
  }
  return ids;
}

std::size_t MissionLog::count(const std::string& kind) const {
  return static_cast<std::size_t>(std::count_if(records_.begin(), records_.end(), [&](const LogRecord& r) { return r.kind == kind; }));
}

void MissionLog::write(std::ostream& out) const {
  const auto header_for = [&](const std::string& run) {
    for (const json& h : run_meta_) {
      if (h["run"] == run) return h;
    }
    return json{{"run", run}};
  };
  std::string current;
  bool first = true;
  if (records_.empty() && !run_meta_.empty()) {
    json h = run_meta_.front();
    h["kind"] = "run";
    out << h.dump() << '\n';
  }
  for (const LogRecord& r : records_) {
    if (first || r.run != current) {
      json h = header_for(r.run);
      h["kind"] = "run";
      out << h.dump() << '\n';
      current = r.run;
      first = false;
    }
    json line = r.data;
    line["t"] = r.t;
    line["kind"] = r.kind;
    out << line.dump() << '\n';
  }
}

MissionLog MissionLog::read(std::istream& in) {
  MissionLog log;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw std::runtime_error("mission log line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("kind")) throw std::runtime_error("mission log line " + std::to_string(lineno) + ": missing kind");
    const std::string kind = j["kind"].get<std::string>();
    if (kind == "run") {
      j.erase("kind");
      log.run_id_ = j.value("run", std::string{});
      if (log.run_meta_.empty()) log.meta_ = j;
      const bool seen = std::any_of(log.run_meta_.begin(), log.run_meta_.end(), [&](const json& m) { return m["run"] == j["run"]; });
      if (!seen) log.run_meta_.push_back(j);
      continue;
    }
    const double t = j.at("t").get<double>();
    j.erase("t");
    j.erase("kind");
    log.records_.push_back({log.run_id_, t, kind, std::move(j)});
  }
  if (!log.run_meta_.empty()) {
    log.run_id_ = log.run_meta_.front()["run"].get<std::string>();
    log.meta_ = log.run_meta_.front();
  }
  return log;
}

std::vector<std::pair<double, double>> explored_series(const MissionLog& log) {
  const auto runs = log.run_ids();
  if (runs.size() > 1) throw MixedRuns("log mixes " + std::to_string(runs.size()) + " runs");
  std::vector<std::pair<double, double>> out;
  for (const LogRecord& r : log.records()) {
    if (r.kind == "area") out.emplace_back(r.t, r.data.at("m2").get<double>());
  }
  return out;
}

}  // namespace mrnav

#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace mrnav {

struct LogRecord {
  std::string run;
  double t = 0.0;
  std::string kind;
  nlohmann::json data;  // object; never holds the keys "t" or "kind"
};

/// Append-only time series of one mission run. Logs from different runs may
/// be concatenated with append(); metric extraction then refuses them.
class MissionLog {
 public:
  MissionLog() = default;
  explicit MissionLog(std::string run_id, nlohmann::json meta = nlohmann::json::object());

  const std::string& run_id() const noexcept { return run_id_; }
  const nlohmann::json& meta() const noexcept { return meta_; }
  const std::vector<LogRecord>& records() const noexcept { return records_; }
  bool empty() const noexcept { return records_.empty(); }

  /// Throws std::invalid_argument if `t` runs backwards.
  void add(double t, std::string kind, nlohmann::json data = nlohmann::json::object());
  void append(const MissionLog& other);

  std::vector<std::string> run_ids() const;
  std::size_t count(const std::string& kind) const;

  /// JSON lines. A {"kind":"run",...} header precedes each run's records.
  void write(std::ostream& out) const;
  static MissionLog read(std::istream& in);

 private:
  std::string run_id_;
  nlohmann::json meta_ = nlohmann::json::object();
  std::vector<nlohmann::json> run_meta_;  // header per run, in order of appearance
  std::vector<LogRecord> records_;
};

/// (time, explored m^2) pairs in log order. Throws MixedRuns when the log
/// spans more than one run.
std::vector<std::pair<double, double>> explored_series(const MissionLog& log);

}  // namespace mrnav

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "sajd/telemetry.hpp"

namespace sajd {

inline constexpr const char* kRawSeries = "raw";
inline constexpr const char* kLabeledSeries = "labeled";
inline constexpr const char* kEventsSeries = "events";
inline constexpr const char* kPredictionsSeries = "predictions";
inline constexpr const char* kTruthSeries = "truth";

struct StoreRecord {
  int64_t ts = 0;
  std::string line;
};

// Append-only, timestamp-ordered record logs, one newline-delimited file per
// series under a root directory. Records are written with a single write()
// each, and a torn trailing line left by a crash is never surfaced. Single
// writer per series; readers in other processes pick up appended records via
// refresh().
class Store {
 public:
  explicit Store(std::filesystem::path root);
  ~Store();

  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  // Requires ts >= the series' last timestamp (OutOfOrder otherwise).
  // line must not contain a newline.
  void append(const std::string& series, int64_t ts, const std::string& line);

  // Records with t0 <= ts < t1, in timestamp order.
  std::vector<StoreRecord> queryRange(const std::string& series, int64_t t0, int64_t t1) const;

  // Number of records with ts >= t0.
  size_t countSince(const std::string& series, int64_t t0) const;

  size_t count(const std::string& series) const;
  bool hasSeries(const std::string& series) const;

  // Re-reads any records appended to the backing file by another handle.
  void refresh(const std::string& series);

  // fsync all open series files.
  void sync();

  const std::filesystem::path& root() const { return root_; }

  // Typed appenders for the loop's record kinds.
  void appendRaw(const KpiSample& s);
  void appendLabeled(const LabeledSample& s);
  void appendEvent(const LoopEvent& e);
  void appendPrediction(const Prediction& p);
  void appendGroundTruth(int64_t ts, Label label);

 private:
  struct Series {
    int fd = -1;
    std::vector<StoreRecord> records;
    uint64_t consumed_bytes = 0;  // bytes of the file already indexed
  };

  Series& openSeries(const std::string& name, bool create);
  const Series* findSeries(const std::string& name) const;
  void loadFrom(Series& s, const std::filesystem::path& path) const;

  std::filesystem::path root_;
  mutable std::mutex mutex_;
  mutable std::map<std::string, Series> series_;
};

// Extracts the "ts" field of a record line; DecodeError when absent.
int64_t recordTimestamp(const std::string& line);

}  // namespace sajd

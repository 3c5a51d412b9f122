#include "sajd/store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>

#include "json.hpp"

namespace sajd {

namespace fs = std::filesystem;

int64_t recordTimestamp(const std::string& line) {
  auto j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("ts") ||
      !(j["ts"].is_number_integer() || j["ts"].is_number_unsigned()))
    throw DecodeError("record has no integer ts field: " + line);
  return j["ts"].get<int64_t>();
}

Store::Store(fs::path root) : root_(std::move(root)) {
  std::error_code ec;
  fs::create_directories(root_, ec);
  if (ec) throw IoError("cannot create store directory: " + root_.string());
}

Store::~Store() {
  std::lock_guard lock(mutex_);
  for (auto& [name, s] : series_)
    if (s.fd >= 0) ::close(s.fd);
}

void Store::loadFrom(Series& s, const fs::path& path) const {
  std::ifstream in(path, std::ios::binary);
  if (!in) return;
  in.seekg(static_cast<std::streamoff>(s.consumed_bytes));
  std::string line;
  uint64_t offset = s.consumed_bytes;
  while (std::getline(in, line)) {
    if (in.eof() && !line.empty()) break;  // torn tail without newline: skip
    uint64_t advance = line.size() + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) s.records.push_back({recordTimestamp(line), line});
    offset += advance;
  }
  s.consumed_bytes = offset;
}

Store::Series& Store::openSeries(const std::string& name, bool create) {
  fs::path path = root_ / (name + ".ndjson");
  auto it = series_.find(name);
  if (it == series_.end()) {
    bool exists = fs::exists(path);
    if (!exists && !create) throw UnknownSeries(name);
    Series s;
    if (exists) loadFrom(s, path);
    it = series_.emplace(name, std::move(s)).first;
  }
  Series& s = it->second;
  if (create && s.fd < 0) {
    // A torn final line from a crash is cut off before new appends.
    if (fs::exists(path)) {
      auto size = fs::file_size(path);
      if (size > s.consumed_bytes) {
        if (::truncate(path.c_str(), static_cast<off_t>(s.consumed_bytes)) != 0)
          throw IoError("cannot truncate torn tail: " + path.string());
      }
    }
    s.fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
    if (s.fd < 0) throw IoError("cannot open series file: " + path.string());
  }
  return s;
}

const Store::Series* Store::findSeries(const std::string& name) const {
  auto it = series_.find(name);
  if (it != series_.end()) return &it->second;
  fs::path path = root_ / (name + ".ndjson");
  if (!fs::exists(path)) return nullptr;
  Series s;
  loadFrom(s, path);
  return &series_.emplace(name, std::move(s)).first->second;
}

void Store::append(const std::string& series, int64_t ts, const std::string& line) {
  if (line.find('\n') != std::string::npos) throw IoError("record line contains a newline");
  std::lock_guard lock(mutex_);
  Series& s = openSeries(series, true);
  if (!s.records.empty() && ts < s.records.back().ts)
    throw OutOfOrder("append at " + std::to_string(ts) + " before series tail " +
                     std::to_string(s.records.back().ts));
  std::string data = line;
  data.push_back('\n');
  ssize_t n = ::write(s.fd, data.data(), data.size());
  if (n != static_cast<ssize_t>(data.size()))
    throw IoError(std::string("append failed: ") + std::strerror(errno));
  s.records.push_back({ts, line});
  s.consumed_bytes += data.size();
}

std::vector<StoreRecord> Store::queryRange(const std::string& series, int64_t t0,
                                           int64_t t1) const {
  if (t0 > t1) throw ConfigError("queryRange needs t0 <= t1");
  std::lock_guard lock(mutex_);
  const Series* s = findSeries(series);
  if (!s) throw UnknownSeries(series);
  auto cmp = [](const StoreRecord& r, int64_t t) { return r.ts < t; };
  auto lo = std::lower_bound(s->records.begin(), s->records.end(), t0, cmp);
  auto hi = std::lower_bound(s->records.begin(), s->records.end(), t1, cmp);
  return {lo, hi};
}

size_t Store::countSince(const std::string& series, int64_t t0) const {
  std::lock_guard lock(mutex_);
  const Series* s = findSeries(series);
  if (!s) throw UnknownSeries(series);
  auto cmp = [](const StoreRecord& r, int64_t t) { return r.ts < t; };
  auto lo = std::lower_bound(s->records.begin(), s->records.end(), t0, cmp);
  return static_cast<size_t>(s->records.end() - lo);
}

size_t Store::count(const std::string& series) const {
  std::lock_guard lock(mutex_);
  const Series* s = findSeries(series);
  if (!s) throw UnknownSeries(series);
  return s->records.size();
}

bool Store::hasSeries(const std::string& series) const {
  std::lock_guard lock(mutex_);
  return findSeries(series) != nullptr;
}

void Store::refresh(const std::string& series) {
  std::lock_guard lock(mutex_);
  auto it = series_.find(series);
  fs::path path = root_ / (series + ".ndjson");
  if (it == series_.end()) {
    if (fs::exists(path)) findSeries(series);
    return;
  }
  loadFrom(it->second, path);
}

void Store::sync() {
  std::lock_guard lock(mutex_);
  for (auto& [name, s] : series_)
    if (s.fd >= 0) ::fsync(s.fd);
}

void Store::appendRaw(const KpiSample& s) {
  append(kRawSeries, s.timestamp_ms, encodeSample(s));
}

void Store::appendLabeled(const LabeledSample& s) {
  append(kLabeledSeries, s.sample.timestamp_ms, encodeLabeled(s));
}

void Store::appendEvent(const LoopEvent& e) {
  append(kEventsSeries, e.timestamp_ms, encodeEvent(e));
}

void Store::appendPrediction(const Prediction& p) {
  append(kPredictionsSeries, p.ts, encodePrediction(p));
}

void Store::appendGroundTruth(int64_t ts, Label label) {
  append(kTruthSeries, ts, encodeGroundTruth(ts, label));
}

}  // namespace sajd

#include "sajd/telemetry.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace sajd {

using nlohmann::json;

namespace {

void appendDouble(std::string& out, double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

void appendInt(std::string& out, int64_t v) {
  char buf[24];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

json parseLine(const std::string& line) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw DecodeError("malformed record: " + line);
  return j;
}

void requireKeys(const json& j, std::initializer_list<const char*> keys) {
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* k : keys)
      if (item.key() == k) {
        known = true;
        break;
      }
    if (!known) throw DecodeError("unknown field: " + item.key());
  }
  for (const char* k : keys)
    if (!j.contains(k)) throw DecodeError(std::string("missing field: ") + k);
}

int64_t asInt(const json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_number_integer() && !v.is_number_unsigned())
    throw DecodeError(std::string("field is not an integer: ") + key);
  return v.get<int64_t>();
}

double asDouble(const json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_number()) throw DecodeError(std::string("field is not a number: ") + key);
  return v.get<double>();
}

bool asBool(const json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_boolean()) throw DecodeError(std::string("field is not a boolean: ") + key);
  return v.get<bool>();
}

}  // namespace

double ScenarioSchedule::totalDurationS() const {
  double total = 0.0;
  for (const auto& p : phases) total += p.duration_s;
  return total;
}

const KpiSample& validateSample(const KpiSample& s) {
  if (!std::isfinite(s.ul_snr)) throw RangeError("ul_snr");
  if (s.ul_mcs < 0 || s.ul_mcs > 28) throw RangeError("ul_mcs");
  if (!std::isfinite(s.ul_bitrate) || s.ul_bitrate < 0.0) throw RangeError("ul_bitrate");
  if (!std::isfinite(s.ul_bler) || s.ul_bler < 0.0 || s.ul_bler > 1.0)
    throw RangeError("ul_bler");
  return s;
}

std::string encodeSample(const KpiSample& s) {
  std::string out;
  out.reserve(96);
  out += "{\"ts\":";
  appendInt(out, s.timestamp_ms);
  out += ",\"ul_snr\":";
  appendDouble(out, s.ul_snr);
  out += ",\"ul_mcs\":";
  appendInt(out, s.ul_mcs);
  out += ",\"ul_bitrate\":";
  appendDouble(out, s.ul_bitrate);
  out += ",\"ul_bler\":";
  appendDouble(out, s.ul_bler);
  out += "}";
  return out;
}

KpiSample decodeSample(const std::string& line) {
  json j = parseLine(line);
  requireKeys(j, {"ts", "ul_snr", "ul_mcs", "ul_bitrate", "ul_bler"});
  KpiSample s;
  s.timestamp_ms = asInt(j, "ts");
  s.ul_snr = asDouble(j, "ul_snr");
  int64_t mcs = asInt(j, "ul_mcs");
  if (mcs < INT32_MIN || mcs > INT32_MAX) throw RangeError("ul_mcs");
  s.ul_mcs = static_cast<int>(mcs);
  s.ul_bitrate = asDouble(j, "ul_bitrate");
  s.ul_bler = asDouble(j, "ul_bler");
  validateSample(s);
  return s;
}

namespace {

const char* sourceName(LabelSource s) {
  return s == LabelSource::AutoGmm ? "auto_gmm" : "ground_truth_sim";
}

LabelSource sourceFromName(const std::string& n) {
  if (n == "auto_gmm") return LabelSource::AutoGmm;
  if (n == "ground_truth_sim") return LabelSource::GroundTruthSim;
  throw DecodeError("unknown label source: " + n);
}

}  // namespace

std::string encodeLabeled(const LabeledSample& s) {
  std::string out = encodeSample(s.sample);
  out.pop_back();  // strip '}'
  out += ",\"label\":";
  if (s.label)
    appendInt(out, static_cast<int>(*s.label));
  else
    out += "null";
  out += ",\"source\":\"";
  out += sourceName(s.source);
  out += "\",\"batch_id\":";
  appendInt(out, s.batch_id);
  out += "}";
  return out;
}

LabeledSample decodeLabeled(const std::string& line) {
  json j = parseLine(line);
  requireKeys(j, {"ts", "ul_snr", "ul_mcs", "ul_bitrate", "ul_bler", "label", "source",
                  "batch_id"});
  LabeledSample s;
  s.sample.timestamp_ms = asInt(j, "ts");
  s.sample.ul_snr = asDouble(j, "ul_snr");
  s.sample.ul_mcs = static_cast<int>(asInt(j, "ul_mcs"));
  s.sample.ul_bitrate = asDouble(j, "ul_bitrate");
  s.sample.ul_bler = asDouble(j, "ul_bler");
  validateSample(s.sample);
  const auto& lab = j.at("label");
  if (lab.is_null()) {
    s.label = std::nullopt;
  } else {
    int64_t v = asInt(j, "label");
    if (v != 0 && v != 1) throw DecodeError("label must be 0 or 1");
    s.label = static_cast<Label>(v);
  }
  if (!j.at("source").is_string()) throw DecodeError("source must be a string");
  s.source = sourceFromName(j.at("source").get<std::string>());
  s.batch_id = asInt(j, "batch_id");
  return s;
}

std::string encodeGroundTruth(int64_t ts, Label label) {
  std::string out = "{\"ts\":";
  appendInt(out, ts);
  out += ",\"label\":";
  appendInt(out, static_cast<int>(label));
  out += "}";
  return out;
}

std::pair<int64_t, Label> decodeGroundTruth(const std::string& line) {
  json j = parseLine(line);
  requireKeys(j, {"ts", "label"});
  int64_t v = asInt(j, "label");
  if (v != 0 && v != 1) throw DecodeError("label must be 0 or 1");
  return {asInt(j, "ts"), static_cast<Label>(v)};
}

std::string loopEventKindName(LoopEventKind k) {
  switch (k) {
    case LoopEventKind::DriftDetected: return "drift_detected";
    case LoopEventKind::RetrainStarted: return "retrain_started";
    case LoopEventKind::RetrainCompleted: return "retrain_completed";
    case LoopEventKind::ModelSwapped: return "model_swapped";
    case LoopEventKind::PeriodicRetrain: return "periodic_retrain";
  }
  return "unknown";
}

namespace {

LoopEventKind kindFromName(const std::string& n) {
  if (n == "drift_detected") return LoopEventKind::DriftDetected;
  if (n == "retrain_started") return LoopEventKind::RetrainStarted;
  if (n == "retrain_completed") return LoopEventKind::RetrainCompleted;
  if (n == "model_swapped") return LoopEventKind::ModelSwapped;
  if (n == "periodic_retrain") return LoopEventKind::PeriodicRetrain;
  throw DecodeError("unknown event kind: " + n);
}

}  // namespace

std::string encodeEvent(const LoopEvent& e) {
  json j;
  j["ts"] = e.timestamp_ms;
  j["kind"] = loopEventKindName(e.kind);
  if (e.model_version)
    j["model_version"] = *e.model_version;
  else
    j["model_version"] = nullptr;
  j["detail"] = e.detail;
  return j.dump();
}

LoopEvent decodeEvent(const std::string& line) {
  json j = parseLine(line);
  requireKeys(j, {"ts", "kind", "model_version", "detail"});
  LoopEvent e;
  e.timestamp_ms = asInt(j, "ts");
  e.kind = kindFromName(j.at("kind").get<std::string>());
  if (!j.at("model_version").is_null())
    e.model_version = static_cast<int>(asInt(j, "model_version"));
  e.detail = j.at("detail").get<std::string>();
  return e;
}

std::string encodePrediction(const Prediction& p) {
  std::string out = "{\"ts\":";
  appendInt(out, p.ts);
  out += ",\"label\":";
  appendInt(out, static_cast<int>(p.label));
  out += ",\"p1\":";
  appendDouble(out, p.p_interference);
  out += ",\"model_version\":";
  appendInt(out, p.model_version);
  out += "}";
  return out;
}

Prediction decodePrediction(const std::string& line) {
  json j = parseLine(line);
  requireKeys(j, {"ts", "label", "p1", "model_version"});
  Prediction p;
  p.ts = asInt(j, "ts");
  int64_t v = asInt(j, "label");
  if (v != 0 && v != 1) throw DecodeError("label must be 0 or 1");
  p.label = static_cast<Label>(v);
  p.p_interference = asDouble(j, "p1");
  p.model_version = static_cast<int>(asInt(j, "model_version"));
  return p;
}

std::string encodePhase(const ScenarioPhase& p) {
  std::string out = "{\"duration_s\":";
  appendDouble(out, p.duration_s);
  out += ",\"int_event\":";
  out += p.interference_on ? "true" : "false";
  out += ",\"int_db\":";
  appendDouble(out, p.interference_db);
  out += ",\"noise_amp\":";
  appendDouble(out, p.noise_amplitude);
  out += "}";
  return out;
}

namespace {

ScenarioPhase phaseFromJson(const json& j) {
  requireKeys(j, {"duration_s", "int_event", "int_db", "noise_amp"});
  ScenarioPhase p;
  p.duration_s = asDouble(j, "duration_s");
  p.interference_on = asBool(j, "int_event");
  p.interference_db = asDouble(j, "int_db");
  p.noise_amplitude = asDouble(j, "noise_amp");
  return p;
}

}  // namespace

ScenarioPhase decodePhase(const std::string& line) { return phaseFromJson(parseLine(line)); }

ScenarioSchedule loadSchedule(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open schedule file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  std::string text = buf.str();

  ScenarioSchedule sched;
  size_t first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '[') {
    json arr = json::parse(text, nullptr, false);
    if (arr.is_discarded() || !arr.is_array())
      throw DecodeError("malformed schedule array: " + path);
    for (const auto& j : arr) {
      if (!j.is_object()) throw DecodeError("schedule entries must be objects");
      sched.phases.push_back(phaseFromJson(j));
    }
  } else {
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") == std::string::npos) continue;
      sched.phases.push_back(decodePhase(line));
    }
  }
  validateSchedule(sched);
  return sched;
}

void saveSchedule(const ScenarioSchedule& s, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write schedule file: " + path);
  for (const auto& p : s.phases) out << encodePhase(p) << "\n";
}

void validateSchedule(const ScenarioSchedule& s) {
  if (s.phases.empty()) throw ConfigError("schedule has no phases");
  if (s.sample_period_ms <= 0) throw ConfigError("sample_period_ms must be positive");
  for (size_t i = 0; i < s.phases.size(); ++i) {
    const auto& p = s.phases[i];
    std::string where = "phase " + std::to_string(i) + ": ";
    if (!(p.duration_s > 0.0)) throw ConfigError(where + "duration_s must be positive");
    if (!p.interference_on && p.interference_db != -100.0)
      throw ConfigError(where + "interference OFF requires int_db = -100");
    if (p.noise_amplitude < 0.0) throw ConfigError(where + "noise_amp must be >= 0");
  }
}

}  // namespace sajd

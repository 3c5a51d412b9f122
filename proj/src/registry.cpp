#include "sajd/registry.hpp"

#include <cstdio>
#include <fstream>

#include "json.hpp"

namespace sajd {

namespace fs = std::filesystem;

ModelRegistry::ModelRegistry(fs::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw IoError("cannot create registry directory: " + dir_.string());
}

int ModelRegistry::scanMaxVersion() const {
  int max_v = 0;
  for (const auto& entry : fs::directory_iterator(dir_)) {
    if (!entry.is_directory()) continue;
    std::string name = entry.path().filename().string();
    if (name.size() < 2 || name[0] != 'v') continue;
    try {
      max_v = std::max(max_v, std::stoi(name.substr(1)));
    } catch (...) {
    }
  }
  return max_v;
}

fs::path ModelRegistry::modelPath(int version) const {
  return dir_ / ("v" + std::to_string(version)) / "model.bin";
}

int ModelRegistry::publish(MlpModel model) {
  std::lock_guard lock(mutex_);
  int version = scanMaxVersion() + 1;
  model.meta.version = version;

  fs::path vdir = dir_ / ("v" + std::to_string(version));
  std::error_code ec;
  fs::create_directories(vdir, ec);
  if (ec) throw IoError("cannot create version directory: " + vdir.string());

  saveModel(model, (vdir / "model.bin").string());

  nlohmann::json meta;
  meta["version"] = version;
  meta["trained_at"] = model.meta.trained_at_ms;
  meta["train_from"] = model.meta.train_from_ms;
  meta["train_to"] = model.meta.train_to_ms;
  if (model.meta.eval_accuracy)
    meta["eval_accuracy"] = *model.meta.eval_accuracy;
  else
    meta["eval_accuracy"] = nullptr;
  if (model.meta.parent_version)
    meta["parent_version"] = *model.meta.parent_version;
  else
    meta["parent_version"] = nullptr;
  meta["seed"] = model.meta.seed;
  meta["converged"] = model.meta.converged;
  {
    std::ofstream out(vdir / "meta", std::ios::trunc);
    if (!out) throw IoError("cannot write meta record");
    out << meta.dump() << "\n";
  }

  // LATEST moves via rename so readers never observe a partial write.
  fs::path tmp = dir_ / "LATEST.tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError("cannot write LATEST.tmp");
    out << version << "\n";
  }
  fs::rename(tmp, dir_ / "LATEST", ec);
  if (ec) throw IoError("cannot move LATEST into place");
  return version;
}

std::optional<int> ModelRegistry::latestVersion() const {
  std::lock_guard lock(mutex_);
  std::ifstream in(dir_ / "LATEST");
  if (!in) return std::nullopt;
  int v = 0;
  in >> v;
  if (!in || v < 1) return std::nullopt;
  return v;
}

MlpModel ModelRegistry::load(int version) const {
  fs::path path = modelPath(version);
  if (!fs::exists(path))
    throw FetchError("no such model version: v" + std::to_string(version));
  return loadModel(path.string());
}

std::string ModelRegistry::registryUri(int version) {
  return "registry://v" + std::to_string(version);
}

int ModelRegistry::versionFromUri(const std::string& uri) {
  const std::string prefix = "registry://v";
  if (uri.rfind(prefix, 0) != 0) throw FetchError("unsupported registry uri: " + uri);
  try {
    int v = std::stoi(uri.substr(prefix.size()));
    if (v < 1) throw FetchError("bad version in uri: " + uri);
    return v;
  } catch (const FetchError&) {
    throw;
  } catch (...) {
    throw FetchError("bad version in uri: " + uri);
  }
}

}  // namespace sajd

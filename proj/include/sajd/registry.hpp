#pragma once

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>

#include "sajd/mlp.hpp"

namespace sajd {

// Directory of versioned model artifacts:
//   <dir>/v<N>/model.bin   serialized model
//   <dir>/v<N>/meta        one-line JSON metadata record
//   <dir>/LATEST           current version number, replaced atomically
// Versions only ever grow; published artifacts are never mutated.
class ModelRegistry {
 public:
  explicit ModelRegistry(std::filesystem::path dir);

  // Stores the model as the next version and moves LATEST. The version is
  // written into the stored metadata; returns it.
  int publish(MlpModel model);

  std::optional<int> latestVersion() const;

  // Throws FetchError when the version does not exist on disk.
  MlpModel load(int version) const;

  std::filesystem::path modelPath(int version) const;
  std::filesystem::path dir() const { return dir_; }

  static std::string registryUri(int version);
  // Parses "registry://v<N>"; FetchError on anything else.
  static int versionFromUri(const std::string& uri);

 private:
  int scanMaxVersion() const;

  std::filesystem::path dir_;
  mutable std::mutex mutex_;
};

}  // namespace sajd

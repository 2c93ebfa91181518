#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "wscf/mvce/model.hpp"
#include "wscf/mvce/training.hpp"

namespace wscf::cli {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Container layout: "WSCFCKPT", u32 version, u64 header length (both LE),
/// the JSON header, then raw little-endian float32 blobs at the offsets the
/// header lists. The header's sha256 covers the header (without that field)
/// and every blob byte.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  std::string stage;
  std::vector<std::string> completed_stages;
  nlohmann::json config;  // RunConfig snapshot
  nlohmann::json optimizer = nlohmann::json::object();
  std::vector<std::pair<std::string, Tensor<float>>> tensors;

  const Tensor<float>& tensor(const std::string& name) const;
  bool has(const std::string& name) const;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
/// Throws CheckpointError on a bad magic, version, hash or truncated file.
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Every model parameter (as "param/<name>") plus the stage optimizer's
/// moments ("adam.m/<name>", "adam.v/<name>") for the parameters it updates.
Checkpoint make_checkpoint(mvce::Stage stage, const std::vector<mvce::Stage>& completed, mvce::MultiViewCounter& model,
                           mvce::StagedTrainer& trainer, const nlohmann::json& config);

/// Copies the named parameter groups back into `model`; a group is any of
/// "svcc", "homography", "fusion".
void restore_parameters(const Checkpoint& checkpoint, mvce::MultiViewCounter& model,
                        const std::vector<std::string>& groups);
/// Restores the stage optimizer's moments and step count.
void restore_optimizer(const Checkpoint& checkpoint, mvce::MultiViewCounter& model, mvce::StagedTrainer& trainer);

ParameterSet<float>& parameter_group(mvce::MultiViewCounter& model, const std::string& group);

}  // namespace wscf::cli

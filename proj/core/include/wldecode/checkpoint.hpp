#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "wldecode/layers.hpp"
#include "wldecode/model.hpp"

namespace wld {

// Self-describing training snapshot: model kind, seed, per-epoch training
// log, and every named tensor (learnable parameters plus batch-norm running
// statistics) with its shape and a 64-bit little-endian payload.
//
// File layout: a "wldecode-checkpoint 1" magic line, the header byte count,
// the JSON header (model, seed, log, tensor directory), then the
// concatenated tensor payloads in directory order.

struct CheckpointTensor {
  std::string name;
  std::vector<std::int64_t> shape;
  Eigen::VectorXd data;
};

struct Checkpoint {
  std::string model;
  std::uint64_t seed = 0;
  std::vector<TrainLogEntry> log;
  std::vector<CheckpointTensor> tensors;
};

// Copies the network's parameters and running state into a checkpoint.
Checkpoint snapshot(Sequential& net, const std::string& model, std::uint64_t seed,
                    const std::vector<TrainLogEntry>& log);

// Loads tensors back into a structurally matching network. The checkpoint
// and the network must carry exactly the same tensor names and sizes.
void restore(Sequential& net, const Checkpoint& ckpt);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace wld

#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "ppgage/nn/train.hpp"

namespace ppgage::nn {

// Layout (all integers little-endian):
//   "PPGAGE01" | u32 version | u32 manifest bytes | manifest text | f32 arrays
// The manifest is "key value" lines holding the network and training
// configuration, optimizer counters and one "array <group>/<name> <count>"
// line per stored array, in storage order. Groups: params, best, adam_m, adam_v.

inline constexpr std::string_view checkpoint_magic = "PPGAGE01";
inline constexpr std::uint32_t checkpoint_version = 1;

struct Checkpoint {
  NetConfig net;
  TrainConfig train;
  TrainingState state;
};

std::string serialize_checkpoint(const Checkpoint& checkpoint);
Checkpoint parse_checkpoint(std::string_view bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ppgage::nn

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "mslstm/architecture.hpp"
#include "mslstm/optimizer.hpp"
#include "mslstm/training.hpp"

namespace mslstm {

/// Everything needed to continue training bit-identically.
struct Checkpoint {
  ArchitectureConfig arch;
  SequenceSpec seq;
  TrainConfig cfg;
  Model model;
  AdamState adam;
  std::size_t epoch = 0;  // completed epochs
  std::uint64_t shuffle_seed = 0;
};

// FNV-1a over the canonical text of everything except cfg.epochs.
std::uint64_t config_digest(const ArchitectureConfig& arch, const SequenceSpec& seq,
                            const TrainConfig& cfg);

/// Directory layout:
///   manifest.txt               key = value lines
///   param/<name>.mslt          one f64 tensor per parameter
///   adam_m/<name>.mslt, adam_v/<name>.mslt
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& dir);
// format_error on a malformed manifest or digest mismatch, io_error on missing files.
Checkpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace mslstm

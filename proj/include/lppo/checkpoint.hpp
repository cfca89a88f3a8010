#pragma once

#include <string>

#include "lppo/config.hpp"
#include "lppo/nn.hpp"
#include "lppo/sysid.hpp"
#include "lppo/trainer.hpp"

namespace lppo::ckpt {

/// Self-contained training checkpoint: parameters, optimizer state,
/// multipliers, RNG state, plus the resolved configuration and the ROM
/// it was trained against (so evaluate/transfer need no extra inputs).
struct Checkpoint {
  int format_version = 1;
  int epoch = 0;
  uint64_t config_hash = 0;
  std::string config_text;  // resolved key = value block
  std::string rom_text;     // serialized RomModel
  train::TrainerState state;
};

Checkpoint make_checkpoint(const config::RunConfig& cfg, const sysid::RomModel& rom,
                           const train::TrainerState& state);

/// Structured text, named tensors with shape headers, 17-significant-digit
/// decimals. save -> load -> save is byte-identical.
void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);

/// Throws std::runtime_error on version mismatch, truncation, or shape
/// mismatch (naming the offending tensor).
Checkpoint load_checkpoint(const std::string& path);

config::RunConfig checkpoint_config(const Checkpoint& checkpoint);
sysid::RomModel checkpoint_rom(const Checkpoint& checkpoint);

}  // namespace lppo::ckpt

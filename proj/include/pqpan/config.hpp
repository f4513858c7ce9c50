#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "pqpan/energy_model.hpp"
#include "pqpan/reference_data.hpp"

namespace pqpan {

/// Everything the model reads from a profile file.
struct ModelConfig {
  RadioProfile profile = RadioProfile::fitted_default();
  CalibrationFactors gamma;
  int ifs_slots = 2;
  /// Cycle-count CSV; the bundled snapshot when empty.
  std::optional<std::filesystem::path> cycles_path;
  std::string kem_backend = "stub";

  CycleTable load_cycles() const;
};

inline constexpr const char* kProfileEnvVar = "PQPAN_PROFILE";

/// Reads a profile. Files ending in `.json` are JSON (top-level keys or a
/// nested "profile" object, as written by `pqpan fit`); anything else is a
/// flat `key = value` TOML subset. Unknown keys are rejected. Relative
/// `cycles` paths resolve against the profile's directory.
///
/// Keys: voltage, i_tx, i_rx, i_ifs, i_mcu (amperes), f_mcu (Hz), ifs_slots,
/// gamma_comm, gamma_keygen, gamma_decap (3-element arrays for levels 1/3/5),
/// cycles, kem_backend.
ModelConfig load_model_config(const std::filesystem::path& path);

/// `explicit_path` if given, else $PQPAN_PROFILE if set, else defaults.
ModelConfig resolve_model_config(const std::optional<std::filesystem::path>& explicit_path);

}  // namespace pqpan

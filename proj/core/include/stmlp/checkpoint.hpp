#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "stmlp/model.hpp"

namespace stmlp {

/// A trained model with its configuration and provenance.
///
/// On disk: 8 magic bytes "STMLPCK1", a little-endian uint64 header length,
/// a UTF-8 JSON header {format_version, config, created, seed, params:
/// [{name, rows, cols}, ...]}, then for each listed parameter rows*cols
/// little-endian IEEE-754 doubles. Save/load round-trips are bit-exact.
struct Checkpoint {
  ModelConfig config;
  std::uint64_t seed = 0;
  std::string created;  // informational timestamp, preserved verbatim
  ModelParams params;
};

void save_checkpoint(const std::string& path, const Checkpoint& cp);
void save_checkpoint(std::ostream& out, const Checkpoint& cp);
Checkpoint load_checkpoint(const std::string& path);
Checkpoint load_checkpoint(std::istream& in, const std::string& origin);

/// Config <-> JSON text, used by the checkpoint header and the inspect
/// command.
std::string config_to_json(const ModelConfig& cfg);
ModelConfig config_from_json(const std::string& json_text);

}  // namespace stmlp

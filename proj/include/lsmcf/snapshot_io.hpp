#pragma once

// Snapshot persistence: `<stem>.bin` holds raw little-endian IEEE-754 doubles
// in the grid's row-major order; `<stem>.json` is the sidecar
// {dimension, n, half_width, time, epsilon, name}.

#include <filesystem>
#include <string>

#include "lsmcf/field.hpp"

namespace lsmcf {

struct SnapshotMeta {
  double time = 0.0;
  double epsilon = 0.0;
  std::string name;
};

void write_snapshot(const std::filesystem::path& stem, const ScalarField& field,
                    const SnapshotMeta& meta);

struct LoadedSnapshot {
  ScalarField field;
  SnapshotMeta meta;
};

/// `regime` is not part of the sidecar; the caller supplies it.
LoadedSnapshot read_snapshot(const std::filesystem::path& stem,
                             BoundaryRegime regime = BoundaryRegime::FarFieldConstant);

}  // namespace lsmcf

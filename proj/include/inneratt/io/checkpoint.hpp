#ifndef INNERATT_IO_CHECKPOINT_HPP_
#define INNERATT_IO_CHECKPOINT_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "inneratt/io/config.hpp"
#include "inneratt/train/trainer.hpp"

namespace inneratt::io {

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  explicit CheckpointError(const std::string& what)
      : std::runtime_error("checkpoint error: " + what) {}
};
class BadMagicError : public CheckpointError {
 public:
  explicit BadMagicError(const std::string& what) : CheckpointError("bad magic: " + what) {}
};
class TruncatedError : public CheckpointError {
 public:
  explicit TruncatedError(const std::string& what) : CheckpointError("truncated: " + what) {}
};
class VersionError : public CheckpointError {
 public:
  explicit VersionError(const std::string& what)
      : CheckpointError("version mismatch: " + what) {}
};

// One named array: shape header plus row-major values.
struct Section {
  std::string name;
  std::vector<std::uint64_t> dims;
  std::vector<double> data;
  bool operator==(const Section&) const = default;
};

struct Checkpoint {
  ExperimentConfig config;
  train::TrainerState state;
  bool operator==(const Checkpoint&) const = default;
};

// Layout: "IATT", u32 version, u64 config length + resolved config JSON,
// u32 section count, then per section u32 name length, name, u32 ndim,
// ndim x u64 dims and the values as little-endian f64. All integers are
// little-endian. The replay buffer is included when
// config.train.checkpoint_replay is set.
std::vector<Section> to_sections(const Checkpoint& checkpoint);
Checkpoint from_sections(const ExperimentConfig& config, const std::vector<Section>& sections);

std::string encode_checkpoint(const Checkpoint& checkpoint);
Checkpoint decode_checkpoint(const std::string& bytes);

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace inneratt::io

#endif  // INNERATT_IO_CHECKPOINT_HPP_

#pragma once

// Binary checkpoint, all integers little-endian:
//
//   "DTSST"                      5 bytes
//   version                      u16 (currently 1)
//   iteration                    u64
//   parameter count              u32
//   per parameter:
//     name length, name          u32, UTF-8 bytes
//     rank, dims                 u32, rank x u32
//     data                       product(dims) x fp32
//   optimizer block count        u32
//   optimizer blocks             same layout as parameters; named
//                                "adamw.m/<param>" and "adamw.v/<param>"
//   checksum                     u64 FNV-1a over every preceding byte
//
// The AdamW step count equals the stored iteration.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dtsst/diffusion.hpp"

namespace dtsst {

class CheckpointError : public DataError {
public:
    using DataError::DataError;
};
class ChecksumError : public CheckpointError {
public:
    using CheckpointError::CheckpointError;
};
class VersionError : public CheckpointError {
public:
    using CheckpointError::CheckpointError;
};
class TruncatedError : public CheckpointError {
public:
    using CheckpointError::CheckpointError;
};

inline constexpr std::uint16_t checkpoint_version = 1;

struct NamedArray {
    std::string name;
    Shape shape;
    std::vector<float> data;
    bool operator==(const NamedArray&) const = default;
};

struct CheckpointState {
    std::uint64_t iteration = 0;
    std::vector<NamedArray> params;
    std::vector<NamedArray> optimizer;
    bool operator==(const CheckpointState&) const = default;
};

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_checkpoint(const CheckpointState& state);
/// Throws TruncatedError, VersionError, ChecksumError or CheckpointError.
CheckpointState decode_checkpoint(std::span<const std::uint8_t> bytes);

CheckpointState capture_state(const Model<float>& model, const AdamW<float>& optimizer, std::uint64_t iteration);
/// Copies a decoded state into a model and optimizer with the same layout.
void restore_state(const CheckpointState& state, Model<float>& model, AdamW<float>* optimizer);

/// Atomic: writes `<path>.tmp` and renames it over `path`.
void save_checkpoint(const std::filesystem::path& path, const Model<float>& model, const AdamW<float>& optimizer,
                     std::uint64_t iteration);
/// Returns the stored iteration.
std::uint64_t load_checkpoint(const std::filesystem::path& path, Model<float>& model, AdamW<float>* optimizer);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

} // namespace dtsst

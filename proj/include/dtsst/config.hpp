#pragma once

// Run configuration: every model, diffusion, optimizer, training, sampling
// and data setting in one JSON document. Missing keys take their defaults;
// unknown keys are rejected.

#include <filesystem>
#include <string>

#include "dtsst/diffusion.hpp"
#include "dtsst/synthetic.hpp"
#include "dtsst/training.hpp"

namespace dtsst {

class ConfigError : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

struct ScheduleConfig {
    int steps = 500;
    double beta_start = 1e-4;
    double beta_end = 2e-2;
    bool operator==(const ScheduleConfig&) const = default;
    NoiseSchedule build() const { return NoiseSchedule(steps, beta_start, beta_end); }
};

struct DataConfig {
    /// Dataset file; empty means the synthetic corpus below.
    std::string dataset;
    SyntheticSpec synthetic;
    bool operator==(const DataConfig& o) const;
};

struct RunConfig {
    ModelConfig model = desk_model_config();
    ScheduleConfig schedule;
    TrainConfig train;
    GuidanceConfig sampling;
    DataConfig data;
    /// Model initialization seed; training randomness uses train.seed.
    std::uint64_t model_seed = 0;

    void validate() const;
    bool operator==(const RunConfig& o) const;
};

/// Named model sizes: "desk" (default), "full", "tiny".
ModelConfig model_preset(const std::string& name);

std::string config_to_json(const RunConfig& cfg);
RunConfig config_from_json(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const RunConfig& cfg);

std::string encoder_kind_name(EncoderKind k);
EncoderKind parse_encoder_kind(const std::string& name);

} // namespace dtsst

#pragma once

// Training loop with loss logging, periodic checkpoints and resume.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "dtsst/checkpoint.hpp"
#include "dtsst/data_io.hpp"
#include "dtsst/diffusion.hpp"

namespace dtsst {

struct TrainConfig {
    std::size_t iterations = 5000;
    std::size_t batch = 32;
    std::size_t window = 128;
    std::uint64_t seed = 0;
    std::size_t log_every = 10;
    std::size_t checkpoint_every = 500;
    AdamWConfig optimizer;
};

/// `iteration,loss` CSV. Opening with a resume iteration drops rows past it.
class LossLog {
public:
    LossLog(const std::filesystem::path& path, std::uint64_t resume_iteration);
    void append(std::uint64_t iteration, double loss);

    /// Rows of an existing log, in file order.
    static std::vector<std::pair<std::uint64_t, double>> read(const std::filesystem::path& path);

private:
    std::filesystem::path path_;
};

/// Iteration i (1-based) draws its windows and all training randomness
/// from Rng::for_stream(seed, i), so any prefix of a run can be resumed
/// exactly from a checkpoint.
double train_iteration(Model<float>& model, AdamW<float>& optimizer, const NoiseSchedule& schedule,
                       const WindowSampler& data, const TrainConfig& cfg, std::uint64_t iteration);

struct TrainResult {
    std::uint64_t start_iteration = 0;
    std::uint64_t end_iteration = 0;
    std::vector<double> losses;  // one per iteration run in this call
};

inline constexpr const char* checkpoint_file = "checkpoint.bin";
inline constexpr const char* loss_file = "loss.csv";

/// Trains up to cfg.iterations. If `dir`/checkpoint.bin exists the model
/// and optimizer are restored from it and training continues after the
/// stored iteration; otherwise the caller-initialized model is
/// checkpointed as iteration 0 first. Checkpoints every
/// cfg.checkpoint_every iterations and at the end.
TrainResult run_training(Model<float>& model, const NoiseSchedule& schedule, const WindowSampler& data,
                         const TrainConfig& cfg, const std::filesystem::path& dir,
                         const std::function<void(std::uint64_t, double)>& progress = {});

} // namespace dtsst

#include "dtsst/training.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace dtsst {

LossLog::LossLog(const std::filesystem::path& path, std::uint64_t resume_iteration) : path_(path) {
    std::vector<std::pair<std::uint64_t, double>> keep;
    if (std::filesystem::exists(path)) {
        for (const auto& row : read(path)) {
            if (row.first <= resume_iteration) {
                keep.push_back(row);
            }
        }
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw DataError("cannot write loss log '" + path.string() + "'");
    }
    out << "iteration,loss\n";
    for (const auto& [it, loss] : keep) {
        out << it << ',' << format_value(loss) << '\n';
    }
}

void LossLog::append(std::uint64_t iteration, double loss) {
    std::ofstream out(path_, std::ios::app);
    out << iteration << ',' << format_value(loss) << '\n';
    if (!out) {
        throw DataError("cannot append to loss log '" + path_.string() + "'");
    }
}

std::vector<std::pair<std::uint64_t, double>> LossLog::read(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open loss log '" + path.string() + "'");
    }
    std::vector<std::pair<std::uint64_t, double>> rows;
    std::string line;
    std::getline(in, line);
    if (line.rfind("iteration,loss", 0) != 0) {
        throw DataError("loss log '" + path.string() + "' lacks the iteration,loss header");
    }
    while (std::getline(in, line)) {
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            continue;  // a row cut short by an interrupted write
        }
        std::uint64_t it = 0;
        double loss = 0.0;
        const auto r1 = std::from_chars(line.data(), line.data() + comma, it);
        const auto r2 = std::from_chars(line.data() + comma + 1, line.data() + line.size(), loss);
        if (r1.ec != std::errc{} || r2.ec != std::errc{}) {
            continue;
        }
        rows.emplace_back(it, loss);
    }
    return rows;
}

double train_iteration(Model<float>& model, AdamW<float>& optimizer, const NoiseSchedule& schedule,
                       const WindowSampler& data, const TrainConfig& cfg, std::uint64_t iteration) {
    Rng rng = Rng::for_stream(cfg.seed, iteration);
    std::vector<Mat<float>> batch;
    batch.reserve(cfg.batch);
    for (std::size_t i = 0; i < cfg.batch; ++i) {
        batch.push_back(to_row<float>(data.draw(rng).values));
    }
    return train_step<float>(model, schedule, batch, optimizer, rng);
}

TrainResult run_training(Model<float>& model, const NoiseSchedule& schedule, const WindowSampler& data,
                         const TrainConfig& cfg, const std::filesystem::path& dir,
                         const std::function<void(std::uint64_t, double)>& progress) {
    if (cfg.batch < 1 || cfg.log_every < 1 || cfg.checkpoint_every < 1) {
        throw InvalidArgument("training: batch, log_every and checkpoint_every must be >= 1");
    }
    if (data.spec().length != cfg.window) {
        throw InvalidArgument("training: sampler window length differs from the configured window");
    }
    std::filesystem::create_directories(dir);
    const auto ckpt = dir / checkpoint_file;
    AdamW<float> optimizer(model.params(), cfg.optimizer);
    TrainResult result;
    if (std::filesystem::exists(ckpt)) {
        result.start_iteration = load_checkpoint(ckpt, model, &optimizer);
    } else {
        save_checkpoint(ckpt, model, optimizer, 0);
    }
    LossLog log(dir / loss_file, result.start_iteration);
    std::uint64_t it = result.start_iteration;
    while (it < cfg.iterations) {
        ++it;
        const double loss = train_iteration(model, optimizer, schedule, data, cfg, it);
        result.losses.push_back(loss);
        if (it % cfg.log_every == 0) {
            log.append(it, loss);
        }
        if (it % cfg.checkpoint_every == 0 || it == cfg.iterations) {
            save_checkpoint(ckpt, model, optimizer, it);
        }
        if (progress) {
            progress(it, loss);
        }
    }
    result.end_iteration = it;
    return result;
}

} // namespace dtsst

#include "dtsst/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace dtsst {

using json = nlohmann::ordered_json;

bool DataConfig::operator==(const DataConfig& o) const {
    const auto& a = synthetic;
    const auto& b = o.synthetic;
    const auto pa = std::tie(a.params.level_range, a.params.slope_range, a.params.amplitude_min,
                             a.params.amplitude_max, a.params.period_min, a.params.period_max, a.params.ar_min,
                             a.params.ar_max, a.params.burst_period_min, a.params.burst_period_max,
                             a.params.burst_amplitude_min, a.params.burst_amplitude_max, a.params.style_ar_min,
                             a.params.style_ar_max, a.params.style_scale_min, a.params.style_scale_max);
    const auto pb = std::tie(b.params.level_range, b.params.slope_range, b.params.amplitude_min,
                             b.params.amplitude_max, b.params.period_min, b.params.period_max, b.params.ar_min,
                             b.params.ar_max, b.params.burst_period_min, b.params.burst_period_max,
                             b.params.burst_amplitude_min, b.params.burst_amplitude_max, b.params.style_ar_min,
                             b.params.style_ar_max, b.params.style_scale_min, b.params.style_scale_max);
    return dataset == o.dataset && a.family == b.family && a.count == b.count && a.length == b.length &&
           a.seed == b.seed && pa == pb;
}

bool RunConfig::operator==(const RunConfig& o) const {
    const auto& g = sampling;
    const auto& h = o.sampling;
    const auto& t = train;
    const auto& u = o.train;
    return model == o.model && schedule == o.schedule && data == o.data && model_seed == o.model_seed &&
           t.iterations == u.iterations && t.batch == u.batch && t.window == u.window && t.seed == u.seed &&
           t.log_every == u.log_every && t.checkpoint_every == u.checkpoint_every && t.optimizer == u.optimizer &&
           g.content_scale == h.content_scale && g.style_scale == h.style_scale && g.temperature == h.temperature &&
           g.clip == h.clip && g.clip_value == h.clip_value;
}

void RunConfig::validate() const {
    model.validate();
    sampling.validate();
    if (schedule.steps < 1 || !(schedule.beta_start > 0.0) || !(schedule.beta_end < 1.0) ||
        schedule.beta_end < schedule.beta_start) {
        throw ConfigError("schedule: need steps >= 1 and 0 < beta_start <= beta_end < 1");
    }
    if (train.batch < 1 || train.window < 8 || train.log_every < 1 || train.checkpoint_every < 1) {
        throw ConfigError("train: batch, log_every, checkpoint_every must be >= 1 and window >= 8");
    }
    if (data.dataset.empty() && data.synthetic.length < train.window) {
        throw ConfigError("data: synthetic series are shorter than the training window");
    }
}

ModelConfig model_preset(const std::string& name) {
    if (name == "desk") {
        return desk_model_config();
    }
    if (name == "full") {
        return full_model_config();
    }
    if (name == "tiny") {
        return tiny_model_config();
    }
    throw ConfigError("unknown model preset '" + name + "' (expected desk, full or tiny)");
}

std::string encoder_kind_name(EncoderKind k) {
    return k == EncoderKind::specialized ? "specialized" : "plain_conv";
}

EncoderKind parse_encoder_kind(const std::string& name) {
    if (name == "specialized") {
        return EncoderKind::specialized;
    }
    if (name == "plain_conv") {
        return EncoderKind::plain_conv;
    }
    throw ConfigError("unknown encoder kind '" + name + "'");
}

namespace {

// Reads the known keys of one JSON object and rejects the rest.
class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) {
            throw ConfigError(where() + " must be an object");
        }
    }

    template <typename T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) {
            return;
        }
        const json& v = j_.at(key);
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) {
                throw ConfigError(where(key) + " must be true or false");
            }
            out = v.get<bool>();
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer() || (std::is_unsigned_v<T> && v.get<std::int64_t>() < 0)) {
                throw ConfigError(where(key) + " must be a" + (std::is_unsigned_v<T> ? " non-negative" : "n") +
                                  " integer");
            }
            out = v.get<T>();
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!v.is_number()) {
                throw ConfigError(where(key) + " must be a number");
            }
            out = v.get<T>();
        } else {
            if (!v.is_string()) {
                throw ConfigError(where(key) + " must be a string");
            }
            out = v.get<std::string>();
        }
    }

    Reader child(const char* key) {
        seen_.insert(key);
        static const json empty = json::object();
        return Reader(j_.contains(key) ? j_.at(key) : empty, path_.empty() ? key : path_ + "." + key);
    }

    void finish() const {
        for (const auto& item : j_.items()) {
            if (!seen_.contains(item.key())) {
                throw ConfigError("unknown config key '" + where(item.key().c_str()) + "'");
            }
        }
    }

private:
    std::string where(const char* key = nullptr) const {
        std::string p = path_.empty() ? std::string("config") : path_;
        if (key != nullptr) {
            p = path_.empty() ? std::string(key) : path_ + "." + key;
        }
        return p;
    }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

json params_to_json(const SyntheticParams& p) {
    return json{{"level_range", p.level_range},
                {"slope_range", p.slope_range},
                {"amplitude_min", p.amplitude_min},
                {"amplitude_max", p.amplitude_max},
                {"period_min", p.period_min},
                {"period_max", p.period_max},
                {"ar_min", p.ar_min},
                {"ar_max", p.ar_max},
                {"burst_period_min", p.burst_period_min},
                {"burst_period_max", p.burst_period_max},
                {"burst_amplitude_min", p.burst_amplitude_min},
                {"burst_amplitude_max", p.burst_amplitude_max},
                {"style_ar_min", p.style_ar_min},
                {"style_ar_max", p.style_ar_max},
                {"style_scale_min", p.style_scale_min},
                {"style_scale_max", p.style_scale_max}};
}

void params_from(Reader r, SyntheticParams& p) {
    r.get("level_range", p.level_range);
    r.get("slope_range", p.slope_range);
    r.get("amplitude_min", p.amplitude_min);
    r.get("amplitude_max", p.amplitude_max);
    r.get("period_min", p.period_min);
    r.get("period_max", p.period_max);
    r.get("ar_min", p.ar_min);
    r.get("ar_max", p.ar_max);
    r.get("burst_period_min", p.burst_period_min);
    r.get("burst_period_max", p.burst_period_max);
    r.get("burst_amplitude_min", p.burst_amplitude_min);
    r.get("burst_amplitude_max", p.burst_amplitude_max);
    r.get("style_ar_min", p.style_ar_min);
    r.get("style_ar_max", p.style_ar_max);
    r.get("style_scale_min", p.style_scale_min);
    r.get("style_scale_max", p.style_scale_max);
    r.finish();
}

} // namespace

std::string config_to_json(const RunConfig& c) {
    const auto& m = c.model;
    json j;
    j["model"] = {
        {"content_encoder",
         {{"downsample", m.content.downsample},
          {"kernel", m.content.kernel},
          {"channels", m.content.channels},
          {"blocks", m.content.blocks}}},
        {"style_encoder", {{"channels", m.style.channels}, {"depth", m.style.depth}, {"kernel", m.style.kernel}}},
        {"denoiser",
         {{"hidden", m.denoiser.hidden},
          {"heads", m.denoiser.heads},
          {"layers", m.denoiser.layers},
          {"patch", m.denoiser.patch},
          {"mlp_ratio", m.denoiser.mlp_ratio},
          {"content_drop", m.denoiser.content_drop},
          {"style_drop", m.denoiser.style_drop}}},
        {"content_kind", encoder_kind_name(m.content_kind)},
        {"style_kind", encoder_kind_name(m.style_kind)},
        {"plain_channels", m.plain_channels},
        {"seed", c.model_seed}};
    j["schedule"] = {{"steps", c.schedule.steps}, {"beta_start", c.schedule.beta_start},
                     {"beta_end", c.schedule.beta_end}};
    const auto& o = c.train.optimizer;
    j["optimizer"] = {{"lr", o.lr},
                      {"beta1", o.beta1},
                      {"beta2", o.beta2},
                      {"eps", o.eps},
                      {"weight_decay", o.weight_decay}};
    j["train"] = {{"iterations", c.train.iterations}, {"batch", c.train.batch},
                  {"window", c.train.window},         {"seed", c.train.seed},
                  {"log_every", c.train.log_every},   {"checkpoint_every", c.train.checkpoint_every}};
    j["sampling"] = {{"content_scale", c.sampling.content_scale},
                     {"style_scale", c.sampling.style_scale},
                     {"temperature", c.sampling.temperature},
                     {"clip", c.sampling.clip},
                     {"clip_value", c.sampling.clip_value}};
    j["data"] = {{"dataset", c.data.dataset},
                 {"synthetic",
                  {{"family", family_name(c.data.synthetic.family)},
                   {"count", c.data.synthetic.count},
                   {"length", c.data.synthetic.length},
                   {"seed", c.data.synthetic.seed},
                   {"params", params_to_json(c.data.synthetic.params)}}}};
    return j.dump(2) + "\n";
}

RunConfig config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    RunConfig c;
    Reader root(j, "");
    {
        Reader m = root.child("model");
        auto& mc = c.model;
        {
            Reader r = m.child("content_encoder");
            r.get("downsample", mc.content.downsample);
            r.get("kernel", mc.content.kernel);
            r.get("channels", mc.content.channels);
            r.get("blocks", mc.content.blocks);
            r.finish();
        }
        {
            Reader r = m.child("style_encoder");
            r.get("channels", mc.style.channels);
            r.get("depth", mc.style.depth);
            r.get("kernel", mc.style.kernel);
            r.finish();
        }
        {
            Reader r = m.child("denoiser");
            r.get("hidden", mc.denoiser.hidden);
            r.get("heads", mc.denoiser.heads);
            r.get("layers", mc.denoiser.layers);
            r.get("patch", mc.denoiser.patch);
            r.get("mlp_ratio", mc.denoiser.mlp_ratio);
            r.get("content_drop", mc.denoiser.content_drop);
            r.get("style_drop", mc.denoiser.style_drop);
            r.finish();
        }
        std::string ck = encoder_kind_name(mc.content_kind);
        std::string sk = encoder_kind_name(mc.style_kind);
        m.get("content_kind", ck);
        m.get("style_kind", sk);
        mc.content_kind = parse_encoder_kind(ck);
        mc.style_kind = parse_encoder_kind(sk);
        m.get("plain_channels", mc.plain_channels);
        m.get("seed", c.model_seed);
        m.finish();
    }
    {
        Reader r = root.child("schedule");
        r.get("steps", c.schedule.steps);
        r.get("beta_start", c.schedule.beta_start);
        r.get("beta_end", c.schedule.beta_end);
        r.finish();
    }
    {
        Reader r = root.child("optimizer");
        auto& o = c.train.optimizer;
        r.get("lr", o.lr);
        r.get("beta1", o.beta1);
        r.get("beta2", o.beta2);
        r.get("eps", o.eps);
        r.get("weight_decay", o.weight_decay);
        r.finish();
    }
    {
        Reader r = root.child("train");
        r.get("iterations", c.train.iterations);
        r.get("batch", c.train.batch);
        r.get("window", c.train.window);
        r.get("seed", c.train.seed);
        r.get("log_every", c.train.log_every);
        r.get("checkpoint_every", c.train.checkpoint_every);
        r.finish();
    }
    {
        Reader r = root.child("sampling");
        r.get("content_scale", c.sampling.content_scale);
        r.get("style_scale", c.sampling.style_scale);
        r.get("temperature", c.sampling.temperature);
        r.get("clip", c.sampling.clip);
        r.get("clip_value", c.sampling.clip_value);
        r.finish();
    }
    {
        Reader r = root.child("data");
        r.get("dataset", c.data.dataset);
        Reader s = r.child("synthetic");
        std::string family = family_name(c.data.synthetic.family);
        s.get("family", family);
        c.data.synthetic.family = parse_family(family);
        s.get("count", c.data.synthetic.count);
        s.get("length", c.data.synthetic.length);
        s.get("seed", c.data.synthetic.seed);
        params_from(s.child("params"), c.data.synthetic.params);
        s.finish();
        r.finish();
    }
    root.finish();
    c.validate();
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open config file " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return config_from_json(ss.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

void save_config(const std::filesystem::path& path, const RunConfig& cfg) {
    const std::string text = config_to_json(cfg);
    write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

} // namespace dtsst

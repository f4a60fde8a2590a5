#include "dtsst/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace dtsst {

namespace {

constexpr char magic[5] = {'D', 'T', 'S', 'S', 'T'};

class Writer {
public:
    void bytes(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        out_.insert(out_.end(), b, b + n);
    }
    template <typename U>
    void uint(U v) {
        for (std::size_t i = 0; i < sizeof(U); ++i) {
            out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
        }
    }
    void array(const NamedArray& a) {
        uint<std::uint32_t>(static_cast<std::uint32_t>(a.name.size()));
        bytes(a.name.data(), a.name.size());
        uint<std::uint32_t>(static_cast<std::uint32_t>(a.shape.size()));
        for (auto d : a.shape) {
            uint<std::uint32_t>(static_cast<std::uint32_t>(d));
        }
        for (float f : a.data) {
            uint<std::uint32_t>(std::bit_cast<std::uint32_t>(f));
        }
    }
    std::vector<std::uint8_t>& buffer() { return out_; }

private:
    std::vector<std::uint8_t> out_;
};

class Reader {
public:
    Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    void need(std::size_t n) const {
        if (n > bytes_.size() - pos_) {
            throw TruncatedError("checkpoint truncated: need " + std::to_string(n) + " bytes at offset " +
                                 std::to_string(pos_) + ", " + std::to_string(bytes_.size() - pos_) + " left");
        }
    }
    template <typename U>
    U uint() {
        need(sizeof(U));
        U v = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i) {
            v |= static_cast<U>(static_cast<U>(bytes_[pos_ + i]) << (8 * i));
        }
        pos_ += sizeof(U);
        return v;
    }
    NamedArray array() {
        NamedArray a;
        const auto len = uint<std::uint32_t>();
        need(len);
        a.name.assign(reinterpret_cast<const char*>(bytes_.data() + pos_), len);
        pos_ += len;
        const auto rank = uint<std::uint32_t>();
        need(std::size_t{4} * rank);
        std::size_t count = 1;
        for (std::uint32_t r = 0; r < rank; ++r) {
            const auto d = uint<std::uint32_t>();
            if (d == 0) {
                throw CheckpointError("checkpoint: zero dimension in '" + a.name + "'");
            }
            a.shape.push_back(d);
            count *= d;
            if (count > bytes_.size()) {
                throw TruncatedError("checkpoint truncated: array '" + a.name + "' larger than the file");
            }
        }
        need(4 * count);
        a.data.resize(count);
        for (auto& f : a.data) {
            f = std::bit_cast<float>(uint<std::uint32_t>());
        }
        return a;
    }
    std::size_t position() const { return pos_; }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

NamedArray named(const std::string& name, const Array<float>& a) {
    return {name, a.shape(), std::vector<float>(a.values().begin(), a.values().end())};
}

void copy_into(const NamedArray& src, const std::string& want_name, Array<float>& dst) {
    if (src.name != want_name) {
        throw CheckpointError("checkpoint: expected '" + want_name + "', found '" + src.name + "'");
    }
    if (src.shape != dst.shape()) {
        throw CheckpointError("checkpoint: shape of '" + want_name + "' is " + shape_to_string(src.shape) +
                              ", model expects " + shape_to_string(dst.shape()));
    }
    std::copy(src.data.begin(), src.data.end(), dst.data());
}

} // namespace

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (auto b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::vector<std::uint8_t> encode_checkpoint(const CheckpointState& state) {
    Writer w;
    w.bytes(magic, sizeof magic);
    w.uint<std::uint16_t>(checkpoint_version);
    w.uint<std::uint64_t>(state.iteration);
    w.uint<std::uint32_t>(static_cast<std::uint32_t>(state.params.size()));
    for (const auto& a : state.params) {
        w.array(a);
    }
    w.uint<std::uint32_t>(static_cast<std::uint32_t>(state.optimizer.size()));
    for (const auto& a : state.optimizer) {
        w.array(a);
    }
    const std::uint64_t sum = fnv1a64(w.buffer());
    w.uint<std::uint64_t>(sum);
    return std::move(w.buffer());
}

CheckpointState decode_checkpoint(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < sizeof magic) {
        throw TruncatedError("checkpoint truncated: " + std::to_string(bytes.size()) + " bytes");
    }
    if (std::memcmp(bytes.data(), magic, sizeof magic) != 0) {
        throw CheckpointError("not a checkpoint (bad magic)");
    }
    if (bytes.size() < 8) {
        throw TruncatedError("checkpoint truncated inside the header");
    }
    // The structural walk stops before the trailing checksum.
    Reader r(bytes.first(bytes.size() - 8));
    r.need(sizeof magic);
    for (std::size_t i = 0; i < sizeof magic; ++i) {
        r.uint<std::uint8_t>();
    }
    const auto version = r.uint<std::uint16_t>();
    if (version != checkpoint_version) {
        throw VersionError("checkpoint version " + std::to_string(version) + ", expected " +
                           std::to_string(checkpoint_version));
    }
    CheckpointState state;
    state.iteration = r.uint<std::uint64_t>();
    const auto n_params = r.uint<std::uint32_t>();
    for (std::uint32_t i = 0; i < n_params; ++i) {
        state.params.push_back(r.array());
    }
    const auto n_opt = r.uint<std::uint32_t>();
    for (std::uint32_t i = 0; i < n_opt; ++i) {
        state.optimizer.push_back(r.array());
    }
    const std::size_t body = r.position();
    std::uint64_t stored = 0;
    for (std::size_t i = 0; i < 8; ++i) {
        stored |= static_cast<std::uint64_t>(bytes[bytes.size() - 8 + i]) << (8 * i);
    }
    if (fnv1a64(bytes.first(bytes.size() - 8)) != stored) {
        throw ChecksumError("checkpoint checksum mismatch");
    }
    if (body != bytes.size() - 8) {
        throw CheckpointError("checkpoint: " + std::to_string(bytes.size() - 8 - body) + " unexpected trailing bytes");
    }
    return state;
}

CheckpointState capture_state(const Model<float>& model, const AdamW<float>& optimizer, std::uint64_t iteration) {
    CheckpointState s;
    s.iteration = iteration;
    const auto& entries = model.params().entries();
    for (const auto& e : entries) {
        s.params.push_back(named(e.name, e.value));
    }
    for (std::size_t i = 0; i < entries.size(); ++i) {
        s.optimizer.push_back(named("adamw.m/" + entries[i].name, optimizer.first_moments()[i]));
    }
    for (std::size_t i = 0; i < entries.size(); ++i) {
        s.optimizer.push_back(named("adamw.v/" + entries[i].name, optimizer.second_moments()[i]));
    }
    return s;
}

void restore_state(const CheckpointState& state, Model<float>& model, AdamW<float>* optimizer) {
    auto& entries = model.params().entries();
    if (state.params.size() != entries.size()) {
        throw CheckpointError("checkpoint has " + std::to_string(state.params.size()) + " parameters, model has " +
                              std::to_string(entries.size()));
    }
    for (std::size_t i = 0; i < entries.size(); ++i) {
        copy_into(state.params[i], entries[i].name, entries[i].value);
    }
    if (optimizer != nullptr) {
        if (state.optimizer.size() != 2 * entries.size()) {
            throw CheckpointError("checkpoint optimizer state does not match the model");
        }
        for (std::size_t i = 0; i < entries.size(); ++i) {
            copy_into(state.optimizer[i], "adamw.m/" + entries[i].name, optimizer->first_moments()[i]);
            copy_into(state.optimizer[entries.size() + i], "adamw.v/" + entries[i].name,
                      optimizer->second_moments()[i]);
        }
        optimizer->set_step_count(state.iteration);
    }
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open '" + path.string() + "'");
    }
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw DataError("cannot write '" + tmp.string() + "'");
        }
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) {
            throw DataError("write failed for '" + tmp.string() + "'");
        }
    }
    std::filesystem::rename(tmp, path);
}

void save_checkpoint(const std::filesystem::path& path, const Model<float>& model, const AdamW<float>& optimizer,
                     std::uint64_t iteration) {
    const auto bytes = encode_checkpoint(capture_state(model, optimizer, iteration));
    write_file_atomic(path, bytes);
}

std::uint64_t load_checkpoint(const std::filesystem::path& path, Model<float>& model, AdamW<float>* optimizer) {
    const auto bytes = read_file_bytes(path);
    const auto state = decode_checkpoint(bytes);
    restore_state(state, model, optimizer);
    return state.iteration;
}

} // namespace dtsst

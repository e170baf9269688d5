#include "ccgs/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "ccgs/error.hpp"

namespace ccgs {

namespace {

constexpr char kMagic[4] = {'C', 'C', 'G', 'S'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
    write_u32(out, static_cast<std::uint32_t>(v));
    write_u32(out, static_cast<std::uint32_t>(v >> 32));
}

void write_f32(std::ostream& out, float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    write_u32(out, bits);
}

void write_record(std::ostream& out, const std::string& name, const Tensor& t) {
    write_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u32(out, static_cast<std::uint32_t>(t.shape().size()));
    for (std::size_t dim : t.shape()) write_u32(out, static_cast<std::uint32_t>(dim));
    for (std::size_t i = 0; i < t.numel(); ++i) write_f32(out, static_cast<float>(t[i]));
}

class Reader {
public:
    explicit Reader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
        if (!in_) throw FormatError("cannot open checkpoint '" + path + "'");
    }

    std::uint32_t u32() {
        unsigned char b[4];
        take(b, 4);
        return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
               (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    }

    std::uint64_t u64() {
        const std::uint64_t lo = u32();
        return lo | (static_cast<std::uint64_t>(u32()) << 32);
    }

    float f32() {
        const std::uint32_t bits = u32();
        float f;
        std::memcpy(&f, &bits, 4);
        return f;
    }

    std::string bytes(std::size_t n) {
        std::string s(n, '\0');
        take(s.data(), n);
        return s;
    }

    void expect_eof() {
        char c;
        if (in_.read(&c, 1)) throw FormatError("trailing bytes in checkpoint '" + path_ + "'");
    }

private:
    void take(void* dst, std::size_t n) {
        if (!in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n))) {
            throw FormatError("truncated checkpoint '" + path_ + "'");
        }
    }

    std::ifstream in_;
    std::string path_;
};

std::pair<std::string, Tensor> read_record(Reader& r) {
    const std::uint32_t name_len = r.u32();
    if (name_len == 0 || name_len > 4096) {
        throw FormatError("checkpoint record has implausible name length " + std::to_string(name_len));
    }
    std::string name = r.bytes(name_len);
    const std::uint32_t rank = r.u32();
    if (rank == 0 || rank > 8) {
        throw FormatError("checkpoint record '" + name + "' has implausible rank " + std::to_string(rank));
    }
    std::vector<std::size_t> shape(rank);
    std::size_t numel = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
        shape[i] = r.u32();
        if (shape[i] == 0 || numel > (1u << 28) / shape[i]) {
            throw FormatError("checkpoint record '" + name + "' has implausible shape");
        }
        numel *= shape[i];
    }
    std::vector<double> data(numel);
    for (std::size_t i = 0; i < numel; ++i) data[i] = static_cast<double>(r.f32());
    return {std::move(name), Tensor(std::move(shape), std::move(data))};
}

} // namespace

void save_checkpoint(const std::string& path, const ParameterSet& params) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write checkpoint '" + path + "'");
    out.write(kMagic, 4);
    write_u32(out, kVersion);
    write_u32(out, static_cast<std::uint32_t>(params.count()));
    for (const auto& [name, entry] : params.entries()) write_record(out, name, entry.value);
    write_u64(out, params.step());
    write_u32(out, static_cast<std::uint32_t>(2 * params.count()));
    for (const auto& [name, entry] : params.entries()) {
        write_record(out, name + "/m", entry.m);
        write_record(out, name + "/v", entry.v);
    }
    out.flush();
    if (!out) throw FormatError("write failure on checkpoint '" + path + "'");
}

void load_checkpoint(const std::string& path, ParameterSet& params) {
    Reader r(path);
    if (r.bytes(4) != std::string(kMagic, 4)) {
        throw FormatError("'" + path + "' is not a checkpoint (bad magic)");
    }
    const std::uint32_t version = r.u32();
    if (version != kVersion) {
        throw FormatError("unsupported checkpoint version " + std::to_string(version));
    }
    const std::uint32_t n_params = r.u32();
    std::map<std::string, ParameterSet::Entry> entries;
    for (std::uint32_t i = 0; i < n_params; ++i) {
        auto [name, tensor] = read_record(r);
        if (entries.count(name) != 0) throw FormatError("duplicate parameter '" + name + "'");
        ParameterSet::Entry e;
        e.value = std::move(tensor);
        entries.emplace(std::move(name), std::move(e));
    }
    const std::uint64_t step = r.u64();
    const std::uint32_t n_state = r.u32();
    if (n_state != 2 * n_params) {
        throw FormatError("checkpoint holds " + std::to_string(n_state) + " state records for " +
                          std::to_string(n_params) + " parameters");
    }
    for (std::uint32_t i = 0; i < n_state; ++i) {
        auto [name, tensor] = read_record(r);
        const std::size_t slash = name.rfind('/');
        if (slash == std::string::npos) throw FormatError("state record '" + name + "' lacks /m or /v suffix");
        const std::string base = name.substr(0, slash);
        const std::string kind = name.substr(slash + 1);
        auto it = entries.find(base);
        if (it == entries.end()) throw FormatError("state record '" + name + "' has no parameter");
        if (kind == "m") {
            it->second.m = std::move(tensor);
        } else if (kind == "v") {
            it->second.v = std::move(tensor);
        } else {
            throw FormatError("state record '" + name + "' has unknown kind '" + kind + "'");
        }
    }
    r.expect_eof();
    for (const auto& [name, entry] : entries) {
        if (entry.m.empty() || entry.v.empty()) {
            throw FormatError("parameter '" + name + "' is missing optimizer state");
        }
        if (!entry.m.same_shape(entry.value) || !entry.v.same_shape(entry.value)) {
            throw FormatError("optimizer state shape mismatch for parameter '" + name + "'");
        }
    }
    params.restore(std::move(entries), step);
}

} // namespace ccgs

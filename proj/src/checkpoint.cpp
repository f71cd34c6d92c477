#include "bype/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

namespace bype::model {
namespace {

constexpr char kMagic[4] = {'B', 'Y', 'P', 'E'};
constexpr std::uint32_t kVersion = 1;

// Host is assumed little-endian; serialize through byte copies regardless.
template <typename T> void put(std::ofstream& os, T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    os.write(buf, sizeof(T));
}

template <typename T> bool get(std::ifstream& is, T& v) {
    char buf[sizeof(T)];
    is.read(buf, sizeof(T));
    if (is.gcount() != static_cast<std::streamsize>(sizeof(T))) return false;
    std::memcpy(&v, buf, sizeof(T));
    return true;
}

} // namespace

void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, Tensor>>& entries) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw FormatError("cannot open checkpoint for writing: " + path);
    os.write(kMagic, 4);
    put(os, kVersion);
    for (const auto& [name, t] : entries) {
        put(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        put(os, static_cast<std::uint32_t>(t.rank()));
        for (auto e : t.shape()) put(os, static_cast<std::uint64_t>(e));
        os.write(reinterpret_cast<const char*>(t.data()),
                 static_cast<std::streamsize>(t.numel() * sizeof(double)));
    }
    if (!os) throw FormatError("short write to checkpoint: " + path);
}

std::map<std::string, Tensor> load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("cannot open checkpoint: " + path);
    char magic[4];
    is.read(magic, 4);
    if (is.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0)
        throw FormatError("bad checkpoint magic in " + path);
    std::uint32_t version = 0;
    if (!get(is, version) || version != kVersion)
        throw FormatError("unsupported checkpoint version in " + path);
    std::map<std::string, Tensor> out;
    for (;;) {
        std::uint32_t name_len = 0;
        if (!get(is, name_len)) {
            if (is.eof() && is.gcount() == 0) break; // clean end of records
            throw FormatError("truncated record header in " + path);
        }
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        if (is.gcount() != static_cast<std::streamsize>(name_len))
            throw FormatError("truncated name in " + path);
        std::uint32_t rank = 0;
        if (!get(is, rank)) throw FormatError("truncated rank in " + path);
        std::vector<std::size_t> shape(rank);
        std::size_t numel = rank == 0 ? 0 : 1;
        for (std::uint32_t i = 0; i < rank; ++i) {
            std::uint64_t e = 0;
            if (!get(is, e)) throw FormatError("truncated extents in " + path);
            shape[i] = static_cast<std::size_t>(e);
            numel *= shape[i];
        }
        std::vector<double> data(numel);
        const std::streamsize want =
            static_cast<std::streamsize>(numel * sizeof(double));
        is.read(reinterpret_cast<char*>(data.data()), want);
        if (is.gcount() != want)
            throw FormatError("truncated checkpoint " + path + ": expected " +
                              std::to_string(want) + " data bytes for '" + name +
                              "', got " + std::to_string(is.gcount()));
        out.emplace(name, Tensor(std::move(shape), std::move(data)));
    }
    return out;
}

} // namespace bype::model

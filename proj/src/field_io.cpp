#include "gplab/field_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

#include "gplab/error.hpp"

namespace gplab {

namespace {

constexpr std::uint8_t kMagic[4] = {'G', 'P', 'F', '1'};
constexpr std::size_t kHeaderBytes = 4 + 1 + 3 * 4 + 8;

template <class T>
void put_le(std::vector<std::uint8_t>& out, T value) {
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
    const std::size_t at = out.size();
    out.resize(at + sizeof(T));
    std::memcpy(out.data() + at, raw, sizeof(T));
}

template <class T>
T get_le(std::span<const std::uint8_t> bytes, std::size_t offset) {
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, bytes.data() + offset, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
    T value;
    std::memcpy(&value, raw, sizeof(T));
    return value;
}

}  // namespace

std::vector<std::uint8_t> encode_field(const ScalarField& f) {
    const auto& g = f.grid();
    const auto m = static_cast<std::uint32_t>(g.points_per_axis());
    std::vector<std::uint8_t> out;
    out.reserve(kHeaderBytes + 8 * f.size());
    out.resize(4);
    std::memcpy(out.data(), kMagic, 4);
    out.push_back(static_cast<std::uint8_t>(g.boundary()));
    put_le<std::uint32_t>(out, m);
    put_le<std::uint32_t>(out, m);
    put_le<std::uint32_t>(out, g.dim() == 3 ? m : 1u);
    put_le<double>(out, g.side_length());
    for (double v : f.values()) put_le<double>(out, v);
    return out;
}

ScalarField decode_field(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kHeaderBytes) throw FormatError("GPF1: truncated header");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("GPF1: bad magic");
    const std::uint8_t tag = bytes[4];
    if (tag > 2) throw FormatError("GPF1: unknown boundary tag " + std::to_string(tag));
    const auto nx = get_le<std::uint32_t>(bytes, 5);
    const auto ny = get_le<std::uint32_t>(bytes, 9);
    const auto nz = get_le<std::uint32_t>(bytes, 13);
    const double side = get_le<double>(bytes, 17);

    if (nx != ny || (nz != nx && nz != 1))
        throw FormatError("GPF1: dims must be cubic (M,M,M) or square (M,M,1)");
    if (nx < 2) throw FormatError("GPF1: fewer than 2 points per axis");
    const std::uint64_t count = std::uint64_t{nx} * ny * nz;
    if (count > (std::numeric_limits<std::uint64_t>::max() - kHeaderBytes) / 8)
        throw FormatError("GPF1: dims overflow");
    if (bytes.size() != kHeaderBytes + 8 * count)
        throw FormatError("GPF1: payload holds " + std::to_string((bytes.size() - kHeaderBytes) / 8) +
                          " values, dims require " + std::to_string(count));
    if (!(side > 0.0) || !std::isfinite(side)) throw FormatError("GPF1: invalid side length");

    UniformGrid grid(side, static_cast<int>(nx), static_cast<BoundaryCondition>(tag), nz == 1 ? 2 : 3);
    std::vector<double> values(count);
    for (std::size_t i = 0; i < count; ++i) values[i] = get_le<double>(bytes, kHeaderBytes + 8 * i);
    return ScalarField(grid, std::move(values));
}

void save_field(const ScalarField& f, const std::filesystem::path& path) {
    const auto bytes = encode_field(f);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

ScalarField load_field(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_field(bytes);
}

}  // namespace gplab

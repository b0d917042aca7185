// SPDX-License-Identifier: Apache-2.0
#include "modalsr/sfmx.hpp"

#include "modalsr/error.hpp"
#include "modalsr/io.hpp"

#include <bit>
#include <cstring>
#include <limits>

namespace modalsr {

static_assert(std::endian::native == std::endian::little, "SFMX I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'S', 'F', 'M', 'X'};

[[noreturn]] void format_error(std::size_t offset, const std::string& what) {
    fail(ErrorKind::Format, "SFMX " + what + " at byte offset " + std::to_string(offset));
}

template <typename T>
void put(std::string& out, T value) {
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    out.append(buf, sizeof(T));
}

template <typename T>
T get(std::string_view bytes, std::size_t offset, const char* field) {
    if (bytes.size() < offset + sizeof(T))
        format_error(bytes.size(), std::string("truncated ") + field);
    T value;
    std::memcpy(&value, bytes.data() + offset, sizeof(T));
    return value;
}

std::string header_bytes(SfmxType dtype, Eigen::Index rows, Eigen::Index cols) {
    std::string out(kMagic, 4);
    put<std::uint16_t>(out, kSfmxVersion);
    put<std::uint8_t>(out, static_cast<std::uint8_t>(dtype));
    put<std::uint8_t>(out, 2);
    put<std::uint64_t>(out, static_cast<std::uint64_t>(rows));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(cols));
    return out;
}

std::pair<Eigen::Index, Eigen::Index> matrix_shape(const SfmxHeader& h) {
    if (h.dims.size() == 1)
        return {static_cast<Eigen::Index>(h.dims[0]), 1};
    if (h.dims.size() == 2)
        return {static_cast<Eigen::Index>(h.dims[0]), static_cast<Eigen::Index>(h.dims[1])};
    format_error(7, "has " + std::to_string(h.dims.size()) + " dimensions, a matrix needs 1 or 2");
}

} // namespace

SfmxHeader decode_sfmx_header(std::string_view bytes) {
    if (bytes.size() < 4)
        format_error(bytes.size(), "truncated magic");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0)
        format_error(0, "bad magic");
    SfmxHeader h;
    h.version = get<std::uint16_t>(bytes, 4, "version");
    if (h.version != kSfmxVersion)
        format_error(4, "unsupported version " + std::to_string(h.version));
    const auto code = get<std::uint8_t>(bytes, 6, "dtype");
    if (code > 1)
        format_error(6, "unknown dtype code " + std::to_string(code));
    h.dtype = static_cast<SfmxType>(code);
    const auto ndims = get<std::uint8_t>(bytes, 7, "ndims");
    if (ndims < 1 || ndims > kSfmxMaxDims)
        format_error(7, "unsupported ndims " + std::to_string(ndims));

    std::size_t offset = 8;
    std::uint64_t count = 1;
    for (unsigned i = 0; i < ndims; ++i, offset += 8) {
        const auto d = get<std::uint64_t>(bytes, offset, "dims");
        if (d != 0 && count > std::numeric_limits<std::uint64_t>::max() / d)
            format_error(offset, "dimension product overflows");
        count *= d;
        h.dims.push_back(d);
    }
    h.payload_offset = offset;

    const std::uint64_t elem = h.dtype == SfmxType::Float64 ? 8 : 16;
    if (count > std::numeric_limits<std::uint64_t>::max() / elem)
        format_error(8, "payload size overflows");
    const std::uint64_t expected = count * elem;
    const std::uint64_t available = bytes.size() - offset;
    if (available < expected)
        format_error(bytes.size(), "truncated payload (expected " + std::to_string(expected) + " bytes, found " +
                                       std::to_string(available) + ")");
    if (available > expected)
        format_error(offset + expected, "trailing bytes after payload");
    return h;
}

std::string encode_sfmx(const Eigen::MatrixXd& m) {
    std::string out = header_bytes(SfmxType::Float64, m.rows(), m.cols());
    out.reserve(out.size() + static_cast<std::size_t>(m.size()) * 8);
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            put<double>(out, m(r, c));
    return out;
}

std::string encode_sfmx(const Eigen::MatrixXcd& m) {
    std::string out = header_bytes(SfmxType::Complex128, m.rows(), m.cols());
    out.reserve(out.size() + static_cast<std::size_t>(m.size()) * 16);
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            put<double>(out, m(r, c).real());
            put<double>(out, m(r, c).imag());
        }
    return out;
}

Eigen::MatrixXd decode_sfmx_real(std::string_view bytes) {
    const SfmxHeader h = decode_sfmx_header(bytes);
    if (h.dtype != SfmxType::Float64)
        format_error(6, "dtype mismatch (expected float64, found complex128)");
    const auto [rows, cols] = matrix_shape(h);
    Eigen::MatrixXd m(rows, cols);
    const char* p = bytes.data() + h.payload_offset;
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c, p += 8)
            std::memcpy(&m(r, c), p, 8);
    return m;
}

Eigen::MatrixXcd decode_sfmx_complex(std::string_view bytes) {
    const SfmxHeader h = decode_sfmx_header(bytes);
    if (h.dtype != SfmxType::Complex128)
        format_error(6, "dtype mismatch (expected complex128, found float64)");
    const auto [rows, cols] = matrix_shape(h);
    Eigen::MatrixXcd m(rows, cols);
    const char* p = bytes.data() + h.payload_offset;
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c, p += 16) {
            double re, im;
            std::memcpy(&re, p, 8);
            std::memcpy(&im, p + 8, 8);
            m(r, c) = {re, im};
        }
    return m;
}

void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
    write_file_atomic(path, encode_sfmx(m));
}

void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXcd& m) {
    write_file_atomic(path, encode_sfmx(m));
}

Eigen::MatrixXd read_real_matrix(const std::filesystem::path& path) {
    return decode_sfmx_real(read_file(path));
}

Eigen::MatrixXcd read_complex_matrix(const std::filesystem::path& path) {
    return decode_sfmx_complex(read_file(path));
}

} // namespace modalsr

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace modalsr {

// Binary matrix container:
//   "SFMX" | u16 version | u8 dtype | u8 ndims | u64 dims[ndims] | payload
// All integers and the payload are little-endian; the payload is row-major.
// complex128 stores interleaved (re, im) float64 pairs.

enum class SfmxType : std::uint8_t { Float64 = 0, Complex128 = 1 };

inline constexpr std::uint16_t kSfmxVersion = 1;
inline constexpr std::size_t kSfmxMaxDims = 8;

struct SfmxHeader {
    std::uint16_t version = kSfmxVersion;
    SfmxType dtype = SfmxType::Float64;
    std::vector<std::uint64_t> dims;
    std::size_t payload_offset = 0;
};

/// Parses and checks the header and the payload length against the dims.
SfmxHeader decode_sfmx_header(std::string_view bytes);

std::string encode_sfmx(const Eigen::MatrixXd& m);
std::string encode_sfmx(const Eigen::MatrixXcd& m);

/// 1-D arrays load as a single column.
Eigen::MatrixXd decode_sfmx_real(std::string_view bytes);
Eigen::MatrixXcd decode_sfmx_complex(std::string_view bytes);

void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m);
void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXcd& m);
Eigen::MatrixXd read_real_matrix(const std::filesystem::path& path);
Eigen::MatrixXcd read_complex_matrix(const std::filesystem::path& path);

} // namespace modalsr

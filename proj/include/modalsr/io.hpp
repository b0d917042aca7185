// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace modalsr {

/// Writes `bytes` to a sibling temp file, then renames it over `path`, so
/// readers never observe a partial file. Parent directories are created.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

std::string read_file(const std::filesystem::path& path);

} // namespace modalsr

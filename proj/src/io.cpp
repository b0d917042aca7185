// SPDX-License-Identifier: Apache-2.0
#include "modalsr/io.hpp"

#include "modalsr/error.hpp"

#include <atomic>
#include <fstream>
#include <sstream>
#include <system_error>

#include <unistd.h>

namespace modalsr {

namespace fs = std::filesystem;

void write_file_atomic(const fs::path& path, std::string_view bytes) {
    static std::atomic<unsigned> counter{0};
    std::error_code ec;
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path(), ec);
        if (ec)
            fail(ErrorKind::Io, "cannot create directory " + path.parent_path().string() + ": " + ec.message());
    }
    fs::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            fail(ErrorKind::Io, "cannot open " + tmp.string() + " for writing");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) {
            out.close();
            fs::remove(tmp, ec);
            fail(ErrorKind::Io, "write failed for " + tmp.string());
        }
    }
    fs::rename(tmp, path, ec);
    if (ec) {
        std::error_code ignored;
        fs::remove(tmp, ignored);
        fail(ErrorKind::Io, "cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
    }
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        fail(ErrorKind::Io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad())
        fail(ErrorKind::Io, "read failed for " + path.string());
    return std::move(ss).str();
}

} // namespace modalsr

#include "io.hpp"

#include <fstream>
#include <system_error>

#include <fmt/format.h>
#include <unistd.h>

namespace ssem::harness {

void write_atomic(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto temp = path;
    temp += fmt::format(".tmp.{}", ::getpid());
    {
        std::ofstream out(temp, std::ios::binary | std::ios::trunc);
        out << content;
        out.flush();
        if (!out) {
            std::error_code ignored;
            std::filesystem::remove(temp, ignored);
            throw std::runtime_error(fmt::format("failed writing '{}'", temp.string()));
        }
    }
    std::filesystem::rename(temp, path);
}

}  // namespace ssem::harness

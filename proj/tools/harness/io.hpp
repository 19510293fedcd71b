#pragma once

#include <filesystem>
#include <string>

namespace ssem::harness {

/// Writes the whole file or nothing: content goes to a sibling temporary
/// which is then renamed over the target.
void write_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace ssem::harness

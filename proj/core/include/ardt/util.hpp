#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace ardt {

// SHA-1 of a byte buffer, lowercase hex.
std::string sha1_hex(const void* data, std::size_t len);

// Git blob hash of a file's contents: sha1("blob <len>\0" + bytes).
// Used to fingerprint run inputs in manifests.
std::string git_blob_sha1(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

// Fixed-format float printing for reports (deterministic across runs).
std::string format_double(double v);

// Runs fn(i) for i in [0, n) on up to `jobs` threads. Work items must be
// independent; results keyed by index are schedule-invariant. jobs <= 1
// runs inline.
void parallel_for(std::size_t n, int jobs,
                  const std::function<void(std::size_t)>& fn);

}  // namespace ardt

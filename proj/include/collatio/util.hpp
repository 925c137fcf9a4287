#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>

namespace collatio {

// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

// Shortest decimal that round-trips to the same double.
std::string format_double(double x);

// Microseconds since the Unix epoch, and its ISO-8601 UTC rendering.
std::int64_t unix_micros_now();
std::string iso_utc(std::int64_t unix_micros);

std::string read_file(const std::filesystem::path& path);

// Write to a sibling temp file, fsync, then rename over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content,
                       const std::function<void()>& before_rename = {});

// Appends one line (a trailing '\n' is added) and fsyncs before returning.
void append_line_durable(const std::filesystem::path& path, std::string_view line);

}  // namespace collatio

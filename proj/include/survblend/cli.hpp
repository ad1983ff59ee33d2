#pragma once

#include <map>
#include <string>

namespace survblend::cli {

inline constexpr const char* kArtifactVersion = "0.1.0";

/// Exit codes: 0 success, 1 partial failure with logged skips,
/// 2 usage or parse error.
int run(int argc, const char* const* argv);

/// Flat key=value config file ('#' starts a comment). Missing path with
/// empty string allowed; a named but unreadable file throws.
std::map<std::string, std::string> read_config(const std::string& path);

/// FNV-1a 64 checksum of a file's bytes, as "fnv1a:<hex>".
std::string file_checksum(const std::string& path);

} // namespace survblend::cli

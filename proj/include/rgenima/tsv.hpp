#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace rgenima {

struct TsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

std::vector<std::string> split(std::string_view s, char sep);

/// Parses a tab-separated file. When `expected_header` is nonempty the file's
/// leading columns must match it exactly. Every row must have header width.
TsvTable read_tsv(const std::filesystem::path& path, const std::vector<std::string>& expected_header = {});
TsvTable parse_tsv(std::string_view text, const std::string& source,
                   const std::vector<std::string>& expected_header = {});

std::uint32_t parse_u32(const std::string& s, std::string_view what);
std::uint64_t parse_u64(const std::string& s, std::string_view what);
double parse_double(const std::string& s, std::string_view what);

/// Shortest text that reloads to the same double (17 significant digits).
std::string format_g17(double v);

}  // namespace rgenima

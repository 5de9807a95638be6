#include "rgenima/tsv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

#include "rgenima/error.hpp"
#include "rgenima/volume_io.hpp"

namespace rgenima {

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            out.emplace_back(s.substr(start));
            return out;
        }
        out.emplace_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

TsvTable parse_tsv(std::string_view text, const std::string& source,
                   const std::vector<std::string>& expected_header) {
    TsvTable t;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        auto cells = split(line, '\t');
        if (t.header.empty()) {
            t.header = std::move(cells);
            if (t.header.size() < expected_header.size()) {
                throw Error(Errc::Parse, source + ": header has too few columns");
            }
            for (std::size_t i = 0; i < expected_header.size(); ++i) {
                if (t.header[i] != expected_header[i]) {
                    throw Error(Errc::Parse, source + ": header column " + std::to_string(i) + " is '" +
                                                 t.header[i] + "', expected '" + expected_header[i] + "'");
                }
            }
            continue;
        }
        if (cells.size() != t.header.size()) {
            throw Error(Errc::Parse, source + ":" + std::to_string(line_no) + ": expected " +
                                         std::to_string(t.header.size()) + " cells, got " +
                                         std::to_string(cells.size()));
        }
        t.rows.push_back(std::move(cells));
    }
    if (t.header.empty()) throw Error(Errc::Parse, source + ": missing header");
    return t;
}

TsvTable read_tsv(const std::filesystem::path& path, const std::vector<std::string>& expected_header) {
    if (!std::filesystem::exists(path)) throw Error(Errc::MissingArtifact, path.string() + " does not exist");
    const std::string text = detail::read_file(path);
    return parse_tsv(text, path.string(), expected_header);
}

namespace {

template <typename T>
T parse_int(const std::string& s, std::string_view what) {
    T v{};
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) {
        throw Error(Errc::Parse, "bad " + std::string(what) + " '" + s + "'");
    }
    return v;
}

}  // namespace

std::uint32_t parse_u32(const std::string& s, std::string_view what) { return parse_int<std::uint32_t>(s, what); }
std::uint64_t parse_u64(const std::string& s, std::string_view what) { return parse_int<std::uint64_t>(s, what); }

double parse_double(const std::string& s, std::string_view what) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size() || !std::isfinite(v)) {
        throw Error(Errc::Parse, "bad " + std::string(what) + " '" + s + "'");
    }
    return v;
}

std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace rgenima

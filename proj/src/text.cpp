#include "skillmem/text.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "skillmem/error.hpp"

namespace skillmem {

std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw Error("cannot format number");
    return std::string(buf, end);
}

double parse_double(std::string_view text) {
    const std::string s = trim(text);
    double v = 0.0;
    auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || end != s.data() + s.size() || s.empty())
        throw Error("malformed number '" + s + "'");
    return v;
}

std::vector<std::string> split(std::string_view line, char sep) {
    std::vector<std::string> out;
    std::size_t begin = 0;
    while (true) {
        const auto pos = line.find(sep, begin);
        if (pos == std::string_view::npos) {
            out.emplace_back(line.substr(begin));
            return out;
        }
        out.emplace_back(line.substr(begin, pos - begin));
        begin = pos + 1;
    }
}

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, std::string_view contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + path + "'");
    out << contents;
    if (!out) throw Error("write to '" + path + "' failed");
}

}  // namespace skillmem

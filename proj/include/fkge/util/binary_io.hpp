#pragma once
// Little-endian binary stream helpers shared by the graph cache and the
// embedding checkpoint formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace fkge::util {

static_assert(std::endian::native == std::endian::little,
              "file formats assume a little-endian host");

template <typename T>
void write_pod(std::ostream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const char* what) {
    T value;
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw std::runtime_error(std::string("truncated input reading ") + what);
    return value;
}

inline void write_string(std::ostream& out, const std::string& s) {
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& in, const char* what) {
    const auto len = read_pod<std::uint32_t>(in, what);
    std::string s(len, '\0');
    in.read(s.data(), len);
    if (!in) throw std::runtime_error(std::string("truncated input reading ") + what);
    return s;
}

inline void expect_magic(std::istream& in, const char magic[4], const char* format_name) {
    char buf[4];
    in.read(buf, 4);
    if (!in || std::memcmp(buf, magic, 4) != 0)
        throw std::runtime_error(std::string("bad magic bytes, not a ") + format_name + " file");
}

}  // namespace fkge::util

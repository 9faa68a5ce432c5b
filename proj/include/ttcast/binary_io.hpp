#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "ttcast/error.hpp"

namespace ttcast {

/// Little-endian primitive writer used by every binary format in the library.
class BinaryWriter {
public:
    explicit BinaryWriter(std::ostream& os) : os_(os) {}

    void raw(std::string_view bytes) { os_.write(bytes.data(), static_cast<std::streamsize>(bytes.size())); }
    void u8(std::uint8_t v) { os_.put(static_cast<char>(v)); }
    void u32(std::uint32_t v) { put_le(v, 4); }
    void u64(std::uint64_t v) { put_le(v, 8); }
    void i64(std::int64_t v) { put_le(static_cast<std::uint64_t>(v), 8); }
    void f64(double v) { put_le(std::bit_cast<std::uint64_t>(v), 8); }
    void str(std::string_view s) {
        u32(static_cast<std::uint32_t>(s.size()));
        raw(s);
    }

private:
    void put_le(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) {
            os_.put(static_cast<char>((v >> (8 * i)) & 0xffu));
        }
    }

    std::ostream& os_;
};

class BinaryReader {
public:
    explicit BinaryReader(std::istream& is) : is_(is) {}

    void expect_magic(std::string_view magic, std::string_view what) {
        std::string got(magic.size(), '\0');
        is_.read(got.data(), static_cast<std::streamsize>(got.size()));
        if (!is_ || got != magic) {
            throw DataError("not a " + std::string(what) + " file (bad magic)");
        }
    }
    std::uint8_t u8() { return static_cast<std::uint8_t>(get_le(1)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(get_le(4)); }
    std::uint64_t u64() { return get_le(8); }
    std::int64_t i64() { return static_cast<std::int64_t>(get_le(8)); }
    double f64() { return std::bit_cast<double>(get_le(8)); }
    std::string str() {
        const auto n = u32();
        std::string s(n, '\0');
        is_.read(s.data(), static_cast<std::streamsize>(n));
        if (!is_) {
            throw DataError("truncated binary stream");
        }
        return s;
    }

private:
    std::uint64_t get_le(int n) {
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) {
            const int c = is_.get();
            if (c == std::char_traits<char>::eof()) {
                throw DataError("truncated binary stream");
            }
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
        }
        return v;
    }

    std::istream& is_;
};

/// Writes `contents` to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

}  // namespace ttcast

#pragma once
// Little-endian primitives for the snapshot and chunk-store files.

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "kgx/error.hpp"

namespace kgx::binary {

template <typename UInt>
void write_uint(std::ostream& out, UInt value) {
    char buf[sizeof(UInt)];
    for (std::size_t i = 0; i < sizeof(UInt); ++i) {
        buf[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
    }
    out.write(buf, sizeof(UInt));
}

template <typename UInt>
UInt read_uint(std::istream& in) {
    unsigned char buf[sizeof(UInt)];
    if (!in.read(reinterpret_cast<char*>(buf), sizeof(UInt))) {
        throw Error(ErrorCode::SnapshotFormat, "unexpected end of file");
    }
    UInt value = 0;
    for (std::size_t i = 0; i < sizeof(UInt); ++i) {
        value |= static_cast<UInt>(buf[i]) << (8 * i);
    }
    return value;
}

inline void write_string(std::ostream& out, std::string_view s) {
    write_uint<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& in) {
    auto len = read_uint<std::uint32_t>(in);
    std::string s(len, '\0');
    if (len > 0 && !in.read(s.data(), len)) {
        throw Error(ErrorCode::SnapshotFormat, "truncated string");
    }
    return s;
}

// Writes `payload` as a u64 length followed by its bytes.
inline void write_section(std::ostream& out, const std::string& payload) {
    write_uint<std::uint64_t>(out, payload.size());
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
}

inline std::string read_section(std::istream& in) {
    auto len = read_uint<std::uint64_t>(in);
    std::string payload(len, '\0');
    if (len > 0 && !in.read(payload.data(), static_cast<std::streamsize>(len))) {
        throw Error(ErrorCode::SnapshotFormat, "truncated section");
    }
    return payload;
}

inline void write_magic(std::ostream& out, std::string_view magic) {
    out.write(magic.data(), static_cast<std::streamsize>(magic.size()));
}

inline void expect_magic(std::istream& in, std::string_view magic, std::string_view what) {
    std::string got(magic.size(), '\0');
    if (!in.read(got.data(), static_cast<std::streamsize>(got.size()))) {
        throw Error(ErrorCode::SnapshotFormat, std::string(what) + ": file too short");
    }
    if (got != magic) {
        throw Error(ErrorCode::SnapshotFormat,
                    std::string(what) + ": unsupported format version '" + got +
                        "', expected '" + std::string(magic) + "'");
    }
}

}  // namespace kgx::binary

#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <string>

#include "pdectrl/errors.hpp"

namespace pdectrl {

// Checksummed little-endian binary IO shared by the checkpoint and dataset
// formats. The checksum is the plain u64 sum of every byte written before it.
struct ByteSink {
    std::ofstream out;
    std::uint64_t checksum = 0;

    explicit ByteSink(const std::string& path) : out(path, std::ios::binary) {}

    void raw(const void* data, std::size_t len) {
        const auto* bytes = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) checksum += bytes[i];
        out.write(static_cast<const char*>(data), static_cast<std::streamsize>(len));
    }
    template <typename T>
    void value(T v) {
        raw(&v, sizeof(T));
    }
};

struct ByteSource {
    std::ifstream in;
    std::uint64_t checksum = 0;
    std::string path;

    explicit ByteSource(const std::string& p) : in(p, std::ios::binary), path(p) {}

    void raw(void* data, std::size_t len) {
        in.read(static_cast<char*>(data), static_cast<std::streamsize>(len));
        if (static_cast<std::size_t>(in.gcount()) != len) {
            throw FormatError("file truncated: " + path);
        }
        const auto* bytes = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) checksum += bytes[i];
    }
    template <typename T>
    T value() {
        T v;
        raw(&v, sizeof(T));
        return v;
    }
};

}  // namespace pdectrl

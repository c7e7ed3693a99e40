#include "recam/io.hpp"

#include <openssl/evp.h>
#include <unistd.h>

#include <atomic>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "recam/errors.hpp"

namespace fs = std::filesystem;

namespace recam::io {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open file: " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void atomic_write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    static std::atomic<std::uint64_t> counter{0};
    const fs::path tmp = path.string() + ".tmp." + std::to_string(::getpid()) + "." +
                         std::to_string(counter.fetch_add(1));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoError("cannot open file for writing: " + tmp.string());
        }
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) {
            throw IoError("short write: " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw IoError("rename failed for " + path.string() + ": " + ec.message());
    }
}

void write_doubles(const fs::path& path, const std::vector<double>& values) {
    std::string blob;
    const std::uint64_t count = values.size();
    blob.resize(sizeof(count) + values.size() * sizeof(double));
    std::memcpy(blob.data(), &count, sizeof(count));
    std::memcpy(blob.data() + sizeof(count), values.data(), values.size() * sizeof(double));
    atomic_write_file(path, blob);
}

std::vector<double> read_doubles(const fs::path& path) {
    const std::string blob = read_file(path);
    if (blob.size() < sizeof(std::uint64_t)) {
        throw IoError("truncated double file: " + path.string());
    }
    std::uint64_t count = 0;
    std::memcpy(&count, blob.data(), sizeof(count));
    if (blob.size() != sizeof(count) + count * sizeof(double)) {
        throw IoError("corrupt double file: " + path.string());
    }
    std::vector<double> values(count);
    std::memcpy(values.data(), blob.data() + sizeof(count), count * sizeof(double));
    return values;
}

std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
        throw IoError("sha256 failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(length * 2);
    for (unsigned int i = 0; i < length; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

}  // namespace recam::io

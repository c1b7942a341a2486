// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tempad Authors

#include "tempad/tensor_file.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "tempad/error.hpp"

namespace tempad::inline TEMPAD_PRECISION_NS {

namespace {

class Writer {
public:
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) {
            buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
        }
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
        }
    }
    void bytes(const void* p, std::size_t n) {
        const auto* c = static_cast<const char*>(p);
        buf_.insert(buf_.end(), c, c + n);
    }
    void f32(float f) { u32(std::bit_cast<std::uint32_t>(f)); }
    const std::vector<char>& buffer() const { return buf_; }

private:
    std::vector<char> buf_;
};

class Reader {
public:
    Reader(const std::vector<char>& buf, std::size_t end, const std::string& name)
        : buf_(buf), end_(end), name_(name) {}

    void need(std::size_t n) const {
        if (end_ - pos_ < n) {
            fail(ErrorCategory::corrupt_file, "truncated tensor file " + name_);
        }
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
        }
        pos_ += 4;
        return v;
    }
    std::string str(std::size_t n) {
        need(n);
        std::string s(buf_.data() + pos_, n);
        pos_ += n;
        return s;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    std::size_t pos() const { return pos_; }

private:
    const std::vector<char>& buf_;
    std::size_t end_;
    std::size_t pos_ = 0;
    const std::string& name_;
};

std::vector<char> serialize(const TensorFile& file) {
    Writer w;
    w.bytes(file.magic.data(), 4);
    w.u32(file.version);
    std::string meta;
    for (const auto& [k, v] : file.metadata) {
        require(k.find_first_of("=\n") == std::string::npos && v.find('\n') == std::string::npos,
                ErrorCategory::invalid_argument, "metadata entries must be single-line key=value: " + k);
        meta += k + "=" + v + "\n";
    }
    w.u32(static_cast<std::uint32_t>(meta.size()));
    w.bytes(meta.data(), meta.size());
    w.u32(static_cast<std::uint32_t>(file.tensors.size()));
    for (const auto& [name, m] : file.tensors) {
        w.u32(static_cast<std::uint32_t>(name.size()));
        w.bytes(name.data(), name.size());
        w.u32(2);
        w.u32(static_cast<std::uint32_t>(m.rows()));
        w.u32(static_cast<std::uint32_t>(m.cols()));
        for (const real f : m.values()) {
            w.f32(static_cast<float>(f));
        }
    }
    const auto& buf = w.buffer();
    w.u64(fnv1a(buf.data(), buf.size()));
    return w.buffer();
}

}  // namespace

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h) noexcept {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

const std::string* TensorFile::find_meta(const std::string& key) const {
    for (const auto& [k, v] : metadata) {
        if (k == key) {
            return &v;
        }
    }
    return nullptr;
}

const std::string& TensorFile::meta(const std::string& key) const {
    const auto* v = find_meta(key);
    require(v != nullptr, ErrorCategory::schema, "tensor file lacks metadata key '" + key + "'");
    return *v;
}

const Matrix& TensorFile::tensor(const std::string& name) const {
    for (const auto& [n, m] : tensors) {
        if (n == name) {
            return m;
        }
    }
    fail(ErrorCategory::corrupt_file, "tensor file lacks tensor '" + name + "'");
}

void write_tensor_file(const std::filesystem::path& path, const TensorFile& file) {
    const auto buf = serialize(file);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.is_open(), ErrorCategory::io, "cannot write " + path.string());
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    require(out.good(), ErrorCategory::io, "write failed for " + path.string());
}

void write_tensor_file_atomic(const std::filesystem::path& path, const TensorFile& file) {
    auto tmp = path;
    tmp += ".tmp";
    write_tensor_file(tmp, file);
    std::filesystem::rename(tmp, path);
}

TensorFile read_tensor_file(const std::filesystem::path& path, std::array<char, 4> expected_magic) {
    std::ifstream in(path, std::ios::binary);
    require(in.is_open(), ErrorCategory::io, "cannot open " + path.string());
    const std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const std::string name = path.string();
    require(buf.size() >= 16, ErrorCategory::corrupt_file, "truncated tensor file " + name);
    require(std::memcmp(buf.data(), expected_magic.data(), 4) == 0, ErrorCategory::corrupt_file,
            "wrong file type (magic) for " + name);

    const std::size_t body = buf.size() - 8;
    Reader r(buf, body, name);
    TensorFile file;
    file.magic = expected_magic;
    (void)r.str(4);
    file.version = r.u32();
    require(file.version == TensorFile::current_version, ErrorCategory::version_mismatch,
            name + " has format version " + std::to_string(file.version) + ", expected " +
                std::to_string(TensorFile::current_version));

    std::uint64_t stored = 0;
    for (int i = 0; i < 8; ++i) {
        stored |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[body + i])) << (8 * i);
    }
    require(stored == fnv1a(buf.data(), body), ErrorCategory::corrupt_file, "checksum mismatch in " + name);

    const std::uint32_t meta_len = r.u32();
    std::istringstream meta(r.str(meta_len));
    std::string line;
    while (std::getline(meta, line)) {
        const auto eq = line.find('=');
        require(eq != std::string::npos, ErrorCategory::corrupt_file, "bad metadata line in " + name);
        file.metadata.emplace_back(line.substr(0, eq), line.substr(eq + 1));
    }
    const std::uint32_t count = r.u32();
    for (std::uint32_t t = 0; t < count; ++t) {
        std::string tname = r.str(r.u32());
        require(r.u32() == 2, ErrorCategory::corrupt_file, "unsupported tensor rank in " + name);
        const std::uint32_t rows = r.u32();
        const std::uint32_t cols = r.u32();
        r.need(static_cast<std::size_t>(rows) * cols * 4);
        Matrix m(static_cast<int>(rows), static_cast<int>(cols));
        for (real& f : m.values()) {
            f = r.f32();
        }
        file.tensors.emplace_back(std::move(tname), std::move(m));
    }
    require(r.pos() == body, ErrorCategory::corrupt_file, "trailing bytes in " + name);
    return file;
}

}  // namespace tempad

#include "stmi/serialization.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "stmi/errors.hpp"

namespace stmi::stt {

namespace {

constexpr unsigned char kMagic[4] = {0x53, 0x54, 0x54, 0x31};
constexpr std::size_t kMaxElements = std::size_t{1} << 30;

void put_u64_le(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u32_le(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64_le(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{p[i]} << (8 * i);
    return v;
}

std::uint32_t get_u32_le(const unsigned char* p) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{p[i]} << (8 * i);
    return v;
}

std::size_t element_size(Dtype d) {
    switch (d) {
        case Dtype::f32: return 4;
        case Dtype::f64: return 8;
        case Dtype::u8: return 1;
    }
    throw FormatError("unknown dtype");
}

const char* dtype_name(Dtype d) {
    switch (d) {
        case Dtype::f32: return "f32";
        case Dtype::f64: return "f64";
        case Dtype::u8: return "u8";
    }
    return "?";
}

} // namespace

void save_tensor(const Tensor& t, const std::string& path, Dtype dtype) {
    std::string buf;
    buf.reserve(6 + 8 * t.rank() + element_size(dtype) * t.numel());
    buf.append(reinterpret_cast<const char*>(kMagic), 4);
    buf.push_back(static_cast<char>(dtype));
    if (t.rank() > 255) throw ContractError("save_tensor: rank exceeds 255");
    buf.push_back(static_cast<char>(t.rank()));
    for (std::size_t d : t.shape()) put_u64_le(buf, d);
    for (double v : t.data()) {
        switch (dtype) {
            case Dtype::f32: {
                const float f = static_cast<float>(v);
                if (static_cast<double>(f) != v) {
                    throw ContractError("save_tensor: value not exactly representable as f32");
                }
                put_u32_le(buf, std::bit_cast<std::uint32_t>(f));
                break;
            }
            case Dtype::f64:
                put_u64_le(buf, std::bit_cast<std::uint64_t>(v));
                break;
            case Dtype::u8: {
                if (v < 0.0 || v > 255.0 || v != std::floor(v)) {
                    throw ContractError("save_tensor: value not representable as u8");
                }
                buf.push_back(static_cast<char>(static_cast<unsigned char>(v)));
                break;
            }
        }
    }
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw IoError("save_tensor: cannot open " + tmp + " for writing");
        f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
        if (!f) throw IoError("save_tensor: short write to " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("save_tensor: cannot rename " + tmp + " to " + path);
}

namespace {

std::vector<unsigned char> read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("load_tensor: cannot open " + path);
    f.seekg(0, std::ios::end);
    const auto size = f.tellg();
    f.seekg(0);
    std::vector<unsigned char> bytes(static_cast<std::size_t>(size));
    f.read(reinterpret_cast<char*>(bytes.data()), size);
    if (!f) throw IoError("load_tensor: read failure on " + path);
    return bytes;
}

struct Header {
    Dtype dtype;
    Shape shape;
    std::size_t payload_offset;
};

Header parse_header(const std::vector<unsigned char>& b, const std::string& path) {
    if (b.size() < 4) throw FormatError(path + ": truncated before magic at offset 0");
    for (int i = 0; i < 4; ++i) {
        if (b[i] != kMagic[i]) {
            throw FormatError(path + ": bad magic byte at offset " + std::to_string(i));
        }
    }
    if (b.size() < 5) throw FormatError(path + ": truncated before dtype at offset 4");
    const unsigned code = b[4];
    if (code > 2) {
        throw FormatError(path + ": unknown dtype code " + std::to_string(code) +
                          " at offset 4");
    }
    if (b.size() < 6) throw FormatError(path + ": truncated before rank at offset 5");
    const std::size_t rank = b[5];
    Shape shape(rank);
    std::size_t off = 6;
    for (std::size_t i = 0; i < rank; ++i) {
        if (b.size() < off + 8) {
            throw FormatError(path + ": truncated dim " + std::to_string(i) + " at offset " +
                              std::to_string(off));
        }
        shape[i] = static_cast<std::size_t>(get_u64_le(b.data() + off));
        off += 8;
    }
    return {static_cast<Dtype>(code), std::move(shape), off};
}

} // namespace

Tensor load_tensor(const std::string& path, std::optional<Dtype> expect_dtype,
                   std::optional<std::size_t> expect_rank) {
    const std::vector<unsigned char> b = read_file(path);
    Header h = parse_header(b, path);
    if (expect_dtype && *expect_dtype != h.dtype) {
        throw FormatError(path + ": dtype is " + dtype_name(h.dtype) + ", expected " +
                          dtype_name(*expect_dtype) + " (offset 4)");
    }
    if (expect_rank && *expect_rank != h.shape.size()) {
        throw FormatError(path + ": rank is " + std::to_string(h.shape.size()) +
                          ", expected " + std::to_string(*expect_rank) + " (offset 5)");
    }
    std::size_t numel = 1;
    for (std::size_t d : h.shape) {
        if (d != 0 && numel > kMaxElements / d) {
            throw FormatError(path + ": implausible element count in header");
        }
        numel *= d;
    }
    const std::size_t esz = element_size(h.dtype);
    const std::size_t need = h.payload_offset + numel * esz;
    if (b.size() < need) {
        throw FormatError(path + ": truncated payload at offset " + std::to_string(b.size()) +
                          ", expected " + std::to_string(need) + " bytes");
    }
    if (b.size() > need) {
        throw FormatError(path + ": trailing data at offset " + std::to_string(need));
    }
    std::vector<double> values(numel);
    const unsigned char* p = b.data() + h.payload_offset;
    for (std::size_t i = 0; i < numel; ++i) {
        switch (h.dtype) {
            case Dtype::f32:
                values[i] = static_cast<double>(std::bit_cast<float>(get_u32_le(p + 4 * i)));
                break;
            case Dtype::f64:
                values[i] = std::bit_cast<double>(get_u64_le(p + 8 * i));
                break;
            case Dtype::u8:
                values[i] = static_cast<double>(p[i]);
                break;
        }
    }
    return Tensor::from_data(std::move(h.shape), std::move(values));
}

Dtype probe_dtype(const std::string& path) {
    const std::vector<unsigned char> b = read_file(path);
    return parse_header(b, path).dtype;
}

} // namespace stmi::stt

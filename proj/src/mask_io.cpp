#include "linedet/mask_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <vector>

#include <png.h>

#include <json.hpp>

namespace linedet {

namespace {

namespace fs = std::filesystem;

struct FileHandle {
    FILE* f = nullptr;
    explicit FileHandle(const fs::path& path, const char* mode)
        : f(std::fopen(path.c_str(), mode)) {
        if (!f) throw io_error("cannot open '" + path.string() + "'");
    }
    ~FileHandle() {
        if (f) std::fclose(f);
    }
    FileHandle(const FileHandle&) = delete;
    FileHandle& operator=(const FileHandle&) = delete;
};

fs::path temp_sibling(const fs::path& path) {
    fs::path tmp = path;
    tmp += ".tmp";
    return tmp;
}

void commit(const fs::path& tmp, const fs::path& path) {
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw io_error("cannot rename '" + tmp.string() + "' to '" + path.string() + "'");
}

// Gray rows are packed big-endian per the PNG spec; bit_depth is 8 or 16.
void write_gray_png(const fs::path& path, int width, int height, int bit_depth,
                    const std::vector<std::uint16_t>& values) {
    const fs::path tmp = temp_sibling(path);
    {
        FileHandle file(tmp, "wb");
        png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
        if (!png) throw io_error("png_create_write_struct failed");
        png_infop info = png_create_info_struct(png);
        if (!info) {
            png_destroy_write_struct(&png, nullptr);
            throw io_error("png_create_info_struct failed");
        }

        const std::size_t stride = static_cast<std::size_t>(width) * (bit_depth / 8);
        std::vector<png_byte> bytes(stride * height);
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) {
                const std::uint16_t v = values[static_cast<std::size_t>(y) * width + x];
                if (bit_depth == 16) {
                    bytes[y * stride + 2 * x] = static_cast<png_byte>(v >> 8);
                    bytes[y * stride + 2 * x + 1] = static_cast<png_byte>(v & 0xff);
                } else {
                    bytes[y * stride + x] = static_cast<png_byte>(v);
                }
            }
        }
        std::vector<png_bytep> rows(height);
        for (int y = 0; y < height; ++y) rows[y] = bytes.data() + y * stride;

        if (setjmp(png_jmpbuf(png))) {
            png_destroy_write_struct(&png, &info);
            throw io_error("libpng failed while writing '" + path.string() + "'");
        }
        png_init_io(png, file.f);
        png_set_IHDR(png, info, width, height, bit_depth, PNG_COLOR_TYPE_GRAY,
                     PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                     PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png, info);
        png_write_image(png, rows.data());
        png_write_end(png, nullptr);
        png_destroy_write_struct(&png, &info);
    }
    commit(tmp, path);
}

struct GrayImage {
    int width = 0;
    int height = 0;
    int bit_depth = 0;
    std::vector<std::uint16_t> values;
};

GrayImage read_gray_png(const fs::path& path) {
    FileHandle file(path, "rb");
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw io_error("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw io_error("png_create_info_struct failed");
    }

    GrayImage img;
    std::vector<png_byte> bytes;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw io_error("libpng failed while reading '" + path.string() + "'");
    }
    png_init_io(png, file.f);
    png_read_info(png, info);
    img.width = static_cast<int>(png_get_image_width(png, info));
    img.height = static_cast<int>(png_get_image_height(png, info));
    img.bit_depth = png_get_bit_depth(png, info);
    const int color = png_get_color_type(png, info);
    if (color != PNG_COLOR_TYPE_GRAY || (img.bit_depth != 8 && img.bit_depth != 16)) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw parse_error("'" + path.string() + "': expected 8- or 16-bit grayscale PNG");
    }

    const std::size_t stride = static_cast<std::size_t>(img.width) * (img.bit_depth / 8);
    bytes.resize(stride * img.height);
    rows.resize(img.height);
    for (int y = 0; y < img.height; ++y) rows[y] = bytes.data() + y * stride;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    img.values.resize(static_cast<std::size_t>(img.width) * img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            if (img.bit_depth == 16)
                img.values[static_cast<std::size_t>(y) * img.width + x] =
                    static_cast<std::uint16_t>((bytes[y * stride + 2 * x] << 8) |
                                               bytes[y * stride + 2 * x + 1]);
            else
                img.values[static_cast<std::size_t>(y) * img.width + x] = bytes[y * stride + x];
        }
    }
    return img;
}

fs::path sidecar_path(const fs::path& path) {
    fs::path p = path;
    p += ".json";
    return p;
}

void put_u32_le(std::vector<unsigned char>& out, std::uint32_t v) {
    out.push_back(v & 0xff);
    out.push_back((v >> 8) & 0xff);
    out.push_back((v >> 16) & 0xff);
    out.push_back((v >> 24) & 0xff);
}

std::uint32_t get_u32_le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void write_bytes_atomic(const fs::path& path, const std::vector<unsigned char>& bytes) {
    const fs::path tmp = temp_sibling(path);
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw io_error("cannot open '" + tmp.string() + "'");
        out.write(reinterpret_cast<const char*>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size()));
        if (!out) throw io_error("short write to '" + tmp.string() + "'");
    }
    commit(tmp, path);
}

std::vector<unsigned char> read_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw io_error("cannot open '" + path.string() + "'");
    const std::streamsize n = in.tellg();
    in.seekg(0);
    std::vector<unsigned char> bytes(static_cast<std::size_t>(n));
    in.read(reinterpret_cast<char*>(bytes.data()), n);
    if (!in) throw io_error("short read from '" + path.string() + "'");
    return bytes;
}

static_assert(std::endian::native == std::endian::little,
              "float plane serialization assumes a little-endian host");

}  // namespace

void write_distance_mask(const fs::path& path, const DistanceMask& dm, int factor) {
    std::vector<std::uint16_t> values(dm.values.size());
    for (int y = 0; y < dm.height(); ++y)
        for (int x = 0; x < dm.width(); ++x)
            values[static_cast<std::size_t>(y) * dm.width() + x] =
                static_cast<std::uint16_t>(std::lround(dm.values(y, x) * 65535.0));
    write_gray_png(path, dm.width(), dm.height(), 16, values);

    nlohmann::json meta{{"d_max", dm.d_max}, {"factor", factor}};
    write_text_file(sidecar_path(path), meta.dump());
}

MaskMeta read_mask_meta(const fs::path& path) {
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(read_text_file(sidecar_path(path)));
    } catch (const nlohmann::json::parse_error& e) {
        throw parse_error("sidecar of '" + path.string() + "': " + e.what());
    }
    MaskMeta m;
    m.d_max = meta.value("d_max", 128);
    m.factor = meta.value("factor", 16);
    return m;
}

DistanceMask read_distance_mask(const fs::path& path) {
    const GrayImage img = read_gray_png(path);
    if (img.bit_depth != 16)
        throw parse_error("'" + path.string() + "': distance masks are 16-bit PNGs");
    DistanceMask dm;
    dm.d_max = read_mask_meta(path).d_max;
    dm.values = Grid<double>(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            dm.values(y, x) = img.values[static_cast<std::size_t>(y) * img.width + x] / 65535.0;
    return dm;
}

void write_binary_mask(const fs::path& path, const BinaryMask& mask) {
    std::vector<std::uint16_t> values(mask.size());
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x)
            values[static_cast<std::size_t>(y) * mask.width() + x] = mask(y, x) ? 255 : 0;
    write_gray_png(path, mask.width(), mask.height(), 8, values);
}

BinaryMask read_binary_mask(const fs::path& path) {
    const GrayImage img = read_gray_png(path);
    if (img.bit_depth != 8)
        throw parse_error("'" + path.string() + "': binary masks are 8-bit PNGs");
    BinaryMask mask(img.width, img.height, 0);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            mask(y, x) = img.values[static_cast<std::size_t>(y) * img.width + x] >= 128 ? 1 : 0;
    return mask;
}

void write_gray_image(const fs::path& path, const Grid<double>& image) {
    std::vector<std::uint16_t> values(image.size());
    for (int y = 0; y < image.height(); ++y)
        for (int x = 0; x < image.width(); ++x)
            values[static_cast<std::size_t>(y) * image.width() + x] = static_cast<std::uint16_t>(
                std::lround(std::clamp(image(y, x), 0.0, 1.0) * 255.0));
    write_gray_png(path, image.width(), image.height(), 8, values);
}

Grid<double> read_gray_image(const fs::path& path) {
    const GrayImage img = read_gray_png(path);
    if (img.bit_depth != 8)
        throw parse_error("'" + path.string() + "': expected an 8-bit grayscale PNG");
    Grid<double> out(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            out(y, x) = img.values[static_cast<std::size_t>(y) * img.width + x] / 255.0;
    return out;
}

void write_flow_field(const fs::path& path, const FlowField& flow) {
    std::vector<unsigned char> bytes;
    bytes.reserve(8 + flow.dx.size() * 8);
    put_u32_le(bytes, static_cast<std::uint32_t>(flow.dx.width()));
    put_u32_le(bytes, static_cast<std::uint32_t>(flow.dx.height()));
    auto put_plane = [&](const Grid<double>& plane) {
        for (int y = 0; y < plane.height(); ++y)
            for (int x = 0; x < plane.width(); ++x) {
                const float v = static_cast<float>(plane(y, x));
                unsigned char raw[4];
                std::memcpy(raw, &v, 4);
                bytes.insert(bytes.end(), raw, raw + 4);
            }
    };
    put_plane(flow.dx);
    put_plane(flow.dy);
    write_bytes_atomic(path, bytes);
}

FlowField read_flow_field(const fs::path& path) {
    const std::vector<unsigned char> bytes = read_bytes(path);
    if (bytes.size() < 8) throw parse_error("'" + path.string() + "': truncated flow file");
    const int w = static_cast<int>(get_u32_le(bytes.data()));
    const int h = static_cast<int>(get_u32_le(bytes.data() + 4));
    const std::size_t plane = static_cast<std::size_t>(w) * h;
    if (w < 1 || h < 1 || bytes.size() != 8 + plane * 8)
        throw parse_error("'" + path.string() + "': flow file size does not match header");
    FlowField flow{Grid<double>(w, h), Grid<double>(w, h)};
    auto get_plane = [&](Grid<double>& out, std::size_t offset) {
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                float v;
                std::memcpy(&v, bytes.data() + offset + (static_cast<std::size_t>(y) * w + x) * 4, 4);
                out(y, x) = v;
            }
    };
    get_plane(flow.dx, 8);
    get_plane(flow.dy, 8 + plane * 4);
    return flow;
}

void write_gradient(const fs::path& path, const Grid<double>& grad) {
    std::vector<unsigned char> bytes;
    bytes.reserve(8 + grad.size() * 8);
    put_u32_le(bytes, static_cast<std::uint32_t>(grad.width()));
    put_u32_le(bytes, static_cast<std::uint32_t>(grad.height()));
    for (int y = 0; y < grad.height(); ++y)
        for (int x = 0; x < grad.width(); ++x) {
            unsigned char raw[8];
            const double v = grad(y, x);
            std::memcpy(raw, &v, 8);
            bytes.insert(bytes.end(), raw, raw + 8);
        }
    write_bytes_atomic(path, bytes);
}

Grid<double> read_gradient(const fs::path& path) {
    const std::vector<unsigned char> bytes = read_bytes(path);
    if (bytes.size() < 8) throw parse_error("'" + path.string() + "': truncated gradient file");
    const int w = static_cast<int>(get_u32_le(bytes.data()));
    const int h = static_cast<int>(get_u32_le(bytes.data() + 4));
    if (w < 1 || h < 1 ||
        bytes.size() != 8 + static_cast<std::size_t>(w) * h * 8)
        throw parse_error("'" + path.string() + "': gradient file size does not match header");
    Grid<double> grad(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            std::memcpy(&grad(y, x), bytes.data() + 8 + (static_cast<std::size_t>(y) * w + x) * 8, 8);
    return grad;
}

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open '" + path.string() + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return text;
}

void write_text_file(const fs::path& path, const std::string& text) {
    const fs::path tmp = temp_sibling(path);
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw io_error("cannot open '" + tmp.string() + "'");
        out << text;
        if (!out) throw io_error("short write to '" + tmp.string() + "'");
    }
    commit(tmp, path);
}

}  // namespace linedet

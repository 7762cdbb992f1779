#ifndef BFEM_PGM_HPP
#define BFEM_PGM_HPP

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>

#include "bfem/types.hpp"

namespace bfem {

/// Grayscale image with real-valued intensities in [0, 255], row-major.
struct GrayImage {
    int width = 0;
    int height = 0;
    Matrix pixels;  // height x width

    bool same_shape(const GrayImage& other) const {
        return width == other.width && height == other.height;
    }
};

namespace detail {

// Reads the next token, skipping whitespace and '#' comment lines.
inline std::string next_pnm_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            std::string line;
            std::getline(in, line);
            continue;
        }
        if (!std::isspace(c)) {
            tok.push_back(static_cast<char>(c));
            while ((c = in.get()) != EOF && !std::isspace(c))
                tok.push_back(static_cast<char>(c));
            return tok;
        }
    }
    throw MalformedFile("unexpected end of PGM header");
}

}  // namespace detail

/// Reads an 8-bit P2 (ASCII) or P5 (binary) PGM file.
inline GrayImage read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MalformedFile("cannot open " + path);

    const std::string magic = detail::next_pnm_token(in);
    if (magic != "P2" && magic != "P5")
        throw MalformedFile("not a PGM file: " + path);
    const int width = std::stoi(detail::next_pnm_token(in));
    const int height = std::stoi(detail::next_pnm_token(in));
    const int maxval = std::stoi(detail::next_pnm_token(in));
    if (width <= 0 || height <= 0) throw MalformedFile("bad PGM dimensions");
    if (maxval != 255)
        throw UnsupportedMaxval("only 8-bit PGM (maxval 255) is supported");

    GrayImage img;
    img.width = width;
    img.height = height;
    img.pixels.resize(height, width);
    if (magic == "P5") {
        std::string data(static_cast<std::size_t>(width) * height, '\0');
        in.read(data.data(), static_cast<std::streamsize>(data.size()));
        if (in.gcount() != static_cast<std::streamsize>(data.size()))
            throw MalformedFile("truncated PGM payload");
        for (int r = 0; r < height; ++r)
            for (int c = 0; c < width; ++c)
                img.pixels(r, c) = static_cast<unsigned char>(
                    data[static_cast<std::size_t>(r) * width + c]);
    } else {
        for (int r = 0; r < height; ++r)
            for (int c = 0; c < width; ++c) {
                int v;
                if (!(in >> v)) throw MalformedFile("truncated PGM payload");
                img.pixels(r, c) = v;
            }
    }
    return img;
}

/// Writes a binary (P5) 8-bit PGM; values are rounded and clamped.
inline void write_pgm(const GrayImage& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    std::string data(static_cast<std::size_t>(img.width) * img.height, '\0');
    for (int r = 0; r < img.height; ++r)
        for (int c = 0; c < img.width; ++c) {
            const double v =
                std::min(255.0, std::max(0.0, std::round(img.pixels(r, c))));
            data[static_cast<std::size_t>(r) * img.width + c] =
                static_cast<char>(static_cast<unsigned char>(v));
        }
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
}

}  // namespace bfem

#endif

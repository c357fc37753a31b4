#include "dentkit/image_io.hpp"

#include "dentkit/errors.hpp"

#include <png.h>

#include <cstdio>
#include <memory>

namespace dentkit {

void save_png_rgb(const std::vector<uint8_t>& rgb, int width, int height,
                  const std::string& path) {
    if (rgb.size() != static_cast<size_t>(width) * height * 3) {
        throw ShapeMismatch("rgb buffer does not match image dimensions");
    }

    std::unique_ptr<FILE, int (*)(FILE*)> file(fopen(path.c_str(), "wb"), &fclose);
    if (!file) throw IOError("cannot write " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IOError("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IOError("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IOError("libpng failure while writing " + path);
    }

    png_init_io(png, file.get());
    png_set_IHDR(png, info, width, height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < height; ++y) {
        png_write_row(png, const_cast<png_bytep>(rgb.data() + static_cast<size_t>(y) * width * 3));
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace dentkit

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dentkit {

// 8-bit RGB PNG, row-major from the top; rgb.size() == 3*width*height.
void save_png_rgb(const std::vector<uint8_t>& rgb, int width, int height,
                  const std::string& path);

}  // namespace dentkit

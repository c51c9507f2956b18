#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "siedob/grid.hpp"

namespace siedob {

using Bytes = std::vector<std::uint8_t>;

/// RGB image with 8-bit channels mapped to [0,1].
Image read_image(const std::string& path);
void write_image(const std::string& path, const Image& image);

/// 8-bit single-channel class map.
LabelGrid read_labels(const std::string& path);
void write_labels(const std::string& path, const LabelGrid& labels);

/// 16-bit single-channel instance ids (0 = no instance).
LabelGrid read_instances(const std::string& path);
void write_instances(const std::string& path, const LabelGrid& ids);

/// Any nonzero pixel is edited.
Mask read_mask(const std::string& path);
void write_mask(const std::string& path, const Mask& mask);

Bytes encode_png(const Image& image);
Bytes encode_png(const LabelGrid& labels);  // 8-bit
Bytes encode_png(const Mask& mask);         // 0/255
Image decode_png_image(const Bytes& png);
LabelGrid decode_png_labels(const Bytes& png);
Mask decode_png_mask(const Bytes& png);

std::string base64_encode(const Bytes& bytes);
Bytes base64_decode(const std::string& text);

/// Rounds [0,1] values to the nearest 8-bit level.
Image quantize8(const Image& image);

}  // namespace siedob

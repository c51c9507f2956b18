#include "siedob/image_io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace siedob {

namespace {

cv::Mat load(const std::string& path, int flags) {
  cv::Mat m = cv::imread(path, flags);
  if (m.empty()) throw IoError("cannot read image: " + path);
  return m;
}

cv::Mat decode(const Bytes& png, int flags) {
  if (png.empty()) throw ValidationError("empty PNG payload");
  cv::Mat m = cv::imdecode(cv::Mat(1, static_cast<int>(png.size()), CV_8UC1, const_cast<std::uint8_t*>(png.data())), flags);
  if (m.empty()) throw ValidationError("payload is not a decodable image");
  return m;
}

void save(const std::string& path, const cv::Mat& m) {
  if (!cv::imwrite(path, m)) throw IoError("cannot write image: " + path);
}

Bytes encode(const cv::Mat& m) {
  Bytes out;
  if (!cv::imencode(".png", m, out)) throw IoError("PNG encoding failed");
  return out;
}

Image from_mat(const cv::Mat& bgr) {
  cv::Mat rgb;
  if (bgr.channels() == 1) {
    cv::cvtColor(bgr, rgb, cv::COLOR_GRAY2RGB);
  } else if (bgr.channels() == 4) {
    cv::cvtColor(bgr, rgb, cv::COLOR_BGRA2RGB);
  } else {
    cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  }
  if (rgb.depth() != CV_8U) rgb.convertTo(rgb, CV_8U, 1.0 / 257.0);
  Image img(rgb.rows, rgb.cols, 3);
  for (int y = 0; y < rgb.rows; ++y) {
    const auto* row = rgb.ptr<std::uint8_t>(y);
    for (int i = 0; i < rgb.cols * 3; ++i) img.data[static_cast<size_t>(y) * rgb.cols * 3 + i] = row[i] / 255.0f;
  }
  return img;
}

cv::Mat to_mat(const Image& img) {
  if (img.channels != 3) throw DimensionError("only RGB images can be written");
  cv::Mat rgb(img.height, img.width, CV_8UC3);
  for (int y = 0; y < img.height; ++y) {
    auto* row = rgb.ptr<std::uint8_t>(y);
    for (int i = 0; i < img.width * 3; ++i) {
      const float v = img.data[static_cast<size_t>(y) * img.width * 3 + i];
      row[i] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
    }
  }
  cv::Mat bgr;
  cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
  return bgr;
}

LabelGrid grid_from_mat(const cv::Mat& m) {
  cv::Mat single = m;
  if (m.channels() != 1) {
    std::vector<cv::Mat> planes;
    cv::split(m, planes);
    single = planes[0];
  }
  LabelGrid g(single.rows, single.cols);
  for (int y = 0; y < single.rows; ++y) {
    for (int x = 0; x < single.cols; ++x) {
      g.at(y, x) = single.depth() == CV_16U ? single.at<std::uint16_t>(y, x) : single.at<std::uint8_t>(y, x);
    }
  }
  return g;
}

cv::Mat mat_from_grid(const LabelGrid& g, int type, int max_value) {
  cv::Mat m(g.height, g.width, type);
  for (int y = 0; y < g.height; ++y) {
    for (int x = 0; x < g.width; ++x) {
      const int v = g.at(y, x);
      if (v < 0 || v > max_value) throw ValidationError("grid value out of PNG range");
      if (type == CV_16UC1) {
        m.at<std::uint16_t>(y, x) = static_cast<std::uint16_t>(v);
      } else {
        m.at<std::uint8_t>(y, x) = static_cast<std::uint8_t>(v);
      }
    }
  }
  return m;
}

Mask mask_from_grid(const LabelGrid& g) {
  Mask m(g.height, g.width);
  for (size_t i = 0; i < g.size(); ++i) m.data[i] = g.data[i] != 0 ? 1 : 0;
  return m;
}

LabelGrid grid_from_mask(const Mask& m) {
  LabelGrid g(m.height, m.width);
  for (size_t i = 0; i < m.size(); ++i) g.data[i] = m.data[i] ? 255 : 0;
  return g;
}

}  // namespace

Image read_image(const std::string& path) { return from_mat(load(path, cv::IMREAD_COLOR)); }
void write_image(const std::string& path, const Image& image) { save(path, to_mat(image)); }

LabelGrid read_labels(const std::string& path) { return grid_from_mat(load(path, cv::IMREAD_UNCHANGED)); }
void write_labels(const std::string& path, const LabelGrid& labels) { save(path, mat_from_grid(labels, CV_8UC1, 255)); }

LabelGrid read_instances(const std::string& path) { return grid_from_mat(load(path, cv::IMREAD_UNCHANGED)); }
void write_instances(const std::string& path, const LabelGrid& ids) { save(path, mat_from_grid(ids, CV_16UC1, 65535)); }

Mask read_mask(const std::string& path) { return mask_from_grid(grid_from_mat(load(path, cv::IMREAD_UNCHANGED))); }
void write_mask(const std::string& path, const Mask& mask) { save(path, mat_from_grid(grid_from_mask(mask), CV_8UC1, 255)); }

Bytes encode_png(const Image& image) { return encode(to_mat(image)); }
Bytes encode_png(const LabelGrid& labels) { return encode(mat_from_grid(labels, CV_8UC1, 255)); }
Bytes encode_png(const Mask& mask) { return encode(mat_from_grid(grid_from_mask(mask), CV_8UC1, 255)); }

Image decode_png_image(const Bytes& png) { return from_mat(decode(png, cv::IMREAD_COLOR)); }
LabelGrid decode_png_labels(const Bytes& png) { return grid_from_mat(decode(png, cv::IMREAD_UNCHANGED)); }
Mask decode_png_mask(const Bytes& png) { return mask_from_grid(grid_from_mat(decode(png, cv::IMREAD_UNCHANGED))); }

std::string base64_encode(const Bytes& bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(), static_cast<int>(bytes.size()));
  out.resize(static_cast<size_t>(n));
  return out;
}

Bytes base64_decode(const std::string& text) {
  std::string clean;
  clean.reserve(text.size());
  for (char c : text) {
    if (c != '\n' && c != '\r' && c != ' ') clean.push_back(c);
  }
  if (clean.size() % 4 != 0) throw ValidationError("base64 payload length is not a multiple of 4");
  Bytes out(clean.size() / 4 * 3);
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(clean.data()), static_cast<int>(clean.size()));
  if (n < 0) throw ValidationError("invalid base64 payload");
  size_t len = static_cast<size_t>(n);
  // EVP_DecodeBlock keeps the zero bytes produced by '=' padding.
  if (!clean.empty() && clean.back() == '=') --len;
  if (clean.size() >= 2 && clean[clean.size() - 2] == '=') --len;
  out.resize(len);
  return out;
}

Image quantize8(const Image& image) {
  Image out = image;
  for (auto& v : out.data) v = static_cast<float>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)) / 255.0f;
  return out;
}

}  // namespace siedob

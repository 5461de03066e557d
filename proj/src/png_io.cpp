#include "dynsurf/png_io.hpp"

#include <opencv2/imgcodecs.hpp>
#include <stdexcept>

namespace dynsurf {

namespace {
[[noreturn]] void fail(const std::string& what, const std::string& path) {
  throw std::runtime_error(what + ": " + path);
}
}  // namespace

ColorImage read_rgb8(const std::string& path) {
  cv::Mat m = cv::imread(path, cv::IMREAD_COLOR);
  if (m.empty()) fail("cannot read image", path);
  ColorImage out(m.cols, m.rows);
  for (int y = 0; y < m.rows; ++y) {
    const cv::Vec3b* src = m.ptr<cv::Vec3b>(y);
    Rgb8* dst = out.row(y);
    for (int x = 0; x < m.cols; ++x) dst[x] = {src[x][2], src[x][1], src[x][0]};
  }
  return out;
}

GrayF read_depth16(const std::string& path, double depth_scale) {
  cv::Mat m = cv::imread(path, cv::IMREAD_UNCHANGED);
  if (m.empty()) fail("cannot read depth image", path);
  if (m.type() != CV_16UC1) fail("depth image is not 16-bit single channel", path);
  GrayF out(m.cols, m.rows);
  const float inv = float(1.0 / depth_scale);
  for (int y = 0; y < m.rows; ++y) {
    const std::uint16_t* src = m.ptr<std::uint16_t>(y);
    float* dst = out.row(y);
    for (int x = 0; x < m.cols; ++x) dst[x] = src[x] * inv;
  }
  return out;
}

void write_rgb8(const std::string& path, const ColorImage& img) {
  cv::Mat m(img.height(), img.width(), CV_8UC3);
  for (int y = 0; y < img.height(); ++y) {
    cv::Vec3b* dst = m.ptr<cv::Vec3b>(y);
    const Rgb8* src = img.row(y);
    for (int x = 0; x < img.width(); ++x) dst[x] = {src[x].b, src[x].g, src[x].r};
  }
  if (!cv::imwrite(path, m)) fail("cannot write image", path);
}

void write_depth16(const std::string& path, const GrayF& depth_m, double depth_scale) {
  cv::Mat m(depth_m.height(), depth_m.width(), CV_16UC1);
  for (int y = 0; y < depth_m.height(); ++y) {
    std::uint16_t* dst = m.ptr<std::uint16_t>(y);
    const float* src = depth_m.row(y);
    for (int x = 0; x < depth_m.width(); ++x) {
      const double raw = src[x] > 0 ? src[x] * depth_scale + 0.5 : 0.0;
      dst[x] = raw >= 65535.0 ? 0 : std::uint16_t(raw);
    }
  }
  if (!cv::imwrite(path, m)) fail("cannot write depth image", path);
}

void write_gray8(const std::string& path, const GrayF& img, float scale) {
  cv::Mat m(img.height(), img.width(), CV_8UC1);
  for (int y = 0; y < img.height(); ++y) {
    std::uint8_t* dst = m.ptr<std::uint8_t>(y);
    const float* src = img.row(y);
    for (int x = 0; x < img.width(); ++x) {
      const float v = src[x] * scale;
      dst[x] = std::uint8_t(std::min(255.0f, std::max(0.0f, v)));
    }
  }
  if (!cv::imwrite(path, m)) fail("cannot write image", path);
}

Rgb8 label_color(std::int32_t label) {
  if (label == 0) return {0, 0, 0};
  // Multiplicative hash keeps nearby labels visually distinct.
  std::uint32_t h = std::uint32_t(label) * 2654435761u;
  return {std::uint8_t(64 + (h & 0xBF)), std::uint8_t(64 + ((h >> 8) & 0xBF)),
          std::uint8_t(64 + ((h >> 16) & 0xBF))};
}

void write_label_colors(const std::string& path, const LabelImage& labels) {
  ColorImage img(labels.width(), labels.height());
  for (std::size_t i = 0; i < labels.size(); ++i) img[i] = label_color(labels[i]);
  write_rgb8(path, img);
}

void write_mask_png(const std::string& path, const Mask& mask) {
  GrayF g(mask.width(), mask.height());
  for (std::size_t i = 0; i < mask.size(); ++i) g[i] = mask[i] ? 1.0f : 0.0f;
  write_gray8(path, g);
}

void write_label16(const std::string& path, const LabelImage& labels) {
  cv::Mat m(labels.height(), labels.width(), CV_16UC1);
  for (int y = 0; y < labels.height(); ++y) {
    std::uint16_t* dst = m.ptr<std::uint16_t>(y);
    for (int x = 0; x < labels.width(); ++x) dst[x] = std::uint16_t(labels(x, y));
  }
  if (!cv::imwrite(path, m)) fail("cannot write label image", path);
}

LabelImage read_label16(const std::string& path) {
  cv::Mat m = cv::imread(path, cv::IMREAD_UNCHANGED);
  if (m.empty() || m.type() != CV_16UC1) fail("cannot read label image", path);
  LabelImage out(m.cols, m.rows);
  for (int y = 0; y < m.rows; ++y) {
    const std::uint16_t* src = m.ptr<std::uint16_t>(y);
    for (int x = 0; x < m.cols; ++x) out(x, y) = src[x];
  }
  return out;
}

}  // namespace dynsurf

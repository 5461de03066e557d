#pragma once

#include <string>

#include "dynsurf/image.hpp"

namespace dynsurf {

ColorImage read_rgb8(const std::string& path);

/// Reads a 16-bit depth PNG and converts raw units to meters via depth_scale.
GrayF read_depth16(const std::string& path, double depth_scale);

void write_rgb8(const std::string& path, const ColorImage& img);
void write_depth16(const std::string& path, const GrayF& depth_m, double depth_scale);
void write_gray8(const std::string& path, const GrayF& img, float scale = 255.0f);
void write_label_colors(const std::string& path, const LabelImage& labels);
void write_mask_png(const std::string& path, const Mask& mask);
void write_label16(const std::string& path, const LabelImage& labels);
LabelImage read_label16(const std::string& path);

/// Distinct stable color per label (label 0 maps to black).
Rgb8 label_color(std::int32_t label);

}  // namespace dynsurf

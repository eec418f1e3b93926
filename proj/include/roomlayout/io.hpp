#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "roomlayout/annotation.hpp"
#include "roomlayout/geometry.hpp"
#include "roomlayout/layout_engine.hpp"
#include "roomlayout/scene_synth.hpp"

namespace roomlayout {

using Rgb = std::array<std::uint8_t, 3>;
using ColorImage = Grid<Rgb>;
using NormalMap = Grid<std::array<double, 3>>;

enum class DepthEncoding {
  Png16Millimeters,  // lossy: depth rounded to whole millimeters
  Float64,           // lossless .rast
};

struct RecordSurface {
  std::int32_t label = 0;
  Semantic semantic = Semantic::Wall;
  SurfaceParams params;

  bool operator==(const RecordSurface&) const = default;
};

// One dataset sample stored as a directory:
//   meta.json            intrinsics, parameter frame, surfaces, corners, file names
//   layout_depth.*       depth of the layout planes (.png or .rast)
//   segmentation.png     8-bit labels, 255 = unassigned
//   original_depth.*     depth including occluders
//   annotations.json     region polygons
//   color.png            optional label coloring
//   normals.rast         optional 3-channel surface normals
struct DatasetRecord {
  std::optional<ColorImage> color;
  DepthMap layout_depth;
  SegmentationMap segmentation;
  DepthMap original_depth;
  std::vector<RegionAnnotation> annotations;
  CameraIntrinsics cam;
  PixelFrame frame;
  std::vector<RecordSurface> surfaces;
  std::vector<Corner> corners;
  std::optional<NormalMap> normals;
  DepthEncoding depth_encoding = DepthEncoding::Float64;

  bool operator==(const DatasetRecord&) const = default;
};

DatasetRecord make_record(const SceneSpec& spec, const RenderedScene& scene,
                          DepthEncoding encoding = DepthEncoding::Float64, bool with_color = true,
                          bool with_normals = true);

// Writes every file atomically (temporary file, then rename).
void write_record(const DatasetRecord& record, const std::filesystem::path& dir);

// Throws MissingField, CorruptRaster or IntrinsicsMismatch naming the file.
DatasetRecord read_record(const std::filesystem::path& dir);

// Rounds to whole millimeters; the only lossy step of the PNG encoding.
DepthMap quantize_millimeters(const DepthMap& depth);

// Binary float raster (.rast): magic "RLRAST\0\1", u32 width, height,
// channels, reserved, f64 parameter unit, one mask byte per pixel, then
// channels * pixels little-endian f64 values in row-major, channel-minor order.
struct FloatRaster {
  int width = 0;
  int height = 0;
  int channels = 1;
  double frame_unit = 1.0;
  std::vector<std::uint8_t> mask;
  std::vector<double> data;

  bool operator==(const FloatRaster&) const = default;
};

std::vector<std::uint8_t> encode_rast(const FloatRaster& raster);
FloatRaster decode_rast(std::span<const std::uint8_t> bytes, const std::string& name);

FloatRaster to_raster(const DepthMap& depth);
FloatRaster to_raster(const ParamMap& params);
FloatRaster to_raster(const NormalMap& normals);
DepthMap depth_from_raster(const FloatRaster& raster, const std::string& name);
ParamMap params_from_raster(const FloatRaster& raster, const std::string& name);
NormalMap normals_from_raster(const FloatRaster& raster, const std::string& name);

std::vector<std::uint8_t> encode_depth_png(const DepthMap& depth);
DepthMap decode_depth_png(std::span<const std::uint8_t> bytes, const std::string& name);
std::vector<std::uint8_t> encode_label_png(const SegmentationMap& seg);
SegmentationMap decode_label_png(std::span<const std::uint8_t> bytes, const std::string& name);
std::vector<std::uint8_t> encode_color_png(const ColorImage& image);
ColorImage decode_color_png(std::span<const std::uint8_t> bytes, const std::string& name);

// File helpers; the depth format follows the extension (.png or .rast).
std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path, const std::string& field);
void write_bytes_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text_atomic(const std::filesystem::path& path, const std::string& text);
DepthMap load_depth(const std::filesystem::path& path);
void save_depth(const std::filesystem::path& path, const DepthMap& depth);
ParamMap load_params(const std::filesystem::path& path);
void save_params(const std::filesystem::path& path, const ParamMap& params);
SegmentationMap load_segmentation(const std::filesystem::path& path);
void save_segmentation(const std::filesystem::path& path, const SegmentationMap& seg);

Rgb label_color(std::int32_t label);
ColorImage colorize(const SegmentationMap& seg);

// Pixel centers align: source x = (x_dst + 0.5) * W_src / W_dst - 0.5.
SegmentationMap resample_nearest(const SegmentationMap& seg, int width, int height);
// Bilinear over valid neighbors only; no valid neighbor leaves the pixel invalid.
DepthMap resample_bilinear(const DepthMap& depth, int width, int height);
// Parameters are re-expressed for the target pixel grid (inverse depth at a
// target pixel equals that at the matching source location), interpolated,
// and renormalized. Normalized frames stay normalized.
ParamMap resample_params(const ParamMap& params, int width, int height);

// ASCII PLY, one vertex per point, RGB from the label palette.
std::string ply_text(std::span<const LabeledPoint> points);

}  // namespace roomlayout

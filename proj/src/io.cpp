#include "roomlayout/io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <csetjmp>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "roomlayout/serialization.hpp"

namespace roomlayout {

namespace fs = std::filesystem;

namespace {

constexpr std::array<std::uint8_t, 8> kRastMagic{'R', 'L', 'R', 'A', 'S', 'T', 0, 1};
constexpr std::uint8_t kSentinelByte = 255;

// ---- libpng glue ----

struct PngError {
  std::string message;
};

void png_error_fn(png_structp png, png_const_charp msg) {
  static_cast<PngError*>(png_get_error_ptr(png))->message = msg;
  png_longjmp(png, 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

void png_write_to_vector(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void png_flush_noop(png_structp) {}

struct PngSource {
  const std::uint8_t* data;
  std::size_t size;
  std::size_t pos;
};

void png_read_from_span(png_structp png, png_bytep out, png_size_t length) {
  auto* src = static_cast<PngSource*>(png_get_io_ptr(png));
  if (src->pos + length > src->size) png_error(png, "unexpected end of data");
  std::memcpy(out, src->data + src->pos, length);
  src->pos += length;
}

struct PngImage {
  int width = 0;
  int height = 0;
  int bit_depth = 0;
  int color_type = 0;
  std::vector<std::uint8_t> bytes;  // packed rows
};

std::vector<std::uint8_t> encode_png(const PngImage& image) {
  std::vector<std::uint8_t> out;
  PngError err;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_error_fn, png_warning_fn);
  if (!png) fail(ErrorCode::InvalidArgument, "cannot allocate PNG writer");
  png_infop info = png_create_info_struct(png);
  const int channels = image.color_type == PNG_COLOR_TYPE_RGB ? 3 : 1;
  const std::size_t stride =
      static_cast<std::size_t>(image.width) * channels * (image.bit_depth / 8);
  std::vector<png_bytep> rows(image.height);
  for (int r = 0; r < image.height; ++r) {
    rows[r] = const_cast<png_bytep>(image.bytes.data() + r * stride);
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorCode::InvalidArgument, "PNG encoding failed: " + err.message);
  }
  png_set_write_fn(png, &out, png_write_to_vector, png_flush_noop);
  png_set_IHDR(png, info, image.width, image.height, image.bit_depth, image.color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

PngImage decode_png(std::span<const std::uint8_t> bytes, const std::string& name) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
    fail(ErrorCode::CorruptRaster, name + ": not a PNG file");
  }
  PngImage image;
  PngError err;
  PngSource src{bytes.data(), bytes.size(), 0};
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_error_fn, png_warning_fn);
  if (!png) fail(ErrorCode::CorruptRaster, name + ": cannot allocate PNG reader");
  png_infop info = png_create_info_struct(png);
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorCode::CorruptRaster, name + ": " + err.message);
  }
  png_set_read_fn(png, &src, png_read_from_span);
  png_read_info(png, info);
  image.width = static_cast<int>(png_get_image_width(png, info));
  image.height = static_cast<int>(png_get_image_height(png, info));
  image.bit_depth = png_get_bit_depth(png, info);
  image.color_type = png_get_color_type(png, info);
  if (png_get_interlace_type(png, info) != PNG_INTERLACE_NONE) {
    png_error(png, "interlaced images are not supported");
  }
  const std::size_t stride = png_get_rowbytes(png, info);
  image.bytes.resize(stride * image.height);
  rows.resize(image.height);
  for (int r = 0; r < image.height; ++r) rows[r] = image.bytes.data() + r * stride;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return image;
}

// ---- little-endian helpers ----

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t x) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(x >> (8 * k)));
}

void put_f64(std::vector<std::uint8_t>& out, double x) {
  const auto bits = std::bit_cast<std::uint64_t>(x);
  for (int k = 0; k < 8; ++k) out.push_back(static_cast<std::uint8_t>(bits >> (8 * k)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t pos) {
  std::uint32_t x = 0;
  for (int k = 0; k < 4; ++k) x |= static_cast<std::uint32_t>(in[pos + k]) << (8 * k);
  return x;
}

double get_f64(std::span<const std::uint8_t> in, std::size_t pos) {
  std::uint64_t x = 0;
  for (int k = 0; k < 8; ++k) x |= static_cast<std::uint64_t>(in[pos + k]) << (8 * k);
  return std::bit_cast<double>(x);
}

std::string depth_encoding_name(DepthEncoding e) {
  return e == DepthEncoding::Png16Millimeters ? "png16_mm" : "float64";
}

DepthEncoding depth_encoding_from(const std::string& name) {
  if (name == "png16_mm") return DepthEncoding::Png16Millimeters;
  if (name == "float64") return DepthEncoding::Float64;
  fail(ErrorCode::InvalidArgument, "unknown depth encoding '" + name + "'");
}

template <typename T>
void check_raster_size(const Grid<T>& g, const CameraIntrinsics& cam, const std::string& name) {
  if (!g.same_shape(cam.width, cam.height)) {
    fail(ErrorCode::IntrinsicsMismatch,
         name + ": raster is " + std::to_string(g.width()) + "x" + std::to_string(g.height()) +
             " but intrinsics declare " + std::to_string(cam.width) + "x" +
             std::to_string(cam.height));
  }
}

DepthMap load_depth_as(const fs::path& path, const std::string& field) {
  const auto bytes = read_bytes(path, field);
  const std::string name = path.string();
  if (path.extension() == ".png") return decode_depth_png(bytes, name);
  if (path.extension() == ".rast") return depth_from_raster(decode_rast(bytes, name), name);
  fail(ErrorCode::InvalidArgument, name + ": depth files must end in .png or .rast");
}

Json parse_json(const fs::path& path, const std::string& field) {
  const auto bytes = read_bytes(path, field);
  try {
    return Json::parse(bytes.begin(), bytes.end());
  } catch (const Json::exception& e) {
    fail(ErrorCode::CorruptRaster, path.string() + ": invalid JSON (" + e.what() + ")");
  }
}

// Bilinear taps for one target coordinate.
struct Taps {
  int i0, i1;
  double w0, w1;
};

Taps taps(int dst, int src_len, int dst_len) {
  const double x = (dst + 0.5) * static_cast<double>(src_len) / dst_len - 0.5;
  const double fl = std::floor(x);
  const double f = x - fl;
  const int i0 = std::clamp(static_cast<int>(fl), 0, src_len - 1);
  const int i1 = std::clamp(static_cast<int>(fl) + 1, 0, src_len - 1);
  return {i0, i1, 1.0 - f, f};
}

void check_target(int width, int height) {
  if (width < 1 || height < 1) fail(ErrorCode::InvalidArgument, "target size must be positive");
}

}  // namespace

// ---- rasters ----

std::vector<std::uint8_t> encode_rast(const FloatRaster& r) {
  const std::size_t n = static_cast<std::size_t>(r.width) * r.height;
  if (r.mask.size() != n || r.data.size() != n * r.channels) {
    fail(ErrorCode::InvalidArgument, "raster buffers do not match its dimensions");
  }
  std::vector<std::uint8_t> out(kRastMagic.begin(), kRastMagic.end());
  put_u32(out, static_cast<std::uint32_t>(r.width));
  put_u32(out, static_cast<std::uint32_t>(r.height));
  put_u32(out, static_cast<std::uint32_t>(r.channels));
  put_u32(out, 0);
  put_f64(out, r.frame_unit);
  for (auto m : r.mask) out.push_back(m ? 1 : 0);
  for (double x : r.data) put_f64(out, x);
  return out;
}

FloatRaster decode_rast(std::span<const std::uint8_t> bytes, const std::string& name) {
  constexpr std::size_t kHeader = 8 + 16 + 8;
  if (bytes.size() < kHeader || !std::equal(kRastMagic.begin(), kRastMagic.end(), bytes.begin())) {
    fail(ErrorCode::CorruptRaster, name + ": bad raster header");
  }
  FloatRaster r;
  r.width = static_cast<int>(get_u32(bytes, 8));
  r.height = static_cast<int>(get_u32(bytes, 12));
  r.channels = static_cast<int>(get_u32(bytes, 16));
  r.frame_unit = get_f64(bytes, 24);
  if (r.width < 0 || r.height < 0 || r.channels < 1 || r.channels > 64 ||
      !(r.frame_unit > 0.0)) {
    fail(ErrorCode::CorruptRaster, name + ": bad raster header");
  }
  const std::size_t n = static_cast<std::size_t>(r.width) * r.height;
  if (bytes.size() != kHeader + n + 8 * n * r.channels) {
    fail(ErrorCode::CorruptRaster, name + ": size does not match the header");
  }
  r.mask.assign(bytes.begin() + kHeader, bytes.begin() + kHeader + n);
  r.data.resize(n * r.channels);
  for (std::size_t k = 0; k < r.data.size(); ++k) r.data[k] = get_f64(bytes, kHeader + n + 8 * k);
  return r;
}

FloatRaster to_raster(const DepthMap& depth) {
  FloatRaster r{depth.width(), depth.height(), 1, 1.0, {}, {}};
  for (std::size_t i = 0; i < depth.size(); ++i) {
    r.mask.push_back(depth.valid(i));
    r.data.push_back(depth[i]);
  }
  return r;
}

FloatRaster to_raster(const ParamMap& params) {
  FloatRaster r{params.width(), params.height(), 4, params.frame.unit, {}, {}};
  for (std::size_t i = 0; i < params.size(); ++i) {
    r.mask.push_back(params.valid(i));
    for (double x : params[i].as_array()) r.data.push_back(x);
  }
  return r;
}

FloatRaster to_raster(const NormalMap& normals) {
  FloatRaster r{normals.width(), normals.height(), 3, 1.0, {}, {}};
  for (std::size_t i = 0; i < normals.size(); ++i) {
    r.mask.push_back(1);
    for (double x : normals[i]) r.data.push_back(x);
  }
  return r;
}

DepthMap depth_from_raster(const FloatRaster& r, const std::string& name) {
  if (r.channels != 1) fail(ErrorCode::CorruptRaster, name + ": depth raster needs 1 channel");
  DepthMap out(r.width, r.height, 0.0, false);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = r.data[i];
    out.set_valid(i, r.mask[i] != 0);
  }
  return out;
}

ParamMap params_from_raster(const FloatRaster& r, const std::string& name) {
  if (r.channels != 4) fail(ErrorCode::CorruptRaster, name + ": parameter raster needs 4 channels");
  ParamMap out(r.width, r.height, PixelFrame{r.frame_unit}, SurfaceParams{}, false);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = {r.data[4 * i], r.data[4 * i + 1], r.data[4 * i + 2], r.data[4 * i + 3]};
    out.set_valid(i, r.mask[i] != 0);
  }
  return out;
}

NormalMap normals_from_raster(const FloatRaster& r, const std::string& name) {
  if (r.channels != 3) fail(ErrorCode::CorruptRaster, name + ": normal raster needs 3 channels");
  NormalMap out(r.width, r.height, {0.0, 0.0, 0.0});
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = {r.data[3 * i], r.data[3 * i + 1], r.data[3 * i + 2]};
  }
  return out;
}

DepthMap quantize_millimeters(const DepthMap& depth) {
  DepthMap out = depth;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!out.valid(i)) {
      out[i] = 0.0;
      continue;
    }
    const double mm = std::round(depth[i] * 1000.0);
    if (!(mm >= 1.0 && mm <= 65535.0)) {
      fail(ErrorCode::InvalidArgument,
           "depth " + std::to_string(depth[i]) + " m is outside the 16-bit millimeter range");
    }
    out[i] = mm / 1000.0;
  }
  return out;
}

std::vector<std::uint8_t> encode_depth_png(const DepthMap& depth) {
  const auto q = quantize_millimeters(depth);
  PngImage image{depth.width(), depth.height(), 16, PNG_COLOR_TYPE_GRAY, {}};
  image.bytes.reserve(2 * q.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    const auto mm = q.valid(i) ? static_cast<std::uint16_t>(std::lround(q[i] * 1000.0)) : 0;
    image.bytes.push_back(static_cast<std::uint8_t>(mm >> 8));
    image.bytes.push_back(static_cast<std::uint8_t>(mm & 0xff));
  }
  return encode_png(image);
}

DepthMap decode_depth_png(std::span<const std::uint8_t> bytes, const std::string& name) {
  const auto image = decode_png(bytes, name);
  if (image.bit_depth != 16 || image.color_type != PNG_COLOR_TYPE_GRAY) {
    fail(ErrorCode::CorruptRaster, name + ": depth PNG must be 16-bit grayscale");
  }
  DepthMap out(image.width, image.height, 0.0, false);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const unsigned mm = (static_cast<unsigned>(image.bytes[2 * i]) << 8) | image.bytes[2 * i + 1];
    out[i] = mm / 1000.0;
    out.set_valid(i, mm != 0);
  }
  return out;
}

std::vector<std::uint8_t> encode_label_png(const SegmentationMap& seg) {
  PngImage image{seg.width(), seg.height(), 8, PNG_COLOR_TYPE_GRAY, {}};
  image.bytes.reserve(seg.size());
  for (auto label : seg.values()) {
    if (label == kUnassigned) {
      image.bytes.push_back(kSentinelByte);
    } else if (label < 0 || label >= kSentinelByte) {
      fail(ErrorCode::InvalidArgument, "label " + std::to_string(label) + " does not fit 8 bits");
    } else {
      image.bytes.push_back(static_cast<std::uint8_t>(label));
    }
  }
  return encode_png(image);
}

SegmentationMap decode_label_png(std::span<const std::uint8_t> bytes, const std::string& name) {
  const auto image = decode_png(bytes, name);
  if (image.bit_depth != 8 || image.color_type != PNG_COLOR_TYPE_GRAY) {
    fail(ErrorCode::CorruptRaster, name + ": segmentation PNG must be 8-bit grayscale");
  }
  SegmentationMap out(image.width, image.height, kUnassigned);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = image.bytes[i] == kSentinelByte ? kUnassigned : image.bytes[i];
  }
  return out;
}

std::vector<std::uint8_t> encode_color_png(const ColorImage& color) {
  PngImage image{color.width(), color.height(), 8, PNG_COLOR_TYPE_RGB, {}};
  image.bytes.reserve(3 * color.size());
  for (const auto& px : color.values()) image.bytes.insert(image.bytes.end(), px.begin(), px.end());
  return encode_png(image);
}

ColorImage decode_color_png(std::span<const std::uint8_t> bytes, const std::string& name) {
  const auto image = decode_png(bytes, name);
  if (image.bit_depth != 8 || image.color_type != PNG_COLOR_TYPE_RGB) {
    fail(ErrorCode::CorruptRaster, name + ": color PNG must be 8-bit RGB");
  }
  ColorImage out(image.width, image.height, Rgb{0, 0, 0});
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = {image.bytes[3 * i], image.bytes[3 * i + 1], image.bytes[3 * i + 2]};
  }
  return out;
}

// ---- files ----

std::vector<std::uint8_t> read_bytes(const fs::path& path, const std::string& field) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::MissingField, field + ": " + path.string() + " not found");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes_atomic(const fs::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::InvalidArgument, "cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorCode::InvalidArgument, "cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  write_bytes_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

DepthMap load_depth(const fs::path& path) { return load_depth_as(path, "depth"); }

void save_depth(const fs::path& path, const DepthMap& depth) {
  if (path.extension() == ".png") {
    write_bytes_atomic(path, encode_depth_png(depth));
  } else if (path.extension() == ".rast") {
    write_bytes_atomic(path, encode_rast(to_raster(depth)));
  } else {
    fail(ErrorCode::InvalidArgument, path.string() + ": depth files must end in .png or .rast");
  }
}

ParamMap load_params(const fs::path& path) {
  return params_from_raster(decode_rast(read_bytes(path, "params"), path.string()), path.string());
}

void save_params(const fs::path& path, const ParamMap& params) {
  write_bytes_atomic(path, encode_rast(to_raster(params)));
}

SegmentationMap load_segmentation(const fs::path& path) {
  return decode_label_png(read_bytes(path, "segmentation"), path.string());
}

void save_segmentation(const fs::path& path, const SegmentationMap& seg) {
  write_bytes_atomic(path, encode_label_png(seg));
}

// ---- records ----

Rgb label_color(std::int32_t label) {
  static constexpr std::array<Rgb, 12> kPalette{{{230, 25, 75},
                                                 {60, 180, 75},
                                                 {255, 225, 25},
                                                 {0, 130, 200},
                                                 {245, 130, 48},
                                                 {145, 30, 180},
                                                 {70, 240, 240},
                                                 {240, 50, 230},
                                                 {210, 245, 60},
                                                 {250, 190, 212},
                                                 {0, 128, 128},
                                                 {170, 110, 40}}};
  if (label < 0) return {128, 128, 128};
  return kPalette[static_cast<std::size_t>(label) % kPalette.size()];
}

ColorImage colorize(const SegmentationMap& seg) {
  ColorImage out(seg.width(), seg.height(), Rgb{0, 0, 0});
  for (std::size_t i = 0; i < seg.size(); ++i) out[i] = label_color(seg[i]);
  return out;
}

DatasetRecord make_record(const SceneSpec& spec, const RenderedScene& scene, DepthEncoding encoding,
                          bool with_color, bool with_normals) {
  DatasetRecord r;
  r.depth_encoding = encoding;
  const bool png = encoding == DepthEncoding::Png16Millimeters;
  r.layout_depth = png ? quantize_millimeters(scene.layout_depth) : scene.layout_depth;
  r.original_depth = png ? quantize_millimeters(scene.original_depth) : scene.original_depth;
  r.segmentation = scene.segmentation;
  r.annotations = region_annotations(spec, scene.segmentation);
  r.cam = spec.cam;
  r.frame = spec.frame;
  const auto params = spec.surface_params();
  for (const auto& s : spec.surfaces) r.surfaces.push_back({s.label, s.semantic, params[s.label]});
  r.corners = spec.gt_corners;
  if (with_color) r.color = colorize(scene.segmentation);
  if (with_normals) r.normals = surface_normals(spec, scene.segmentation);
  return r;
}

void write_record(const DatasetRecord& r, const fs::path& dir) {
  r.cam.validate();
  check_raster_size(r.layout_depth, r.cam, "layout depth");
  check_raster_size(r.original_depth, r.cam, "original depth");
  check_raster_size(r.segmentation, r.cam, "segmentation");
  if (r.color) check_raster_size(*r.color, r.cam, "color");
  if (r.normals) check_raster_size(*r.normals, r.cam, "normals");
  fs::create_directories(dir);

  const bool png = r.depth_encoding == DepthEncoding::Png16Millimeters;
  const std::string ext = png ? ".png" : ".rast";
  Json files = {{"depth", "layout_depth" + ext},
                {"original_depth", "original_depth" + ext},
                {"segmentation", "segmentation.png"},
                {"annotations", "annotations.json"}};
  save_depth(dir / ("layout_depth" + ext), r.layout_depth);
  save_depth(dir / ("original_depth" + ext), r.original_depth);
  save_segmentation(dir / "segmentation.png", r.segmentation);
  Json regions = Json::array();
  for (const auto& a : r.annotations) regions.push_back(to_json(a));
  write_text_atomic(dir / "annotations.json", Json{{"regions", regions}}.dump(2) + "\n");
  if (r.color) {
    files["color"] = "color.png";
    write_bytes_atomic(dir / "color.png", encode_color_png(*r.color));
  }
  if (r.normals) {
    files["normals"] = "normals.rast";
    write_bytes_atomic(dir / "normals.rast", encode_rast(to_raster(*r.normals)));
  }

  Json surfaces = Json::array();
  for (const auto& s : r.surfaces) {
    Json j = to_json(s.params);
    j["label"] = s.label;
    j["semantic"] = to_string(s.semantic);
    surfaces.push_back(j);
  }
  Json corners = Json::array();
  for (const auto& c : r.corners) corners.push_back(to_json(c));
  const Json meta = {{"format", "roomlayout-record"},
                     {"version", 1},
                     {"intrinsics", to_json(r.cam)},
                     {"param_unit_px", r.frame.unit},
                     {"depth_encoding", depth_encoding_name(r.depth_encoding)},
                     {"surfaces", surfaces},
                     {"corners", corners},
                     {"files", files}};
  write_text_atomic(dir / "meta.json", meta.dump(2) + "\n");
}

DatasetRecord read_record(const fs::path& dir) {
  const Json meta = parse_json(dir / "meta.json", "meta");
  const std::string ctx = (dir / "meta.json").string();
  DatasetRecord r;
  r.cam = intrinsics_from_json(require(meta, "intrinsics", ctx), ctx);
  try {
    r.cam.validate();
  } catch (const Error& e) {
    fail(ErrorCode::IntrinsicsMismatch, ctx + ": " + e.what());
  }
  r.frame = PixelFrame{require(meta, "param_unit_px", ctx).get<double>()};
  if (!(r.frame.unit > 0.0)) fail(ErrorCode::InvalidArgument, ctx + ": param_unit_px must be positive");
  r.depth_encoding = depth_encoding_from(require(meta, "depth_encoding", ctx).get<std::string>());
  const Json& files = require(meta, "files", ctx);
  auto file_of = [&](const char* field) {
    if (!files.contains(field)) fail(ErrorCode::MissingField, std::string(field) + " (in " + ctx + ")");
    return dir / files.at(field).get<std::string>();
  };

  const auto depth_path = file_of("depth");
  r.layout_depth = load_depth_as(depth_path, "depth");
  check_raster_size(r.layout_depth, r.cam, depth_path.string());
  const auto orig_path = file_of("original_depth");
  r.original_depth = load_depth_as(orig_path, "original_depth");
  check_raster_size(r.original_depth, r.cam, orig_path.string());
  const auto seg_path = file_of("segmentation");
  r.segmentation = decode_label_png(read_bytes(seg_path, "segmentation"), seg_path.string());
  check_raster_size(r.segmentation, r.cam, seg_path.string());
  const auto ann_path = file_of("annotations");
  r.annotations = annotations_from_json(parse_json(ann_path, "annotations"), ann_path.string());
  if (files.contains("color")) {
    const auto p = file_of("color");
    r.color = decode_color_png(read_bytes(p, "color"), p.string());
    check_raster_size(*r.color, r.cam, p.string());
  }
  if (files.contains("normals")) {
    const auto p = file_of("normals");
    r.normals = normals_from_raster(decode_rast(read_bytes(p, "normals"), p.string()), p.string());
    check_raster_size(*r.normals, r.cam, p.string());
  }
  for (const auto& s : require(meta, "surfaces", ctx)) {
    RecordSurface surface;
    surface.label = require(s, "label", ctx).get<std::int32_t>();
    surface.semantic = semantic_from_string(require(s, "semantic", ctx).get<std::string>());
    surface.params = surface_params_from_json(s, ctx);
    r.surfaces.push_back(surface);
  }
  for (const auto& c : require(meta, "corners", ctx)) r.corners.push_back(corner_from_json(c, ctx));
  return r;
}

// ---- resampling ----

SegmentationMap resample_nearest(const SegmentationMap& seg, int width, int height) {
  check_target(width, height);
  if (seg.same_shape(width, height)) return seg;
  SegmentationMap out(width, height, kUnassigned);
  for (int row = 0; row < height; ++row) {
    const double y = (row + 0.5) * seg.height() / height - 0.5;
    const int sr = std::clamp(static_cast<int>(std::floor(y + 0.5)), 0, seg.height() - 1);
    for (int col = 0; col < width; ++col) {
      const double x = (col + 0.5) * seg.width() / width - 0.5;
      const int sc = std::clamp(static_cast<int>(std::floor(x + 0.5)), 0, seg.width() - 1);
      out.at(col, row) = seg.at(sc, sr);
    }
  }
  return out;
}

DepthMap resample_bilinear(const DepthMap& depth, int width, int height) {
  check_target(width, height);
  if (depth.same_shape(width, height)) return depth;
  DepthMap out(width, height, 0.0, false);
  for (int row = 0; row < height; ++row) {
    const auto ty = taps(row, depth.height(), height);
    for (int col = 0; col < width; ++col) {
      const auto tx = taps(col, depth.width(), width);
      double sum = 0.0;
      double wsum = 0.0;
      for (const auto& [r, wy] : {std::pair{ty.i0, ty.w0}, std::pair{ty.i1, ty.w1}}) {
        for (const auto& [c, wx] : {std::pair{tx.i0, tx.w0}, std::pair{tx.i1, tx.w1}}) {
          const double w = wx * wy;
          if (w == 0.0 || !depth.valid(c, r)) continue;
          sum += w * depth.at(c, r);
          wsum += w;
        }
      }
      if (wsum > 0.0) {
        const auto i = out.index(col, row);
        out[i] = sum / wsum;
        out.set_valid(i, true);
      }
    }
  }
  return out;
}

ParamMap resample_params(const ParamMap& params, int width, int height) {
  check_target(width, height);
  if (params.same_shape(width, height)) return params;
  const int ws = params.width();
  const int hs = params.height();
  const double us = params.frame.unit;
  const PixelFrame target = params.frame == PixelFrame::normalized(ws, hs)
                                ? PixelFrame::normalized(width, height)
                                : params.frame;
  const double ud = target.unit;
  const double ax = static_cast<double>(ws) / width;
  const double ay = static_cast<double>(hs) / height;
  const double bx = 0.5 * ax - 0.5;
  const double by = 0.5 * ay - 0.5;

  // Raw parameters of every source pixel expressed in target coordinates.
  Grid<std::array<double, 3>> raw(ws, hs, {0.0, 0.0, 0.0});
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto p = params[i].raw();
    raw[i] = {p.p_hat * ax * ud / us, p.q_hat * ay * ud / us,
              p.r_hat + (p.p_hat * bx + p.q_hat * by) / us};
  }

  ParamMap out(width, height, target, SurfaceParams{}, false);
  for (int row = 0; row < height; ++row) {
    const auto ty = taps(row, hs, height);
    for (int col = 0; col < width; ++col) {
      const auto tx = taps(col, ws, width);
      std::array<double, 3> sum{0.0, 0.0, 0.0};
      double wsum = 0.0;
      for (const auto& [r, wy] : {std::pair{ty.i0, ty.w0}, std::pair{ty.i1, ty.w1}}) {
        for (const auto& [c, wx] : {std::pair{tx.i0, tx.w0}, std::pair{tx.i1, tx.w1}}) {
          const double w = wx * wy;
          if (w == 0.0 || !params.valid(c, r)) continue;
          for (int k = 0; k < 3; ++k) sum[k] += w * raw.at(c, r)[k];
          wsum += w;
        }
      }
      if (!(wsum > 0.0)) continue;
      const double n = std::sqrt(sum[0] * sum[0] + sum[1] * sum[1] + sum[2] * sum[2]) / wsum;
      if (!(n > 1e-12)) continue;
      const auto i = out.index(col, row);
      out[i] = normalize({sum[0] / wsum, sum[1] / wsum, sum[2] / wsum});
      out.set_valid(i, true);
    }
  }
  return out;
}

// ---- point clouds ----

std::string ply_text(std::span<const LabeledPoint> points) {
  std::ostringstream out;
  out.precision(9);
  out << "ply\nformat ascii 1.0\nelement vertex " << points.size()
      << "\nproperty float x\nproperty float y\nproperty float z\n"
         "property uchar red\nproperty uchar green\nproperty uchar blue\n"
         "property int label\nend_header\n";
  for (const auto& p : points) {
    const auto c = label_color(p.label);
    out << p.point.x << ' ' << p.point.y << ' ' << p.point.z << ' ' << int{c[0]} << ' '
        << int{c[1]} << ' ' << int{c[2]} << ' ' << p.label << '\n';
  }
  return out.str();
}

}  // namespace roomlayout

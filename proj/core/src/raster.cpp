#include "leafsev/raster.hpp"

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstring>
#include <stdexcept>
#include <string>

#include <jpeglib.h>
#include <png.h>

#include "leafsev/errors.hpp"

namespace leafsev {

RasterImage::RasterImage(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b)
    : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3) {
  for (std::size_t i = 0; i < data.size(); i += 3) {
    data[i] = r;
    data[i + 1] = g;
    data[i + 2] = b;
  }
}

namespace {

std::uint8_t composite_over_white(std::uint8_t c, std::uint8_t a) {
  // round((c*a + 255*(255-a)) / 255)
  const unsigned v = static_cast<unsigned>(c) * a + 255u * (255u - a);
  return static_cast<std::uint8_t>((v + 127u) / 255u);
}

// ---------------------------------------------------------------- PNG

struct PngReader {
  const std::uint8_t* data;
  std::size_t size;
  std::size_t offset;
  std::string error;
};

void png_read_fn(png_structp png, png_bytep out, png_size_t len) {
  auto* rd = static_cast<PngReader*>(png_get_io_ptr(png));
  if (rd->offset + len > rd->size) {
    png_error(png, "unexpected end of stream");
  }
  std::memcpy(out, rd->data + rd->offset, len);
  rd->offset += len;
}

void png_error_fn(png_structp png, png_const_charp msg) {
  auto* rd = static_cast<PngReader*>(png_get_error_ptr(png));
  if (rd) rd->error = msg;
  png_longjmp(png, 1);
}

void png_warn_fn(png_structp, png_const_charp) {}

RasterImage decode_png(std::span<const std::uint8_t> bytes) {
  PngReader rd{bytes.data(), bytes.size(), 0, {}};

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &rd, png_error_fn, png_warn_fn);
  if (!png) throw std::runtime_error("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw std::runtime_error("png_create_info_struct failed");
  }

  // Declared before setjmp so longjmp never skips their construction.
  std::vector<std::uint8_t> raw;
  std::vector<png_bytep> rows;
  RasterImage img;
  int channels = 0;

  if (setjmp(png_jmpbuf(png))) {
    const std::size_t off = rd.offset;
    const std::string msg = rd.error.empty() ? "corrupt PNG stream" : rd.error;
    png_destroy_read_struct(&png, &info, nullptr);
    throw DecodeError("PNG decode failed: " + msg, off);
  }

  png_set_read_fn(png, &rd, png_read_fn);
  png_read_info(png, info);

  const png_byte depth = png_get_bit_depth(png, info);
  const png_byte color = png_get_color_type(png, info);
  if (depth == 16) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("16-bit PNG not supported");
  }

  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) {
    png_set_gray_to_rgb(png);
  }
  if (depth < 8) png_set_packing(png);
  png_set_interlace_handling(png);
  png_read_update_info(png, info);

  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  channels = png_get_channels(png, info);
  if (channels != 3 && channels != 4) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("unsupported PNG channel layout");
  }

  raw.resize(static_cast<std::size_t>(w) * h * channels);
  rows.resize(h);
  for (png_uint_32 y = 0; y < h; ++y) {
    rows[y] = raw.data() + static_cast<std::size_t>(y) * w * channels;
  }
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  img.width = static_cast<int>(w);
  img.height = static_cast<int>(h);
  img.data.resize(static_cast<std::size_t>(w) * h * 3);
  if (channels == 3) {
    img.data = std::move(raw);
  } else {
    const std::uint8_t* src = raw.data();
    std::uint8_t* dst = img.data.data();
    for (std::size_t i = 0, n = static_cast<std::size_t>(w) * h; i < n; ++i) {
      const std::uint8_t a = src[3];
      dst[0] = composite_over_white(src[0], a);
      dst[1] = composite_over_white(src[1], a);
      dst[2] = composite_over_white(src[2], a);
      src += 4;
      dst += 3;
    }
  }
  return img;
}

struct PngWriter {
  std::vector<std::uint8_t>* out;
};

void png_write_fn(png_structp png, png_bytep data, png_size_t len) {
  auto* wr = static_cast<PngWriter*>(png_get_io_ptr(png));
  wr->out->insert(wr->out->end(), data, data + len);
}

void png_flush_fn(png_structp) {}

// ---------------------------------------------------------------- JPEG

struct JpegErrorMgr {
  jpeg_error_mgr pub;
  jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  longjmp(err->jump, 1);
}

RasterImage decode_jpeg(std::span<const std::uint8_t> bytes) {
  jpeg_decompress_struct cinfo;
  JpegErrorMgr jerr;
  cinfo.err = jpeg_std_error(&jerr.pub);
  jerr.pub.error_exit = jpeg_error_exit;
  jerr.message[0] = '\0';

  RasterImage img;

  if (setjmp(jerr.jump)) {
    std::size_t off = bytes.size();
    if (cinfo.src && cinfo.src->next_input_byte) {
      off = static_cast<std::size_t>(cinfo.src->next_input_byte - bytes.data());
    }
    jpeg_destroy_decompress(&cinfo);
    throw DecodeError(std::string("JPEG decode failed: ") + jerr.message, off);
  }

  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, const_cast<unsigned char*>(bytes.data()),
               static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);

  img.width = static_cast<int>(cinfo.output_width);
  img.height = static_cast<int>(cinfo.output_height);
  img.data.resize(img.pixel_count() * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = img.data.data() + static_cast<std::size_t>(cinfo.output_scanline) * img.width * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return img;
}

// ---------------------------------------------------------------- PPM (P6)

RasterImage decode_ppm(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 2;  // past "P6"
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      const char c = static_cast<char>(bytes[pos]);
      if (c == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&]() -> long {
    skip_space();
    if (pos >= bytes.size() || bytes[pos] < '0' || bytes[pos] > '9') {
      throw DecodeError("PPM decode failed: expected integer in header", pos);
    }
    long v = 0;
    while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') {
      v = v * 10 + (bytes[pos] - '0');
      if (v > 1'000'000'000L) throw DecodeError("PPM decode failed: header value out of range", pos);
      ++pos;
    }
    return v;
  };

  const long w = read_int();
  const long h = read_int();
  const long maxval = read_int();
  if (w < 1 || h < 1) throw DecodeError("PPM decode failed: bad dimensions", pos);
  if (maxval > 255) throw FormatError("PPM with maxval > 255 not supported");
  if (maxval < 1) throw DecodeError("PPM decode failed: bad maxval", pos);
  if (pos >= bytes.size()) throw DecodeError("PPM decode failed: truncated header", pos);
  ++pos;  // single whitespace byte between maxval and raster data

  const std::size_t need = static_cast<std::size_t>(w) * h * 3;
  if (bytes.size() - pos < need) {
    throw DecodeError("PPM decode failed: truncated pixel data", bytes.size());
  }
  RasterImage img(static_cast<int>(w), static_cast<int>(h));
  std::memcpy(img.data.data(), bytes.data() + pos, need);
  if (maxval != 255) {
    for (auto& v : img.data) {
      v = static_cast<std::uint8_t>((static_cast<long>(v) * 255 + maxval / 2) / maxval);
    }
  }
  return img;
}

}  // namespace

RasterImage decode_image(std::span<const std::uint8_t> bytes) {
  static const std::uint8_t png_sig[8] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), png_sig, 8) == 0) {
    return decode_png(bytes);
  }
  if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF) {
    return decode_jpeg(bytes);
  }
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') {
    return decode_ppm(bytes);
  }
  throw FormatError("unsupported image format (expected PNG, JPEG, or PPM P6)");
}

std::vector<std::uint8_t> encode_png(const RasterImage& img) {
  if (img.width < 1 || img.height < 1) throw std::invalid_argument("encode_png: empty image");
  if (img.data.size() != img.pixel_count() * 3) {
    throw std::invalid_argument("encode_png: pixel buffer does not match dimensions");
  }

  std::vector<std::uint8_t> out;
  PngWriter wr{&out};

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw std::runtime_error("png_create_info_struct failed");
  }

  std::vector<png_bytep> rows(img.height);
  for (int y = 0; y < img.height; ++y) {
    rows[y] = const_cast<png_bytep>(img.pixel(0, y));
  }

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("PNG encode failed");
  }

  png_set_write_fn(png, &wr, png_write_fn, png_flush_fn);
  png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, info);
  png_destroy_write_struct(&png, &info);
  return out;
}

RasterImage resize_bilinear(const RasterImage& img, int target_w, int target_h) {
  if (target_w < 1 || target_h < 1) {
    throw std::invalid_argument("resize_bilinear: target dimensions must be >= 1");
  }
  if (img.width < 1 || img.height < 1) {
    throw std::invalid_argument("resize_bilinear: empty source image");
  }
  if (target_w == img.width && target_h == img.height) return img;

  RasterImage out(target_w, target_h);
  const double sx = static_cast<double>(img.width) / target_w;
  const double sy = static_cast<double>(img.height) / target_h;

  for (int y = 0; y < target_h; ++y) {
    double fy = (y + 0.5) * sy - 0.5;
    fy = std::clamp(fy, 0.0, static_cast<double>(img.height - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double ty = fy - y0;
    for (int x = 0; x < target_w; ++x) {
      double fx = (x + 0.5) * sx - 0.5;
      fx = std::clamp(fx, 0.0, static_cast<double>(img.width - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, img.width - 1);
      const double tx = fx - x0;

      const std::uint8_t* p00 = img.pixel(x0, y0);
      const std::uint8_t* p01 = img.pixel(x1, y0);
      const std::uint8_t* p10 = img.pixel(x0, y1);
      const std::uint8_t* p11 = img.pixel(x1, y1);
      std::uint8_t* dst = out.pixel(x, y);
      for (int c = 0; c < 3; ++c) {
        // two-stage lerp keeps constants and identity targets exact
        const double top = p00[c] + tx * (p01[c] - p00[c]);
        const double bot = p10[c] + tx * (p11[c] - p10[c]);
        const double v = top + ty * (bot - top);
        dst[c] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
      }
    }
  }
  return out;
}

ScalarPlane value_channel(const RasterImage& img) {
  ScalarPlane plane;
  plane.width = img.width;
  plane.height = img.height;
  plane.data.resize(img.pixel_count());
  const std::uint8_t* src = img.data.data();
  for (std::size_t i = 0; i < plane.data.size(); ++i, src += 3) {
    const std::uint8_t m = std::max(src[0], std::max(src[1], src[2]));
    plane.data[i] = m / 255.0;
  }
  return plane;
}

}  // namespace leafsev

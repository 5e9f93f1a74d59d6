#include "attrictrl/png_io.hpp"

#include <png.h>

#include <csetjmp>
#include <cstring>
#include <string>

#include "attrictrl/error.hpp"
#include "attrictrl/io.hpp"

namespace attrictrl {

namespace {

enum class Status { kOk, kMalformed, kUnsupported };

struct ReadState {
  const std::uint8_t* data = nullptr;
  std::size_t size = 0;
  std::size_t offset = 0;
  char message[256] = {};
  Status status = Status::kOk;
  png_uint_32 width = 0;
  png_uint_32 height = 0;
  std::vector<std::uint8_t> rgb;
};

void on_read_error(png_structp png, png_const_charp msg) {
  auto* st = static_cast<ReadState*>(png_get_error_ptr(png));
  std::strncpy(st->message, msg, sizeof(st->message) - 1);
  st->status = Status::kMalformed;
  png_longjmp(png, 1);
}

void on_warning(png_structp, png_const_charp) {}

void read_from_memory(png_structp png, png_bytep out, png_size_t length) {
  auto* st = static_cast<ReadState*>(png_get_io_ptr(png));
  if (length > st->size - st->offset) {
    png_error(png, "unexpected end of data");
  }
  std::memcpy(out, st->data + st->offset, length);
  st->offset += length;
}

// No objects with non-trivial destructors live in this frame: libpng reports
// errors by longjmp.
void decode_into(ReadState& st) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &st, on_read_error, on_warning);
  if (png == nullptr) {
    st.status = Status::kMalformed;
    std::strncpy(st.message, "png_create_read_struct failed", sizeof(st.message) - 1);
    return;
  }
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    st.status = Status::kMalformed;
    return;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return;
  }
  png_set_read_fn(png, &st, read_from_memory);
  png_read_info(png, info);

  const png_uint_32 width = png_get_image_width(png, info);
  const png_uint_32 height = png_get_image_height(png, info);
  const int bit_depth = png_get_bit_depth(png, info);
  const int color_type = png_get_color_type(png, info);

  if (color_type == PNG_COLOR_TYPE_PALETTE) {
    png_set_palette_to_rgb(png);
  } else if (bit_depth != 8) {
    std::snprintf(st.message, sizeof(st.message), "unsupported bit depth %d", bit_depth);
    st.status = Status::kUnsupported;
    png_destroy_read_struct(&png, &info, nullptr);
    return;
  }
  if ((color_type & PNG_COLOR_MASK_ALPHA) != 0) png_set_strip_alpha(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
  if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
    png_set_gray_to_rgb(png);
  }
  const int passes = png_set_interlace_handling(png);
  png_read_update_info(png, info);

  if (png_get_rowbytes(png, info) != static_cast<png_size_t>(width) * 3) {
    std::strncpy(st.message, "unexpected row layout after transforms", sizeof(st.message) - 1);
    st.status = Status::kUnsupported;
    png_destroy_read_struct(&png, &info, nullptr);
    return;
  }

  st.width = width;
  st.height = height;
  st.rgb.resize(static_cast<std::size_t>(width) * height * 3);
  for (int pass = 0; pass < passes; ++pass) {
    for (png_uint_32 y = 0; y < height; ++y) {
      png_read_row(png, st.rgb.data() + static_cast<std::size_t>(y) * width * 3, nullptr);
    }
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
}

struct WriteState {
  std::vector<std::uint8_t> out;
  char message[256] = {};
  bool failed = false;
};

void on_write_error(png_structp png, png_const_charp msg) {
  auto* st = static_cast<WriteState*>(png_get_error_ptr(png));
  std::strncpy(st->message, msg, sizeof(st->message) - 1);
  st->failed = true;
  png_longjmp(png, 1);
}

void write_to_memory(png_structp png, png_bytep data, png_size_t length) {
  auto* st = static_cast<WriteState*>(png_get_io_ptr(png));
  st->out.insert(st->out.end(), data, data + length);
}

void flush_noop(png_structp) {}

void encode_into(WriteState& st, const std::uint8_t* rgb, png_uint_32 width, png_uint_32 height) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &st, on_write_error, on_warning);
  if (png == nullptr) {
    st.failed = true;
    return;
  }
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    st.failed = true;
    return;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return;
  }
  png_set_write_fn(png, &st, write_to_memory, flush_noop);
  png_set_compression_level(png, 6);
  png_set_IHDR(png, info, width, height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (png_uint_32 y = 0; y < height; ++y) {
    png_write_row(png, rgb + static_cast<std::size_t>(y) * width * 3);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

Image decode_image(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
    throw DecodeError("not a PNG signature", 0);
  }
  ReadState st;
  st.data = bytes.data();
  st.size = bytes.size();
  decode_into(st);
  switch (st.status) {
    case Status::kMalformed:
      throw DecodeError(std::string("malformed PNG: ") + st.message, st.offset);
    case Status::kUnsupported:
      throw UnsupportedFormatError(std::string("unsupported PNG: ") + st.message);
    case Status::kOk:
      break;
  }
  if (st.width == 0 || st.height == 0) throw DecodeError("PNG has zero dimension", st.offset);

  std::vector<Rgb> pixels(static_cast<std::size_t>(st.width) * st.height);
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    pixels[i] = Rgb{st.rgb[3 * i], st.rgb[3 * i + 1], st.rgb[3 * i + 2]};
  }
  return Image(static_cast<int>(st.width), static_cast<int>(st.height), std::move(pixels));
}

std::vector<std::uint8_t> encode_image(const Image& img) {
  const std::vector<std::uint8_t> rgb = img.bytes();
  WriteState st;
  encode_into(st, rgb.data(), static_cast<png_uint_32>(img.width()),
              static_cast<png_uint_32>(img.height()));
  if (st.failed) throw IoError(std::string("PNG encode failed: ") + st.message);
  return std::move(st.out);
}

Image read_png(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = read_file(path);
  try {
    return decode_image(bytes);
  } catch (const UnsupportedFormatError& e) {
    throw UnsupportedFormatError(path.string() + ": " + e.what());
  }
}

void write_png(const std::filesystem::path& path, const Image& img) {
  write_file_atomic(path, encode_image(img));
}

}  // namespace attrictrl

#include "cloudeye/jpeg_codec.hpp"

#include <csetjmp>
#include <cstdio>

#include <jpeglib.h>

namespace cloudeye {

namespace {

struct JpegErrorMgr {
  jpeg_error_mgr pub;
  jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

void silence(j_common_ptr, int) {}
void silence_msg(j_common_ptr) {}

}  // namespace

std::vector<std::uint8_t> jpeg_encode_rgb(const std::uint8_t* rgb, int width,
                                          int height, int quality) {
  if (width < 1 || height < 1 || quality < 1 || quality > 100) {
    throw CodecError("encode", "bad dimensions or quality");
  }
  jpeg_compress_struct cinfo;
  JpegErrorMgr jerr;
  cinfo.err = jpeg_std_error(&jerr.pub);
  jerr.pub.error_exit = error_exit;
  jerr.pub.emit_message = silence;
  jerr.pub.output_message = silence_msg;

  unsigned char* out_buf = nullptr;
  unsigned long out_size = 0;
  if (setjmp(jerr.jump)) {
    jpeg_destroy_compress(&cinfo);
    if (out_buf) std::free(out_buf);
    throw CodecError("encode", jerr.message);
  }

  jpeg_create_compress(&cinfo);
  jpeg_mem_dest(&cinfo, &out_buf, &out_size);
  cinfo.image_width = static_cast<JDIMENSION>(width);
  cinfo.image_height = static_cast<JDIMENSION>(height);
  cinfo.input_components = 3;
  cinfo.in_color_space = JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, quality, TRUE /* baseline */);
  // 4:4:4 keeps chroma detail so quality maps cleanly onto region fidelity
  for (int ci = 0; ci < cinfo.num_components; ++ci) {
    cinfo.comp_info[ci].h_samp_factor = 1;
    cinfo.comp_info[ci].v_samp_factor = 1;
  }
  jpeg_start_compress(&cinfo, TRUE);

  const std::size_t row_stride = static_cast<std::size_t>(width) * 3;
  while (cinfo.next_scanline < cinfo.image_height) {
    JSAMPROW row = const_cast<JSAMPROW>(rgb + cinfo.next_scanline * row_stride);
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  jpeg_destroy_compress(&cinfo);

  std::vector<std::uint8_t> out(out_buf, out_buf + out_size);
  std::free(out_buf);
  return out;
}

DecodedImage jpeg_decode_rgb(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) throw CodecError("decode", "empty payload");

  jpeg_decompress_struct cinfo;
  JpegErrorMgr jerr;
  cinfo.err = jpeg_std_error(&jerr.pub);
  jerr.pub.error_exit = error_exit;
  jerr.pub.emit_message = silence;
  jerr.pub.output_message = silence_msg;

  if (setjmp(jerr.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw CodecError("decode", jerr.message);
  }

  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  if (jpeg_read_header(&cinfo, TRUE) != JPEG_HEADER_OK) {
    jpeg_destroy_decompress(&cinfo);
    throw CodecError("decode", "bad header");
  }
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);

  DecodedImage img;
  img.width = static_cast<int>(cinfo.output_width);
  img.height = static_cast<int>(cinfo.output_height);
  if (img.width < 1 || img.height < 1 || cinfo.output_components != 3) {
    jpeg_destroy_decompress(&cinfo);
    throw CodecError("decode", "unsupported output format");
  }
  img.rgb.resize(static_cast<std::size_t>(img.width) * img.height * 3);
  const std::size_t row_stride = static_cast<std::size_t>(img.width) * 3;
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = img.rgb.data() + cinfo.output_scanline * row_stride;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  const bool corrupt = cinfo.err->num_warnings > 0;
  jpeg_destroy_decompress(&cinfo);
  if (corrupt) {
    throw CodecError("decode", "corrupt entropy data");
  }
  return img;
}

}  // namespace cloudeye

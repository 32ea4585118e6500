#include "ava/imaging_io.hpp"

#include <png.h>

#include <algorithm>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ava/error.hpp"

namespace ava {

namespace fs = std::filesystem;

namespace {

std::string lower_extension(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

ImageTensor load_png(const fs::path& path) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    throw IoError("cannot decode PNG " + path.string() + ": " + img.message);
  }
  const bool color = (img.format & PNG_FORMAT_FLAG_COLOR) != 0;
  img.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const std::size_t channels = color ? 3 : 1;
  std::vector<png_byte> bytes(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, bytes.data(), 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw IoError("cannot decode PNG " + path.string() + ": " + msg);
  }
  std::vector<double> values(bytes.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) values[i] = bytes[i] / 255.0;
  return ImageTensor(ImageShape{img.height, img.width, channels}, std::move(values));
}

// Skips whitespace and '#' comments, then reads one unsigned decimal.
std::size_t read_pnm_number(std::istream& in, const fs::path& path) {
  for (;;) {
    const int c = in.peek();
    if (c == '#') {
      std::string comment;
      std::getline(in, comment);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  std::size_t value = 0;
  if (!(in >> value)) throw IoError("malformed PNM header in " + path.string());
  return value;
}

ImageTensor load_pnm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[2] = {};
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || (magic[1] != '5' && magic[1] != '6')) {
    throw IoError("unsupported PNM variant in " + path.string() + " (need binary P5/P6)");
  }
  const std::size_t channels = magic[1] == '6' ? 3 : 1;
  const std::size_t width = read_pnm_number(in, path);
  const std::size_t height = read_pnm_number(in, path);
  const std::size_t maxval = read_pnm_number(in, path);
  if (width == 0 || height == 0) throw IoError("zero-size PNM image " + path.string());
  if (maxval == 0 || maxval > 255) {
    throw IoError("only 8-bit PNM is supported, maxval " + std::to_string(maxval) + " in " +
                  path.string());
  }
  in.get();  // single whitespace before the raster
  std::vector<unsigned char> bytes(width * height * channels);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!in) throw IoError("truncated PNM raster in " + path.string());
  std::vector<double> values(bytes.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    values[i] = std::min<double>(bytes[i], static_cast<double>(maxval)) / static_cast<double>(maxval);
  }
  return ImageTensor(ImageShape{height, width, channels}, std::move(values));
}

bool looks_like_png(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  unsigned char sig[8] = {};
  in.read(reinterpret_cast<char*>(sig), 8);
  return in && png_sig_cmp(sig, 0, 8) == 0;
}

}  // namespace

ImageTensor load_image(const fs::path& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) throw IoError("image not found: " + path.string());
  try {
    if (looks_like_png(path)) return load_png(path);
    return load_pnm(path);
  } catch (const InvalidArgument& e) {
    throw IoError("invalid image " + path.string() + ": " + e.what());
  }
}

void save_image(const ImageTensor& image, const fs::path& path) {
  validate_image(image.shape(), image.values());
  std::vector<unsigned char> bytes(image.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = to_byte(image.values()[i]);

  const std::string ext = lower_extension(path);
  if (ext == ".pgm" || ext == ".ppm") {
    if ((ext == ".pgm") != (image.channels() == 1)) {
      throw IoError("extension of " + path.string() + " does not match a " +
                    std::to_string(image.channels()) + "-channel image");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << (image.channels() == 1 ? "P5" : "P6") << '\n'
        << image.width() << ' ' << image.height() << "\n255\n";
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing " + path.string());
    return;
  }

  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width());
  img.height = static_cast<png_uint_32>(image.height());
  img.format = image.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&img, path.c_str(), 0, bytes.data(), 0, nullptr)) {
    throw IoError("cannot write PNG " + path.string() + ": " + img.message);
  }
}

DatasetManifest load_manifest(const fs::path& csv, int class_count) {
  std::ifstream in(csv);
  if (!in) throw IoError("cannot open manifest " + csv.string());
  DatasetManifest manifest;
  manifest.root = csv.parent_path();
  std::string line;
  std::size_t line_no = 0;
  const auto fail = [&](const std::string& what) {
    throw ParseError(csv.string() + ":" + std::to_string(line_no) + ": " + what);
  };
  int max_label = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      if (line != "path,label") fail("expected header 'path,label'");
      continue;
    }
    if (line.empty()) continue;
    const auto comma = line.rfind(',');
    if (comma == std::string::npos) fail("expected 'path,label'");
    const std::string path_text = line.substr(0, comma);
    const std::string label_text = line.substr(comma + 1);
    if (path_text.empty()) fail("empty path");
    int label = 0;
    const auto [end, ec] =
        std::from_chars(label_text.data(), label_text.data() + label_text.size(), label);
    if (ec != std::errc() || end != label_text.data() + label_text.size()) {
      fail("label '" + label_text + "' is not an integer");
    }
    if (label < 0 || (class_count > 0 && label >= class_count)) {
      fail("label " + label_text + " out of range");
    }
    fs::path p(path_text);
    if (p.is_relative()) p = manifest.root / p;
    manifest.records.push_back({p, label});
    max_label = std::max(max_label, label);
  }
  if (line_no == 0) fail("missing header 'path,label'");
  manifest.class_count = class_count > 0 ? class_count : max_label + 1;
  return manifest;
}

std::string format_double(double value) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, end);
}

void write_float_grid(const fs::path& path, std::size_t height, std::size_t width,
                      std::span<const double> values) {
  if (values.size() != height * width) throw InvalidArgument("float grid size mismatch");
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << height << ' ' << width << '\n';
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      if (c) out << ' ';
      out << format_double(values[r * width + c]);
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<double> read_float_grid(const fs::path& path, std::size_t* height,
                                    std::size_t* width) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::size_t h = 0, w = 0;
  if (!(in >> h >> w)) throw ParseError(path.string() + ":1: expected 'H W'");
  std::vector<double> values(h * w);
  std::string token;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(in >> token)) {
      throw ParseError(path.string() + ":" + std::to_string(i / std::max<std::size_t>(w, 1) + 2) +
                       ": missing values");
    }
    const auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), values[i]);
    if (ec != std::errc() || end != token.data() + token.size()) {
      throw ParseError(path.string() + ":" + std::to_string(i / w + 2) + ": bad number '" + token +
                       "'");
    }
  }
  if (height) *height = h;
  if (width) *width = w;
  return values;
}

}  // namespace ava

#include "rhe/pgm_io.hpp"

#include <fstream>
#include <stdexcept>
#include <string>

namespace rhe {

namespace {

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& what) {
  throw std::runtime_error("pgm: " + path.string() + ": " + what);
}

// Next whitespace-separated token, skipping '#' comments to end of line.
std::string next_token(std::istream& in) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

int parse_int(std::istream& in, const std::filesystem::path& path, const char* field) {
  const std::string tok = next_token(in);
  if (tok.empty()) fail(path, std::string("truncated header, missing ") + field);
  try {
    return std::stoi(tok);
  } catch (const std::exception&) {
    fail(path, std::string("bad ") + field + " '" + tok + "'");
  }
}

}  // namespace

void write_pgm(const IntensityPatch& patch, const std::filesystem::path& path) {
  if (patch.width <= 0 || patch.height <= 0)
    throw std::invalid_argument("write_pgm: empty patch");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(path, "cannot open for writing");

  out << "P5\n" << patch.width << " " << patch.height << "\n"
      << static_cast<unsigned>(patch.max_value()) << "\n";
  if (patch.bit_depth == 8) {
    for (std::uint16_t v : patch.pixels) out.put(static_cast<char>(v & 0xff));
  } else {
    for (std::uint16_t v : patch.pixels) {
      out.put(static_cast<char>((v >> 8) & 0xff));  // big-endian
      out.put(static_cast<char>(v & 0xff));
    }
  }
  if (!out) fail(path, "write failed");
}

IntensityPatch read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open");

  const std::string magic = next_token(in);
  if (magic != "P5") fail(path, "not a binary PGM (magic '" + magic + "')");
  const int width = parse_int(in, path, "width");
  const int height = parse_int(in, path, "height");
  const int maxval = parse_int(in, path, "maxval");
  if (width <= 0 || height <= 0) fail(path, "non-positive dimensions");
  if (maxval <= 0 || maxval > 65535) fail(path, "maxval out of range: " + std::to_string(maxval));

  const int bit_depth = maxval <= 255 ? 8 : 16;
  const std::size_t n = static_cast<std::size_t>(width) * height;
  std::vector<std::uint16_t> pixels(n);
  if (bit_depth == 8) {
    std::vector<char> raw(n);
    in.read(raw.data(), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n) fail(path, "truncated pixel data");
    for (std::size_t i = 0; i < n; ++i) pixels[i] = static_cast<std::uint8_t>(raw[i]);
  } else {
    std::vector<char> raw(n * 2);
    in.read(raw.data(), static_cast<std::streamsize>(n * 2));
    if (static_cast<std::size_t>(in.gcount()) != n * 2) fail(path, "truncated pixel data");
    for (std::size_t i = 0; i < n; ++i) {
      const auto hi = static_cast<std::uint8_t>(raw[2 * i]);
      const auto lo = static_cast<std::uint8_t>(raw[2 * i + 1]);
      pixels[i] = static_cast<std::uint16_t>((hi << 8) | lo);
    }
  }
  for (std::uint16_t v : pixels)
    if (v > maxval) fail(path, "pixel value exceeds declared maxval");
  return IntensityPatch{width, height, bit_depth, std::move(pixels)};
}

IntensityPatch read_patch(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext == ".png") return read_png_gray(path);
  return read_pgm(path);
}

}  // namespace rhe

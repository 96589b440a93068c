#include "pilesort/image_io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace pilesort {

namespace {

// Reads one netpbm header token, skipping whitespace and '#' comments.
std::string next_token(std::istream& in) {
  std::string tok;
  int c = 0;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

int parse_dim(const std::string& tok, const char* what) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size() || v < 0) {
    throw std::runtime_error(std::string("invalid ") + what + " '" + tok + "'");
  }
  return v;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace

void write_hmap(std::ostream& out, const Heightmap& h) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, h.resolution_mm());
  out << "HMAP " << h.width() << ' ' << h.height() << ' '
      << std::string(buf, end) << '\n';
  for (int y = 0; y < h.height(); ++y) {
    for (int x = 0; x < h.width(); ++x) {
      auto [e, err] = std::to_chars(buf, buf + sizeof buf, h(x, y));
      if (x) out << ' ';
      out.write(buf, e - buf);
    }
    out << '\n';
  }
}

Heightmap read_hmap(std::istream& in) {
  std::string magic;
  int w = 0;
  int ht = 0;
  double res = 0.0;
  if (!(in >> magic >> w >> ht >> res) || magic != "HMAP") {
    throw std::runtime_error("not a HMAP heightmap file");
  }
  if (w < 0 || ht < 0 || !(res > 0.0)) {
    throw std::runtime_error("HMAP header has invalid dimensions or resolution");
  }
  Heightmap h(w, ht, res);
  for (int y = 0; y < ht; ++y) {
    for (int x = 0; x < w; ++x) {
      double v = 0.0;
      if (!(in >> v)) {
        throw std::runtime_error("HMAP data truncated at row " + std::to_string(y));
      }
      h(x, y) = static_cast<float>(v);
    }
  }
  return h;
}

void write_ppm(std::ostream& out, const RgbMap& rgb) {
  out << "P6\n" << rgb.width() << ' ' << rgb.height() << "\n255\n";
  for (const Rgb& c : rgb.values()) {
    const char px[3] = {static_cast<char>(c.r), static_cast<char>(c.g),
                        static_cast<char>(c.b)};
    out.write(px, 3);
  }
}

RgbMap read_ppm(std::istream& in) {
  if (next_token(in) != "P6") throw std::runtime_error("not a binary PPM (P6)");
  const int w = parse_dim(next_token(in), "PPM width");
  const int ht = parse_dim(next_token(in), "PPM height");
  const int maxval = parse_dim(next_token(in), "PPM maxval");
  if (maxval != 255) throw std::runtime_error("only 8-bit PPM is supported");
  RgbMap rgb(w, ht);
  for (Rgb& c : rgb.values()) {
    char px[3];
    if (!in.read(px, 3)) throw std::runtime_error("PPM data truncated");
    c = {static_cast<std::uint8_t>(px[0]), static_cast<std::uint8_t>(px[1]),
         static_cast<std::uint8_t>(px[2])};
  }
  return rgb;
}

void write_pbm(std::ostream& out, const UnknownMask& mask) {
  out << "P4\n" << mask.width() << ' ' << mask.height() << '\n';
  const int row_bytes = (mask.width() + 7) / 8;
  std::string row(static_cast<std::size_t>(row_bytes), '\0');
  for (int y = 0; y < mask.height(); ++y) {
    std::fill(row.begin(), row.end(), '\0');
    for (int x = 0; x < mask.width(); ++x) {
      if (mask(x, y)) row[x / 8] = static_cast<char>(row[x / 8] | (0x80 >> (x % 8)));
    }
    out.write(row.data(), row_bytes);
  }
}

UnknownMask read_pbm(std::istream& in) {
  if (next_token(in) != "P4") throw std::runtime_error("not a binary PBM (P4)");
  const int w = parse_dim(next_token(in), "PBM width");
  const int ht = parse_dim(next_token(in), "PBM height");
  UnknownMask mask(w, ht, 0);
  const int row_bytes = (w + 7) / 8;
  std::string row(static_cast<std::size_t>(row_bytes), '\0');
  for (int y = 0; y < ht; ++y) {
    if (!in.read(row.data(), row_bytes)) throw std::runtime_error("PBM data truncated");
    for (int x = 0; x < w; ++x) {
      mask(x, y) = (static_cast<unsigned char>(row[x / 8]) >> (7 - x % 8)) & 1u;
    }
  }
  return mask;
}

Heightmap load_hmap(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_hmap(in);
}
void save_hmap(const std::filesystem::path& path, const Heightmap& h) {
  auto out = open_out(path);
  write_hmap(out, h);
}
RgbMap load_ppm(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_ppm(in);
}
void save_ppm(const std::filesystem::path& path, const RgbMap& rgb) {
  auto out = open_out(path);
  write_ppm(out, rgb);
}
UnknownMask load_pbm(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_pbm(in);
}
void save_pbm(const std::filesystem::path& path, const UnknownMask& mask) {
  auto out = open_out(path);
  write_pbm(out, mask);
}

}  // namespace pilesort

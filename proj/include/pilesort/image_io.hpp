#pragma once

#include <filesystem>
#include <iosfwd>

#include "pilesort/grid.hpp"

namespace pilesort {

// Heightmap text format: "HMAP <width> <height> <resolution_mm>" followed by
// height*width whitespace-separated decimal values in row-major order.
void write_hmap(std::ostream& out, const Heightmap& h);
Heightmap read_hmap(std::istream& in);

// Binary PPM (P6, maxval 255).
void write_ppm(std::ostream& out, const RgbMap& rgb);
RgbMap read_ppm(std::istream& in);

// Binary PBM (P4); a set bit marks an unknown cell.
void write_pbm(std::ostream& out, const UnknownMask& mask);
UnknownMask read_pbm(std::istream& in);

Heightmap load_hmap(const std::filesystem::path& path);
void save_hmap(const std::filesystem::path& path, const Heightmap& h);
RgbMap load_ppm(const std::filesystem::path& path);
void save_ppm(const std::filesystem::path& path, const RgbMap& rgb);
UnknownMask load_pbm(const std::filesystem::path& path);
void save_pbm(const std::filesystem::path& path, const UnknownMask& mask);

}  // namespace pilesort

#pragma once

// On-disk formats for fields and images.
//
// Text dump:   ROTBEC-FIELD v1 dim=<d> n=<n1,..> L=<L1,..> [key=value ...]
//              followed by one "re,im" row per grid point, row-major.
// Binary dump: raw little-endian float64 (re, im) pairs, row-major, with the
//              same header line stored in a sidecar text file.

#include <filesystem>
#include <map>
#include <span>
#include <string>

#include "rotbec/lattice.hpp"

namespace rotbec {

using Metadata = std::map<std::string, std::string>;

std::string field_header(const Grid& grid, const Metadata& extra = {});
/// Parses a header line; extra key=value tokens land in `extra` if given.
Grid parse_field_header(const std::string& line, Metadata* extra = nullptr);

/// Writes `contents` to `path` through a temporary file and a rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

void write_field_csv(const std::filesystem::path& path, const Field& phi,
                     const Metadata& extra = {});
Field read_field_csv(const std::filesystem::path& path, Metadata* extra = nullptr);

/// Writes `path` (raw data) and `path` + ".hdr" (header line).
void write_field_binary(const std::filesystem::path& path, const Field& phi,
                        const Metadata& extra = {});
Field read_field_binary(const std::filesystem::path& path, Metadata* extra = nullptr);

/// Binary 16-bit PGM (P5) of a 2D array with values mapped linearly from
/// [lo, hi] onto [0, 65535]; `rows` x `cols`, row-major.
void write_pgm16(const std::filesystem::path& path, std::span<const double> values,
                 int rows, int cols, double lo, double hi, const std::string& comment = {});

}  // namespace rotbec

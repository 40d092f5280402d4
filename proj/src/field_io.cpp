#include "rotbec/field_io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "rotbec/errors.hpp"

namespace rotbec {

namespace {

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ConfigError("cannot parse number '" + s + "'");
  return v;
}

void append_le(std::string& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
}

double read_le(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(p[b]) << (8 * b);
  return std::bit_cast<double>(bits);
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string field_header(const Grid& grid, const Metadata& extra) {
  std::string h = "ROTBEC-FIELD v1 dim=" + std::to_string(grid.dim()) + " n=";
  for (int a = 0; a < grid.dim(); ++a) {
    if (a) h += ',';
    h += std::to_string(grid.points(a));
  }
  h += " L=";
  for (int a = 0; a < grid.dim(); ++a) {
    if (a) h += ',';
    h += format_double(grid.half_width(a));
  }
  for (const auto& [k, v] : extra) h += " " + k + "=" + v;
  return h;
}

Grid parse_field_header(const std::string& line, Metadata* extra) {
  std::istringstream ss(line);
  std::string magic, version;
  ss >> magic >> version;
  if (magic != "ROTBEC-FIELD" || version != "v1")
    throw ConfigError("not a ROTBEC-FIELD v1 header");
  int dim = 0;
  std::vector<int> n;
  std::vector<double> L;
  std::string tok;
  while (ss >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw ConfigError("bad header token '" + tok + "'");
    const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
    if (key == "dim") {
      dim = std::stoi(val);
    } else if (key == "n") {
      for (const auto& p : split(val, ',')) n.push_back(std::stoi(p));
    } else if (key == "L") {
      for (const auto& p : split(val, ',')) L.push_back(parse_double(p));
    } else if (extra) {
      (*extra)[key] = val;
    }
  }
  if (static_cast<int>(n.size()) != dim || static_cast<int>(L.size()) != dim)
    throw ConfigError("header extents do not match dim");
  return Grid(dim, L, n);
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw ConfigError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_field_csv(const std::filesystem::path& path, const Field& phi,
                     const Metadata& extra) {
  std::string out = field_header(phi.grid(), extra);
  out += '\n';
  out.reserve(out.size() + phi.size() * 48);
  for (const auto& v : phi.values()) {
    out += format_double(v.real());
    out += ',';
    out += format_double(v.imag());
    out += '\n';
  }
  write_file_atomic(path, out);
}

Field read_field_csv(const std::filesystem::path& path, Metadata* extra) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  Grid grid = parse_field_header(line, extra);
  std::vector<cplx> values;
  values.reserve(grid.size());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ConfigError("bad field row '" + line + "'");
    values.emplace_back(parse_double(line.substr(0, comma)),
                        parse_double(line.substr(comma + 1)));
  }
  if (values.size() != grid.size())
    throw ConfigError("field dump has " + std::to_string(values.size()) +
                      " rows, expected " + std::to_string(grid.size()));
  return Field(grid, std::move(values));
}

void write_field_binary(const std::filesystem::path& path, const Field& phi,
                        const Metadata& extra) {
  std::string data;
  data.reserve(phi.size() * 16);
  for (const auto& v : phi.values()) {
    append_le(data, v.real());
    append_le(data, v.imag());
  }
  write_file_atomic(path, data);
  auto hdr = path;
  hdr += ".hdr";
  write_file_atomic(hdr, field_header(phi.grid(), extra) + "\n");
}

Field read_field_binary(const std::filesystem::path& path, Metadata* extra) {
  auto hdr = path;
  hdr += ".hdr";
  std::string header = slurp(hdr);
  if (!header.empty() && header.back() == '\n') header.pop_back();
  Grid grid = parse_field_header(header, extra);
  const std::string data = slurp(path);
  if (data.size() != grid.size() * 16)
    throw ConfigError("binary field has wrong size: " + path.string());
  std::vector<cplx> values(grid.size());
  const auto* p = reinterpret_cast<const unsigned char*>(data.data());
  for (std::size_t i = 0; i < grid.size(); ++i)
    values[i] = cplx(read_le(p + 16 * i), read_le(p + 16 * i + 8));
  return Field(grid, std::move(values));
}

void write_pgm16(const std::filesystem::path& path, std::span<const double> values,
                 int rows, int cols, double lo, double hi, const std::string& comment) {
  std::string out = "P5\n";
  if (!comment.empty()) out += "# " + comment + "\n";
  out += std::to_string(cols) + " " + std::to_string(rows) + "\n65535\n";
  const double span = hi > lo ? hi - lo : 1.0;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const double t = std::clamp((values[r * cols + c] - lo) / span, 0.0, 1.0);
      const auto level = static_cast<std::uint16_t>(std::lround(t * 65535.0));
      out.push_back(static_cast<char>(level >> 8));  // PGM is big-endian
      out.push_back(static_cast<char>(level & 0xff));
    }
  write_file_atomic(path, out);
}

}  // namespace rotbec

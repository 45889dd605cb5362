#include "qclab/grid_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace qclab {

const std::vector<double>& GridFile::block(const std::string& name) const {
  for (const auto& [n, v] : blocks)
    if (n == name) return v;
  throw Error(ErrorCode::IOError, "grid file has no block '" + name + "'");
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_grid_file(const GridFile& file, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::IOError, "cannot write " + path);
  const Grid2D& g = file.grid;
  os << "qclab-grid 1\n";
  os << "kind " << file.kind << "\n";
  os << "origin " << fmt(g.origin.real()) << " " << fmt(g.origin.imag()) << "\n";
  os << "spacing " << fmt(g.h) << "\n";
  os << "size " << g.nx << " " << g.ny << "\n";
  os << "flags";
  for (const auto& [k, v] : file.flags) os << " " << k << "=" << v;
  os << "\nblocks";
  for (const auto& [n, v] : file.blocks) os << " " << n;
  os << "\nend\n";
  for (const auto& [n, v] : file.blocks) {
    if (v.size() != g.size()) throw Error(ErrorCode::IOError, "block '" + n + "' has wrong length");
    os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  }
  if (!os) throw Error(ErrorCode::IOError, "short write to " + path);
}

GridFile read_grid_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::IOError, "cannot open " + path);
  GridFile file;
  std::vector<std::string> names;
  std::string line;
  if (!std::getline(is, line) || line != "qclab-grid 1") throw Error(ErrorCode::IOError, path + ": bad magic");
  bool done = false;
  while (!done && std::getline(is, line)) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "kind") {
      ls >> file.kind;
    } else if (key == "origin") {
      double x = 0, y = 0;
      ls >> x >> y;
      file.grid.origin = Point(x, y);
    } else if (key == "spacing") {
      ls >> file.grid.h;
    } else if (key == "size") {
      ls >> file.grid.nx >> file.grid.ny;
    } else if (key == "flags") {
      std::string kv;
      while (ls >> kv) {
        const auto eq = kv.find('=');
        if (eq != std::string::npos) file.flags[kv.substr(0, eq)] = kv.substr(eq + 1);
      }
    } else if (key == "blocks") {
      std::string n;
      while (ls >> n) names.push_back(n);
    } else if (key == "end") {
      done = true;
    } else {
      throw Error(ErrorCode::IOError, path + ": unknown header key '" + key + "'");
    }
  }
  if (!done || file.grid.nx <= 0 || file.grid.ny <= 0) throw Error(ErrorCode::IOError, path + ": truncated header");
  for (const auto& n : names) {
    std::vector<double> v(file.grid.size());
    is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
    if (!is) throw Error(ErrorCode::IOError, path + ": truncated block '" + n + "'");
    file.blocks.emplace_back(n, std::move(v));
  }
  return file;
}

void write_real_field(const RealField& f, const std::string& kind, const std::string& path) {
  GridFile file;
  file.kind = kind;
  file.grid = f.grid;
  file.blocks.emplace_back("value", f.values);
  write_grid_file(file, path);
}

RealField read_real_field(const std::string& path) {
  GridFile file = read_grid_file(path);
  RealField f(file.grid);
  f.values = file.block("value");
  return f;
}

}  // namespace qclab

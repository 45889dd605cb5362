#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "qclab/grid.hpp"

namespace qclab {

/// Text header followed by row-major float64 blocks (index j*nx + i, native
/// byte order):
///
///   qclab-grid 1
///   kind <tag>
///   origin <x> <y>
///   spacing <h>
///   size <nx> <ny>
///   flags <key=value ...>
///   blocks <name ...>
///   end
struct GridFile {
  std::string kind;
  Grid2D grid;
  std::map<std::string, std::string> flags;
  std::vector<std::pair<std::string, std::vector<double>>> blocks;

  const std::vector<double>& block(const std::string& name) const;
};

void write_grid_file(const GridFile& file, const std::string& path);
GridFile read_grid_file(const std::string& path);

void write_real_field(const RealField& f, const std::string& kind, const std::string& path);
RealField read_real_field(const std::string& path);

}  // namespace qclab

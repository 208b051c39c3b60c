#include "kwave/mesh.hpp"

#include "kwave/common.hpp"

namespace kwave {

void Mesh::validate() const {
  if (nx < 1) throw ConfigError("mesh: nx must be positive");
  if (!(x_max > x_min)) throw ConfigError("mesh: x_max must exceed x_min");
  if (geometry == Geometry::duct) {
    if (ny < 2) throw ConfigError("mesh: a duct needs ny >= 2");
    if (!(y_max > y_min)) throw ConfigError("mesh: y_max must exceed y_min");
  } else if (ny != 1) {
    throw ConfigError("mesh: the line geometry has ny = 1");
  }
}

}  // namespace kwave

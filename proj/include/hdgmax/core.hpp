#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace hdgmax {

using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;

enum class Domain { seg, tri, tet };

inline int domain_dim(Domain d) {
  switch (d) {
    case Domain::seg: return 1;
    case Domain::tri: return 2;
    default: return 3;
  }
}

// dim P_k on a simplex of dimension `dim`
inline int poly_dim(int k, int dim) {
  if (k < 0) return 0;
  switch (dim) {
    case 1: return k + 1;
    case 2: return (k + 1) * (k + 2) / 2;
    default: return (k + 1) * (k + 2) * (k + 3) / 6;
  }
}

struct solver_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct config_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

} // namespace hdgmax

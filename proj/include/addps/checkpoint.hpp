#pragma once

#include <string>
#include <vector>

#include "addps/numerics.hpp"

namespace addps {

/// Flat list of named float64 arrays with shape headers. On disk:
/// versioned magic string, array count, then per array the name,
/// the shape and raw little-endian doubles.
struct NamedArray {
  std::string name;
  std::vector<std::size_t> shape;
  Vec data;

  std::size_t element_count() const {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
  }
};

inline constexpr const char* kCheckpointMagic = "ADDPS-CKPT-v1\n";

void save_checkpoint(const std::string& path, const std::vector<NamedArray>& arrays);
std::vector<NamedArray> load_checkpoint(const std::string& path);

const NamedArray& find_array(const std::vector<NamedArray>& arrays, const std::string& name);

}  // namespace addps

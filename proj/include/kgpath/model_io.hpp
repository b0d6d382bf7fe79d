#ifndef KGPATH_MODEL_IO_HPP
#define KGPATH_MODEL_IO_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "kgpath/akglg_model.hpp"

namespace kgpath {

/// An AKGLG model together with the id maps it was trained against.
///
/// On-disk layout (all integers and floats little-endian):
///
///   bytes 0-7    magic "KGPMODL1"
///   u32          group kind (0 sign, 1 circle, 2 line)
///   u32          reserved, 0
///   u64          dimension n
///   u64          entity count E
///   u64          base relation count R (the file holds 2R directed labels)
///   u64          fingerprint of the producing configuration
///   f64[E*n]     entity attention, entity-major
///   f64[E*n*k]   entity points; k = 2 (re, im interleaved) for circle, else 1
///   f64[2R*n]    relation attention, label-major (label index 2*base + inverse)
///   f64[2R*n*k]  relation points
///   E strings    entity names (u32 length + UTF-8 bytes)
///   R strings    base relation names
struct ModelFile {
  AkglgModel model;
  std::vector<std::string> entity_names;
  std::vector<std::string> relation_names;
  std::uint64_t fingerprint = 0;
};

void save_model(const ModelFile& file, const std::filesystem::path& path);
ModelFile load_model(const std::filesystem::path& path);

}  // namespace kgpath

#endif  // KGPATH_MODEL_IO_HPP

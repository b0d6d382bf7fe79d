#ifndef KGPATH_BINARY_IO_HPP
#define KGPATH_BINARY_IO_HPP

#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>

namespace kgpath::binary {

// Little-endian scalar I/O independent of host byte order. Readers throw
// std::runtime_error on truncated input.

void write_u32(std::ostream& out, std::uint32_t v);
void write_u64(std::ostream& out, std::uint64_t v);
void write_f64(std::ostream& out, double v);
void write_f64s(std::ostream& out, std::span<const double> values);
/// u32 byte length followed by the bytes.
void write_string(std::ostream& out, std::string_view s);

std::uint32_t read_u32(std::istream& in);
std::uint64_t read_u64(std::istream& in);
double read_f64(std::istream& in);
void read_f64s(std::istream& in, std::span<double> values);
std::string read_string(std::istream& in);

/// 64-bit FNV-1a, used for stage fingerprints.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ull);

}  // namespace kgpath::binary

#endif  // KGPATH_BINARY_IO_HPP

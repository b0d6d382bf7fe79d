#ifndef KGPATH_TYPES_HPP
#define KGPATH_TYPES_HPP

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace kgpath {

/// Dense entity index, contiguous from 0 in interning order.
using EntityId = std::int32_t;

/// A directed relation label: a base relation and a flag selecting r or r^-1.
///
/// Directed labels are packed as `2 * base + inverse`, so arrays over all
/// labels of an augmented graph are indexed by `index()` and have length
/// `2 * base_relation_count`.
class RelationId {
 public:
  constexpr RelationId() = default;
  constexpr RelationId(std::int32_t base, bool inverse) : packed_(2 * base + (inverse ? 1 : 0)) {}

  static constexpr RelationId from_index(std::int32_t index) {
    RelationId r;
    r.packed_ = index;
    return r;
  }

  constexpr std::int32_t base() const { return packed_ >> 1; }
  constexpr bool is_inverse() const { return (packed_ & 1) != 0; }
  constexpr std::int32_t index() const { return packed_; }
  constexpr RelationId inverse() const { return from_index(packed_ ^ 1); }

  constexpr auto operator<=>(const RelationId&) const = default;

 private:
  std::int32_t packed_ = 0;
};

struct Triple {
  EntityId head = 0;
  RelationId relation;
  EntityId tail = 0;

  constexpr auto operator<=>(const Triple&) const = default;
};

constexpr Triple inverted(const Triple& t) { return {t.tail, t.relation.inverse(), t.head}; }

/// Raised for malformed input files; carries the offending line.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& path, std::size_t line, const std::string& what)
      : std::runtime_error(path + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Raised when a numeric procedure produces non-finite values.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TripleHash {
  std::size_t operator()(const Triple& t) const noexcept {
    std::uint64_t k = static_cast<std::uint32_t>(t.head);
    k = k * 0x9E3779B97F4A7C15ull ^ static_cast<std::uint32_t>(t.relation.index());
    k = k * 0x9E3779B97F4A7C15ull ^ static_cast<std::uint32_t>(t.tail);
    return std::hash<std::uint64_t>{}(k);
  }
};

}  // namespace kgpath

#endif  // KGPATH_TYPES_HPP

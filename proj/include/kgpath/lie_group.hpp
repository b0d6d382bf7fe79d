#ifndef KGPATH_LIE_GROUP_HPP
#define KGPATH_LIE_GROUP_HPP

#include <cmath>
#include <complex>
#include <string_view>

namespace kgpath {

enum class GroupKind { sign = 0, circle = 1, line = 2 };

std::string_view to_string(GroupKind kind);
GroupKind parse_group_kind(std::string_view name);

/// {-1, 1} under multiplication. Similarity is +1 on equal elements, -1 otherwise.
template <typename Scalar_>
struct SignGroup {
  using Scalar = Scalar_;
  using Element = Scalar;
  static constexpr GroupKind kind = GroupKind::sign;

  static Element identity() { return Scalar(1); }
  static Element compose(Element a, Element b) { return a * b; }
  static Element inverse(Element a) { return a; }
  static Scalar similarity(Element x, Element y) { return x == y ? Scalar(1) : Scalar(-1); }
};

/// Unit complex numbers under multiplication; similarity Re(x * conj(y)).
template <typename Scalar_>
struct CircleGroup {
  using Scalar = Scalar_;
  using Element = std::complex<Scalar>;
  static constexpr GroupKind kind = GroupKind::circle;

  static Element identity() { return Element(1, 0); }
  static Element compose(const Element& a, const Element& b) { return a * b; }
  static Element inverse(const Element& a) { return std::conj(a); }
  static Scalar similarity(const Element& x, const Element& y) { return std::real(x * std::conj(y)); }
};

/// The real line under addition; similarity -(x - y)^2.
template <typename Scalar_>
struct LineGroup {
  using Scalar = Scalar_;
  using Element = Scalar;
  static constexpr GroupKind kind = GroupKind::line;

  static Element identity() { return Scalar(0); }
  static Element compose(Element a, Element b) { return a + b; }
  static Element inverse(Element a) { return -a; }
  static Scalar similarity(Element x, Element y) {
    const Scalar d = x - y;
    return -d * d;
  }
};

}  // namespace kgpath

#endif  // KGPATH_LIE_GROUP_HPP

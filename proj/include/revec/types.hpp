#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace revec {

enum class ScalarKind : std::uint8_t { I1, I8, U8, I16, U16, I32, U32, I64, U64, F32 };

struct ScalarType {
  ScalarKind kind = ScalarKind::I32;

  constexpr unsigned bits() const {
    switch (kind) {
    case ScalarKind::I1: return 1;
    case ScalarKind::I8:
    case ScalarKind::U8: return 8;
    case ScalarKind::I16:
    case ScalarKind::U16: return 16;
    case ScalarKind::I32:
    case ScalarKind::U32:
    case ScalarKind::F32: return 32;
    case ScalarKind::I64:
    case ScalarKind::U64: return 64;
    }
    return 0;
  }
  /// Storage size in memory; i1 occupies one byte.
  constexpr unsigned bytes() const { return kind == ScalarKind::I1 ? 1 : bits() / 8; }
  constexpr bool is_signed() const {
    return kind == ScalarKind::I8 || kind == ScalarKind::I16 || kind == ScalarKind::I32 ||
           kind == ScalarKind::I64;
  }
  constexpr bool is_float() const { return kind == ScalarKind::F32; }
  constexpr bool is_integer() const { return !is_float(); }

  friend constexpr bool operator==(ScalarType, ScalarType) = default;
};

std::string_view scalar_name(ScalarType t);
std::optional<ScalarType> scalar_from_name(std::string_view name);

/// Every IR value has one of these shapes. Vectors are `<count x elem>`;
/// pointers only appear as function parameters and ptradd results.
struct Type {
  enum class Shape : std::uint8_t { Void, Scalar, Vector, Ptr };

  Shape shape = Shape::Void;
  ScalarType elem{};
  unsigned count = 0;

  static Type void_type() { return {}; }
  static Type scalar(ScalarType e) { return {Shape::Scalar, e, 1}; }
  static Type scalar(ScalarKind k) { return scalar(ScalarType{k}); }
  static Type vector(ScalarType e, unsigned n) { return {Shape::Vector, e, n}; }
  static Type vector(ScalarKind k, unsigned n) { return vector(ScalarType{k}, n); }
  static Type ptr(ScalarType e) { return {Shape::Ptr, e, 1}; }

  bool is_void() const { return shape == Shape::Void; }
  bool is_scalar() const { return shape == Shape::Scalar; }
  bool is_vector() const { return shape == Shape::Vector; }
  bool is_ptr() const { return shape == Shape::Ptr; }
  /// Number of lanes for scalar/vector values (1 for scalars).
  unsigned lanes() const { return is_vector() ? count : 1; }
  unsigned total_bits() const { return is_vector() || is_scalar() ? lanes() * elem.bits() : 0; }
  unsigned total_bytes() const { return lanes() * elem.bytes(); }
  Type with_count(unsigned n) const { return vector(elem, n); }

  friend bool operator==(const Type& a, const Type& b) {
    if (a.shape != b.shape) return false;
    if (a.is_void()) return true;
    return a.elem == b.elem && (!a.is_vector() || a.count == b.count);
  }
};

std::string to_string(const Type& t);

/// Legal widths for values produced by vector instructions.
constexpr bool is_legal_vector_bits(unsigned bits) { return bits == 128 || bits == 256 || bits == 512; }

} // namespace revec

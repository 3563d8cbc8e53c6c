#include "revec/intrinsics.hpp"

#include <algorithm>

namespace revec {

namespace {

struct FamilySpec {
  const char* family;
  ScalarKind operand;
  ScalarKind result;
  std::vector<unsigned> widths;
};

std::vector<IntrinsicSignature> build_catalog() {
  const std::vector<FamilySpec> families{
      {"avg.u8", ScalarKind::U8, ScalarKind::U8, {128, 256, 512}},
      {"mulhi.i16", ScalarKind::I16, ScalarKind::I16, {128, 256, 512}},
      {"packss.i16", ScalarKind::I16, ScalarKind::I8, {128, 256, 512}},
      {"packus.i32", ScalarKind::I32, ScalarKind::U16, {128, 256, 512}},
      {"phadd.i16", ScalarKind::I16, ScalarKind::I16, {128, 256}},
      {"sad.u8", ScalarKind::U8, ScalarKind::U64, {128, 256, 512}},
  };
  std::vector<IntrinsicSignature> out;
  for (const auto& f : families) {
    for (unsigned w : f.widths) {
      ScalarType op{f.operand};
      ScalarType res{f.result};
      IntrinsicSignature sig;
      sig.family = f.family;
      sig.bits = w;
      sig.name = sig.family + "." + std::to_string(w);
      Type operand = Type::vector(op, w / op.bits());
      sig.operands = {operand, operand};
      sig.result = Type::vector(res, w / res.bits());
      out.push_back(std::move(sig));
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
  return out;
}

} // namespace

const std::vector<IntrinsicSignature>& intrinsic_catalog() {
  static const std::vector<IntrinsicSignature> catalog = build_catalog();
  return catalog;
}

const IntrinsicSignature* find_intrinsic(std::string_view name) {
  for (const auto& sig : intrinsic_catalog())
    if (sig.name == name) return &sig;
  return nullptr;
}

} // namespace revec

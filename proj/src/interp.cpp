#include "revec/interp.hpp"

#include "revec/intrinsics.hpp"

#include <algorithm>
#include <bit>
#include <cstring>

namespace revec {

std::uint64_t truncate(std::uint64_t v, unsigned bits) { return bits >= 64 ? v : v & ((1ULL << bits) - 1); }

std::int64_t sext(std::uint64_t v, unsigned bits) {
  if (bits >= 64) return static_cast<std::int64_t>(v);
  const unsigned shift = 64 - bits;
  return static_cast<std::int64_t>(v << shift) >> shift;
}

RtValue RtValue::scalar(ScalarType t, std::uint64_t bits) { return {Type::scalar(t), {truncate(bits, t.bits())}, {}}; }

RtValue RtValue::vector(Type t, std::vector<std::uint64_t> lanes) {
  for (auto& l : lanes) l = truncate(l, t.elem.bits());
  return {t, std::move(lanes), {}};
}

std::uint64_t Buffer::get(std::size_t i) const {
  std::uint64_t v = 0;
  std::memcpy(&v, bytes.data() + i * elem.bytes(), elem.bytes());
  return truncate(v, elem.bits());
}

void Buffer::set(std::size_t i, std::uint64_t bits) {
  bits = truncate(bits, elem.bits());
  std::memcpy(bytes.data() + i * elem.bytes(), &bits, elem.bytes());
}

namespace {

float as_float(std::uint64_t bits) { return std::bit_cast<float>(static_cast<std::uint32_t>(bits)); }
std::uint64_t from_float(float f) { return std::bit_cast<std::uint32_t>(f); }

std::uint64_t clamp_signed(std::int64_t v, std::int64_t lo, std::int64_t hi) {
  return static_cast<std::uint64_t>(std::clamp(v, lo, hi));
}

using LaneFn = std::vector<std::uint64_t> (*)(const std::vector<std::uint64_t>&, const std::vector<std::uint64_t>&);

// 128-bit lane procedures. Inputs hold raw bit patterns of the operand
// element type; outputs of the result element type.
std::vector<std::uint64_t> packus_i32(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
  std::vector<std::uint64_t> r;
  for (const auto* src : {&a, &b})
    for (auto x : *src) r.push_back(clamp_signed(sext(x, 32), 0, 65535));
  return r;
}

std::vector<std::uint64_t> packss_i16(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
  std::vector<std::uint64_t> r;
  for (const auto* src : {&a, &b})
    for (auto x : *src) r.push_back(truncate(clamp_signed(sext(x, 16), -128, 127), 8));
  return r;
}

std::vector<std::uint64_t> phadd_i16(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
  std::vector<std::uint64_t> r;
  for (const auto* src : {&a, &b})
    for (std::size_t i = 0; i + 1 < src->size(); i += 2) r.push_back(truncate((*src)[i] + (*src)[i + 1], 16));
  return r;
}

std::vector<std::uint64_t> avg_u8(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
  std::vector<std::uint64_t> r;
  for (std::size_t i = 0; i < a.size(); ++i) r.push_back((a[i] + b[i] + 1) >> 1);
  return r;
}

std::vector<std::uint64_t> mulhi_i16(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
  std::vector<std::uint64_t> r;
  for (std::size_t i = 0; i < a.size(); ++i)
    r.push_back(truncate(static_cast<std::uint64_t>((sext(a[i], 16) * sext(b[i], 16)) >> 16), 16));
  return r;
}

std::vector<std::uint64_t> sad_u8(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
  std::vector<std::uint64_t> r;
  for (std::size_t g = 0; g + 8 <= a.size(); g += 8) {
    std::uint64_t s = 0;
    for (std::size_t i = g; i < g + 8; ++i) s += a[i] > b[i] ? a[i] - b[i] : b[i] - a[i];
    r.push_back(s);
  }
  return r;
}

LaneFn lane_procedure(const std::string& family) {
  if (family == "packus.i32") return packus_i32;
  if (family == "packss.i16") return packss_i16;
  if (family == "phadd.i16") return phadd_i16;
  if (family == "avg.u8") return avg_u8;
  if (family == "mulhi.i16") return mulhi_i16;
  if (family == "sad.u8") return sad_u8;
  return nullptr;
}

std::vector<std::uint8_t> to_bytes(const RtValue& v) {
  const unsigned eb = v.type.elem.bytes();
  std::vector<std::uint8_t> out(v.lanes.size() * eb);
  for (std::size_t i = 0; i < v.lanes.size(); ++i) std::memcpy(out.data() + i * eb, &v.lanes[i], eb);
  return out;
}

std::vector<std::uint64_t> from_bytes(const std::uint8_t* p, Type t) {
  const unsigned eb = t.elem.bytes();
  std::vector<std::uint64_t> lanes(t.lanes());
  for (std::size_t i = 0; i < lanes.size(); ++i) {
    std::uint64_t v = 0;
    std::memcpy(&v, p + i * eb, eb);
    lanes[i] = truncate(v, t.elem.bits());
  }
  return lanes;
}

std::uint64_t binary(Opcode op, ScalarType t, std::uint64_t a, std::uint64_t b) {
  const unsigned w = t.bits();
  if (t.is_float()) {
    float x = as_float(a), y = as_float(b);
    switch (op) {
    case Opcode::Add: return from_float(x + y);
    case Opcode::Sub: return from_float(x - y);
    case Opcode::Mul: return from_float(x * y);
    default: throw EvalError(EvalError::Kind::Malformed, std::string(opcode_name(op)) + " on f32");
    }
  }
  switch (op) {
  case Opcode::Add: return truncate(a + b, w);
  case Opcode::Sub: return truncate(a - b, w);
  case Opcode::Mul: return truncate(a * b, w);
  case Opcode::And: return a & b;
  case Opcode::Or: return a | b;
  case Opcode::Xor: return a ^ b;
  case Opcode::Shl: return b >= w ? 0 : truncate(a << b, w);
  case Opcode::LShr: return b >= w ? 0 : a >> b;
  case Opcode::AShr: {
    std::int64_t s = sext(a, w);
    return truncate(static_cast<std::uint64_t>(b >= w ? (s < 0 ? -1 : 0) : s >> b), w);
  }
  case Opcode::SMin: return sext(a, w) <= sext(b, w) ? a : b;
  case Opcode::SMax: return sext(a, w) >= sext(b, w) ? a : b;
  case Opcode::UMin: return std::min(a, b);
  case Opcode::UMax: return std::max(a, b);
  default: throw EvalError(EvalError::Kind::Malformed, "not a binary opcode");
  }
}

bool compare(ICmpPred p, unsigned w, std::uint64_t a, std::uint64_t b) {
  std::int64_t sa = sext(a, w), sb = sext(b, w);
  switch (p) {
  case ICmpPred::Eq: return a == b;
  case ICmpPred::Ne: return a != b;
  case ICmpPred::Slt: return sa < sb;
  case ICmpPred::Sle: return sa <= sb;
  case ICmpPred::Sgt: return sa > sb;
  case ICmpPred::Sge: return sa >= sb;
  case ICmpPred::Ult: return a < b;
  case ICmpPred::Ule: return a <= b;
  case ICmpPred::Ugt: return a > b;
  case ICmpPred::Uge: return a >= b;
  }
  return false;
}

class Evaluator {
public:
  Evaluator(const Function& fn, MemoryImage mem, std::uint64_t fuel) : fn_(fn), mem_(std::move(mem)), fuel_(fuel) {
    values_.resize(static_cast<std::size_t>(std::max<ValueId>(fn.next_id, 0)));
  }

  EvalResult run(const std::map<std::string, RtValue>& scalars) {
    bind_params(scalars);
    if (fn_.blocks.empty()) throw EvalError(EvalError::Kind::Malformed, "function has no blocks");
    std::string prev;
    std::size_t cur = 0;
    for (;;) {
      const BasicBlock& b = fn_.blocks[cur];
      ++trace_.block_visits[b.label];
      // Phis read their incoming values simultaneously.
      std::vector<std::pair<ValueId, RtValue>> phis;
      std::size_t i = 0;
      for (; i < b.insts.size() && b.insts[i].op == Opcode::Phi; ++i) {
        const Instruction& phi = b.insts[i];
        tick(phi, b.label);
        auto it = std::find(phi.labels.begin(), phi.labels.end(), prev);
        if (it == phi.labels.end())
          throw EvalError(EvalError::Kind::Malformed, "phi in " + b.label + " has no entry for " + prev);
        phis.emplace_back(phi.id, get(phi.operands.at(static_cast<std::size_t>(it - phi.labels.begin()))));
      }
      for (auto& [id, v] : phis) set(id, std::move(v));

      std::optional<std::string> next;
      for (; i < b.insts.size(); ++i) {
        const Instruction& inst = b.insts[i];
        tick(inst, b.label);
        if (inst.op == Opcode::Ret) {
          EvalResult r;
          if (!inst.operands.empty()) r.ret = get(inst.operands[0]);
          r.memory = std::move(mem_);
          r.trace = std::move(trace_);
          return r;
        }
        if (inst.op == Opcode::Br) {
          next = inst.labels.at(0);
          break;
        }
        if (inst.op == Opcode::CondBr) {
          next = get(inst.operands.at(0)).lanes.at(0) != 0 ? inst.labels.at(0) : inst.labels.at(1);
          break;
        }
        execute(inst);
      }
      if (!next) throw EvalError(EvalError::Kind::Malformed, "block " + b.label + " falls off its end");
      int idx = fn_.block_index(*next);
      if (idx < 0) throw EvalError(EvalError::Kind::Malformed, "branch to unknown block " + *next);
      prev = b.label;
      cur = static_cast<std::size_t>(idx);
    }
  }

private:
  void bind_params(const std::map<std::string, RtValue>& scalars) {
    for (const auto& p : fn_.params) {
      if (p.type.is_ptr()) {
        auto it = mem_.buffers.find(p.name);
        if (it == mem_.buffers.end())
          throw EvalError(EvalError::Kind::BadArguments, "no buffer bound to %" + p.name);
        if (!(it->second.elem == p.type.elem))
          throw EvalError(EvalError::Kind::BadArguments, "buffer for %" + p.name + " has the wrong element type");
        set(p.id, RtValue{p.type, {0}, p.name});
      } else {
        auto it = scalars.find(p.name);
        if (it == scalars.end()) throw EvalError(EvalError::Kind::BadArguments, "no value bound to %" + p.name);
        if (!(it->second.type == p.type))
          throw EvalError(EvalError::Kind::BadArguments, "value for %" + p.name + " has the wrong type");
        set(p.id, it->second);
      }
    }
  }

  void tick(const Instruction& inst, const std::string& block) {
    if (trace_.total >= fuel_) throw EvalError(EvalError::Kind::FuelExhausted, "fuel exhausted");
    ++trace_.total;
    unsigned width = inst.type.total_bits();
    bool vector = inst.type.is_vector();
    if (inst.op == Opcode::Store) {
      if (auto t = fn_.type_of(inst.operands.at(0))) {
        width = t->total_bits();
        vector = t->is_vector();
      }
    }
    ++trace_.counts[{std::string(opcode_name(inst.op)), width}];
    if (vector && inst.op != Opcode::Phi) ++trace_.vector_ops_by_block[block];
  }

  const RtValue& get(ValueId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= values_.size() || !values_[id])
      throw EvalError(EvalError::Kind::Malformed, "read of undefined value %" + std::to_string(id));
    return *values_[id];
  }

  void set(ValueId id, RtValue v) {
    if (id < 0) throw EvalError(EvalError::Kind::Malformed, "bad value id");
    if (static_cast<std::size_t>(id) >= values_.size()) values_.resize(static_cast<std::size_t>(id) + 1);
    values_[id] = std::move(v);
  }

  // Byte range [offset, offset + n) of the buffer behind `ptr`.
  std::uint8_t* address(const RtValue& ptr, const Type& access) {
    auto it = mem_.buffers.find(ptr.base);
    if (it == mem_.buffers.end()) throw EvalError(EvalError::Kind::Malformed, "pointer without a buffer");
    Buffer& buf = it->second;
    const std::int64_t index = static_cast<std::int64_t>(ptr.lanes.at(0));
    const std::uint64_t n = access.total_bytes();
    const std::uint64_t eb = buf.elem.bytes();
    if (index < 0 || static_cast<std::uint64_t>(index) > buf.bytes.size() / eb ||
        static_cast<std::uint64_t>(index) * eb + n > buf.bytes.size())
      throw EvalError(EvalError::Kind::OutOfBounds, "access of " + std::to_string(n) + " bytes at %" + ptr.base +
                                                        "[" + std::to_string(index) + "] is out of bounds (length " +
                                                        std::to_string(buf.length()) + ")");
    return buf.bytes.data() + static_cast<std::uint64_t>(index) * eb;
  }

  void execute(const Instruction& inst) {
    const Type& t = inst.type;
    const unsigned w = t.elem.bits();
    auto op = [&](std::size_t k) -> const RtValue& { return get(inst.operands.at(k)); };

    if (is_binary_op(inst.op)) {
      const RtValue& a = op(0);
      const RtValue& b = op(1);
      RtValue r{t, std::vector<std::uint64_t>(a.lanes.size()), {}};
      for (std::size_t i = 0; i < a.lanes.size(); ++i) r.lanes[i] = binary(inst.op, t.elem, a.lanes[i], b.lanes.at(i));
      return set(inst.id, std::move(r));
    }
    switch (inst.op) {
    case Opcode::ICmp: {
      const RtValue& a = op(0);
      const RtValue& b = op(1);
      const unsigned ow = a.type.elem.bits();
      RtValue r{t, std::vector<std::uint64_t>(a.lanes.size()), {}};
      const std::uint64_t ones = truncate(~0ULL, w);
      for (std::size_t i = 0; i < a.lanes.size(); ++i)
        r.lanes[i] = compare(inst.pred, ow, a.lanes[i], b.lanes.at(i)) ? ones : 0;
      return set(inst.id, std::move(r));
    }
    case Opcode::Select: {
      const RtValue& c = op(0);
      const RtValue& a = op(1);
      const RtValue& b = op(2);
      RtValue r{t, std::vector<std::uint64_t>(a.lanes.size()), {}};
      for (std::size_t i = 0; i < a.lanes.size(); ++i) {
        bool take = c.lanes.size() == 1 ? c.lanes[0] != 0 : c.lanes.at(i) != 0;
        r.lanes[i] = take ? a.lanes[i] : b.lanes.at(i);
      }
      return set(inst.id, std::move(r));
    }
    case Opcode::Const: {
      RtValue r{t, {}, {}};
      for (const auto& l : inst.constant) r.lanes.push_back(l ? truncate(*l, w) : 0);
      return set(inst.id, std::move(r));
    }
    case Opcode::Load: {
      const std::uint8_t* p = address(op(0), t);
      return set(inst.id, RtValue{t, from_bytes(p, t), {}});
    }
    case Opcode::Store: {
      const RtValue& v = op(0);
      std::uint8_t* p = address(op(1), v.type);
      auto bytes = to_bytes(v);
      std::memcpy(p, bytes.data(), bytes.size());
      return;
    }
    case Opcode::PtrAdd: {
      const RtValue& base = op(0);
      const RtValue& idx = op(1);
      RtValue r = base;
      r.lanes[0] = base.lanes.at(0) + static_cast<std::uint64_t>(sext(idx.lanes.at(0), idx.type.elem.bits()));
      return set(inst.id, std::move(r));
    }
    case Opcode::Shuffle: {
      const RtValue& a = op(0);
      const RtValue& b = op(1);
      RtValue r{t, {}, {}};
      for (int m : inst.mask) {
        if (m == kUndefLane) r.lanes.push_back(0);
        else if (static_cast<std::size_t>(m) < a.lanes.size()) r.lanes.push_back(a.lanes[m]);
        else r.lanes.push_back(b.lanes.at(static_cast<std::size_t>(m) - a.lanes.size()));
      }
      return set(inst.id, std::move(r));
    }
    case Opcode::Call: {
      std::vector<RtValue> args;
      for (std::size_t k = 0; k < inst.operands.size(); ++k) args.push_back(op(k));
      return set(inst.id, eval_intrinsic(inst.callee, args));
    }
    case Opcode::Bitcast: {
      auto bytes = to_bytes(op(0));
      if (bytes.size() != t.total_bytes()) throw EvalError(EvalError::Kind::Malformed, "bitcast size mismatch");
      return set(inst.id, RtValue{t, from_bytes(bytes.data(), t), {}});
    }
    case Opcode::ExtractSubvec: {
      const RtValue& src = op(0);
      if (inst.offset + t.lanes() > src.lanes.size())
        throw EvalError(EvalError::Kind::Malformed, "extract_subvec out of range");
      std::vector<std::uint64_t> lanes(src.lanes.begin() + inst.offset, src.lanes.begin() + inst.offset + t.lanes());
      return set(inst.id, RtValue{t, std::move(lanes), {}});
    }
    default: throw EvalError(EvalError::Kind::Malformed, "cannot execute " + std::string(opcode_name(inst.op)));
    }
  }

  const Function& fn_;
  MemoryImage mem_;
  std::uint64_t fuel_;
  ExecTrace trace_;
  std::vector<std::optional<RtValue>> values_;
};

} // namespace

RtValue eval_intrinsic(const std::string& name, const std::vector<RtValue>& operands) {
  const IntrinsicSignature* sig = find_intrinsic(name);
  LaneFn fn = sig ? lane_procedure(sig->family) : nullptr;
  if (!fn) throw EvalError(EvalError::Kind::UnknownIntrinsic, "no semantics for @" + name);
  if (operands.size() != sig->operands.size())
    throw EvalError(EvalError::Kind::BadArguments, "@" + name + " expects " + std::to_string(sig->operands.size()) +
                                                       " operands");
  for (std::size_t k = 0; k < operands.size(); ++k)
    if (!(operands[k].type == sig->operands[k]) || operands[k].lanes.size() != sig->operands[k].lanes())
      throw EvalError(EvalError::Kind::BadArguments, "@" + name + " operand " + std::to_string(k) + " has type " +
                                                         to_string(operands[k].type));
  const unsigned in_per_lane = 128 / sig->operands[0].elem.bits();
  const unsigned lanes128 = sig->bits / 128;
  RtValue r{sig->result, {}, {}};
  for (unsigned j = 0; j < lanes128; ++j) {
    auto slice = [&](const RtValue& v) {
      return std::vector<std::uint64_t>(v.lanes.begin() + j * in_per_lane, v.lanes.begin() + (j + 1) * in_per_lane);
    };
    auto part = fn(slice(operands[0]), slice(operands[1]));
    r.lanes.insert(r.lanes.end(), part.begin(), part.end());
  }
  return r;
}

EvalResult eval_function(const Function& fn, const std::map<std::string, RtValue>& scalars, MemoryImage memory,
                         std::uint64_t fuel) {
  return Evaluator(fn, std::move(memory), fuel).run(scalars);
}

double DynamicSummary::ratio(unsigned narrow_bits, unsigned wide_bits) const {
  auto n = vector_ops_by_width.find(narrow_bits);
  auto w = vector_ops_by_width.find(wide_bits);
  if (w == vector_ops_by_width.end() || w->second == 0) return 0.0;
  return static_cast<double>(n == vector_ops_by_width.end() ? 0 : n->second) / static_cast<double>(w->second);
}

DynamicSummary count_dynamic_ops(const ExecTrace& trace) {
  DynamicSummary s;
  s.counts = trace.counts;
  s.total = trace.total;
  for (const auto& [key, n] : trace.counts) {
    const auto& [cls, width] = key;
    if (cls == "phi" || width < 128) continue;
    s.vector_ops_by_width[width] += n;
    s.vector_ops += n;
  }
  return s;
}

} // namespace revec

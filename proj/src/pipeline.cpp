#include "revec/pipeline.hpp"

#include "revec/textio.hpp"

#include <bit>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace revec {

PipelineOutput run_pipeline(const ProgramModule& m, const TargetDesc& target, const IntrinsicMap& imap) {
  PipelineOutput out;
  out.transformed.target_hint = m.target_hint;
  for (const auto& fn : m.functions) {
    FunctionReport rep;
    rep.name = fn.name;
    PreprocessResult pre = preprocess(fn, target);
    rep.loops = std::move(pre.loops);
    rep.rejected_loops = std::move(pre.rejected);
    RevecResult rv = revectorize(pre.fn, target, imap);
    rep.graphs = std::move(rv.graphs);
    out.transformed.functions.push_back(std::move(rv.fn));
    out.reports.push_back(std::move(rep));
  }
  return out;
}

std::string_view verdict_name(Verdict v) {
  switch (v) {
  case Verdict::Pass: return "PASS";
  case Verdict::Fail: return "FAIL";
  case Verdict::Indeterminate: return "INDETERMINATE";
  }
  return "?";
}

namespace {

std::uint64_t random_lane(std::mt19937_64& rng, ScalarType t) {
  if (t.is_float()) {
    std::uniform_real_distribution<float> d(0.5f, 1.5f);
    return std::bit_cast<std::uint32_t>(d(rng));
  }
  std::uint64_t v = rng();
  return t.bits() >= 64 ? v : v & ((1ULL << t.bits()) - 1);
}

bool lanes_match(ScalarType t, std::uint64_t a, std::uint64_t b, bool tolerant) {
  if (a == b) return true;
  if (!tolerant || !t.is_float()) return false;
  float x = std::bit_cast<float>(static_cast<std::uint32_t>(a));
  float y = std::bit_cast<float>(static_cast<std::uint32_t>(b));
  return std::fabs(x - y) <= 1e-5f * std::max(std::fabs(x), std::fabs(y));
}

std::string describe_args(const std::map<std::string, RtValue>& scalars, std::uint64_t seed) {
  std::ostringstream os;
  os << "input seed " << seed;
  for (const auto& [name, v] : scalars) os << ", %" << name << " = " << format_lane(v.type.elem, v.lanes.at(0));
  return os.str();
}

/// First difference between two results, or empty.
std::string compare(const EvalResult& a, const EvalResult& b, bool tolerant) {
  if (a.ret.has_value() != b.ret.has_value()) return "return value presence differs";
  if (a.ret) {
    if (!(a.ret->type == b.ret->type) || a.ret->lanes.size() != b.ret->lanes.size()) return "return type differs";
    for (std::size_t i = 0; i < a.ret->lanes.size(); ++i)
      if (!lanes_match(a.ret->type.elem, a.ret->lanes[i], b.ret->lanes[i], tolerant))
        return "return lane " + std::to_string(i) + ": expected " + format_lane(a.ret->type.elem, a.ret->lanes[i]) +
               ", got " + format_lane(a.ret->type.elem, b.ret->lanes[i]);
  }
  for (const auto& [name, buf] : a.memory.buffers) {
    auto it = b.memory.buffers.find(name);
    if (it == b.memory.buffers.end()) return "buffer %" + name + " missing";
    for (std::size_t i = 0; i < buf.length(); ++i) {
      std::uint64_t x = buf.get(i), y = it->second.get(i);
      if (!lanes_match(buf.elem, x, y, tolerant))
        return "%" + name + "[" + std::to_string(i) + "]: expected " + format_lane(buf.elem, x) + ", got " +
               format_lane(buf.elem, y);
    }
  }
  return {};
}

} // namespace

std::pair<std::map<std::string, RtValue>, MemoryImage> random_arguments(const Function& fn, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::map<std::string, RtValue> scalars;
  MemoryImage mem;
  for (const auto& p : fn.params) {
    if (p.type.is_ptr()) {
      Buffer b(p.type.elem, kCheckBufferElements);
      for (std::size_t i = 0; i < b.length(); ++i) b.set(i, random_lane(rng, p.type.elem));
      mem.buffers[p.name] = std::move(b);
    } else if (p.type.is_scalar()) {
      std::uint64_t v = p.type.elem.is_float() ? random_lane(rng, p.type.elem) : rng() % 256;
      scalars[p.name] = RtValue::scalar(p.type.elem, v);
    } else {
      std::vector<std::uint64_t> lanes;
      for (unsigned i = 0; i < p.type.lanes(); ++i) lanes.push_back(random_lane(rng, p.type.elem));
      scalars[p.name] = RtValue::vector(p.type, std::move(lanes));
    }
  }
  return {std::move(scalars), std::move(mem)};
}

EquivalenceResult check_equivalence(const Function& original, const Function& transformed, std::size_t n,
                                    std::uint64_t seed, std::uint64_t fuel) {
  if (n == 0) throw std::invalid_argument("equivalence check needs at least one input");
  EquivalenceResult r;
  r.function = original.name;
  const bool tolerant = original.reassoc;
  for (std::size_t k = 0; k < n; ++k) {
    const std::uint64_t input_seed = seed + k;
    auto [scalars, mem] = random_arguments(original, input_seed);
    EvalResult a, b;
    try {
      a = eval_function(original, scalars, mem, fuel);
    } catch (const EvalError& e) {
      r.verdict = Verdict::Indeterminate;
      r.detail = std::string("original: ") + e.what() + " (" + describe_args(scalars, input_seed) + ")";
      if (e.kind() != EvalError::Kind::FuelExhausted) r.verdict = Verdict::Fail;
      return r;
    }
    try {
      b = eval_function(transformed, scalars, std::move(mem), fuel);
    } catch (const EvalError& e) {
      r.verdict = e.kind() == EvalError::Kind::FuelExhausted ? Verdict::Indeterminate : Verdict::Fail;
      r.detail = std::string("transformed: ") + e.what() + " (" + describe_args(scalars, input_seed) + ")";
      return r;
    }
    if (k == 0) {
      r.before = count_dynamic_ops(a.trace);
      r.after = count_dynamic_ops(b.trace);
    }
    ++r.inputs_checked;
    if (std::string diff = compare(a, b, tolerant); !diff.empty()) {
      r.verdict = Verdict::Fail;
      r.detail = diff + " (" + describe_args(scalars, input_seed) + ")";
      return r;
    }
  }
  return r;
}

} // namespace revec

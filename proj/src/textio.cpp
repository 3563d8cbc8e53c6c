#include "revec/textio.hpp"

#include "revec/intrinsics.hpp"

#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <map>
#include <set>
#include <sstream>

namespace revec {

std::string to_string(const SourceSpan& s) {
  return s.file + ":" + std::to_string(s.line) + ":" + std::to_string(s.column);
}

VerifyError::VerifyError(std::vector<Diagnostic> diags)
    : std::runtime_error([&] {
        std::string msg = "verification failed";
        for (const auto& d : diags) msg += "\n  " + to_string(d);
        return msg;
      }()),
      diags_(std::move(diags)) {}

namespace {

enum class Tok { End, Ident, Local, Global, Number, Punct };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  int line = 1;
  int column = 1;
};

class Lexer {
public:
  Lexer(std::string_view src, std::string file) : src_(src), file_(std::move(file)) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space();
      Token t;
      t.line = line_;
      t.column = col_;
      if (pos_ >= src_.size()) {
        out.push_back(t);
        return out;
      }
      char c = src_[pos_];
      if (c == '%' || c == '@') {
        advance();
        t.kind = c == '%' ? Tok::Local : Tok::Global;
        t.text = take_while(is_ident_char);
        if (t.text.empty()) fail(t, std::string("expected a name after '") + c + "'");
      } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                 ((c == '-' || c == '+') && pos_ + 1 < src_.size() &&
                  (std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])) || src_[pos_ + 1] == 'i' ||
                   src_[pos_ + 1] == 'n'))) {
        t.kind = Tok::Number;
        t.text.push_back(c);
        advance();
        t.text += take_while([](char ch) {
          return std::isalnum(static_cast<unsigned char>(ch)) || ch == '.' || ch == '+' || ch == '-';
        });
      } else if (is_ident_char(c)) {
        t.kind = Tok::Ident;
        t.text = take_while(is_ident_char);
      } else if (c == '-' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '>') {
        t.kind = Tok::Punct;
        t.text = "->";
        advance();
        advance();
      } else if (std::strchr("(){}[]<>,:=", c) != nullptr && c != '\0') {
        t.kind = Tok::Punct;
        t.text = std::string(1, c);
        advance();
      } else {
        fail(t, "unexpected character '" + printable(c) + "'");
      }
      out.push_back(std::move(t));
    }
  }

private:
  static bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.'; }

  static std::string printable(char c) {
    if (std::isprint(static_cast<unsigned char>(c))) return std::string(1, c);
    char buf[8];
    std::snprintf(buf, sizeof buf, "\\x%02x", static_cast<unsigned char>(c));
    return buf;
  }

  [[noreturn]] void fail(const Token& t, const std::string& msg) const {
    throw ParseError({file_, t.line, t.column}, msg);
  }

  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  template <typename Pred>
  std::string take_while(Pred p) {
    std::string s;
    while (pos_ < src_.size() && p(src_[pos_])) {
      s.push_back(src_[pos_]);
      advance();
    }
    return s;
  }

  void skip_space() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == ';') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        return;
      }
    }
  }

  std::string_view src_;
  std::string file_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

// Instruction with operands still referring to names; resolved once the
// whole function body has been read (phis may refer forward).
struct PendingInst {
  Instruction inst;
  std::vector<std::string> operand_names;
  std::vector<SourceSpan> operand_spans;
  SourceSpan span;
  bool derived_type = false;
};

class Parser {
public:
  Parser(std::vector<Token> toks, std::string file) : toks_(std::move(toks)), file_(std::move(file)) {}

  ProgramModule module() {
    ProgramModule m;
    if (is_ident("target")) {
      next();
      m.target_hint = expect(Tok::Ident, "target name").text;
    }
    while (peek().kind != Tok::End) {
      if (!is_ident("func")) fail(peek(), "expected `func`");
      m.functions.push_back(function());
    }
    return m;
  }

private:
  const Token& peek(std::size_t ahead = 0) const {
    std::size_t i = std::min(pos_ + ahead, toks_.size() - 1);
    return toks_[i];
  }
  const Token& next() {
    const Token& t = peek();
    if (pos_ < toks_.size() - 1) ++pos_;
    return t;
  }
  bool is_ident(std::string_view s) const { return peek().kind == Tok::Ident && peek().text == s; }
  bool is_punct(std::string_view s, std::size_t ahead = 0) const {
    return peek(ahead).kind == Tok::Punct && peek(ahead).text == s;
  }
  SourceSpan span_of(const Token& t) const { return {file_, t.line, t.column}; }

  [[noreturn]] void fail(const Token& t, const std::string& msg) const {
    std::string got = t.kind == Tok::End ? "end of input" : "`" + t.text + "`";
    throw ParseError(span_of(t), msg + " (got " + got + ")");
  }

  const Token& expect(Tok kind, const char* what) {
    if (peek().kind != kind) fail(peek(), std::string("expected ") + what);
    return next();
  }
  void expect_punct(std::string_view p) {
    if (!is_punct(p)) fail(peek(), "expected `" + std::string(p) + "`");
    next();
  }

  template <typename Int>
  Int integer(const Token& t) {
    Int v{};
    auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (ec != std::errc{} || p != t.text.data() + t.text.size()) fail(t, "expected an integer literal");
    return v;
  }

  ScalarType scalar_type() {
    const Token& t = expect(Tok::Ident, "a scalar type");
    auto s = scalar_from_name(t.text);
    if (!s) fail(t, "unknown scalar type");
    return *s;
  }

  Type type() {
    if (is_punct("<")) {
      next();
      const Token& n = expect(Tok::Number, "an element count");
      auto count = integer<unsigned>(n);
      if (count == 0 || count > 4096) fail(n, "vector element count out of range");
      const Token& x = expect(Tok::Ident, "`x`");
      if (x.text != "x") fail(x, "expected `x`");
      ScalarType e = scalar_type();
      expect_punct(">");
      return Type::vector(e, count);
    }
    if (is_ident("ptr")) {
      next();
      expect_punct("<");
      ScalarType e = scalar_type();
      expect_punct(">");
      return Type::ptr(e);
    }
    return Type::scalar(scalar_type());
  }

  ConstLane lane(ScalarType t) {
    const Token& tok = next();
    if (tok.kind == Tok::Ident && tok.text == "u") return std::nullopt;
    if (t.is_float()) {
      if (tok.kind != Tok::Number && tok.kind != Tok::Ident) fail(tok, "expected a float literal");
      std::string_view s = tok.text;
      if (!s.empty() && s.front() == '+') s.remove_prefix(1);
      float f = 0;
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), f);
      if (ec != std::errc{} || p != s.data() + s.size()) fail(tok, "expected a float literal");
      return static_cast<std::uint64_t>(std::bit_cast<std::uint32_t>(f));
    }
    if (tok.kind != Tok::Number) fail(tok, "expected an integer literal");
    std::string_view s = tok.text;
    bool neg = false;
    if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
      neg = s.front() == '-';
      s.remove_prefix(1);
    }
    std::uint64_t mag = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), mag);
    if (ec != std::errc{} || p != s.data() + s.size() || s.empty()) fail(tok, "expected a decimal integer literal");
    const unsigned bits = t.bits();
    const std::uint64_t mask = bits == 64 ? ~0ULL : ((1ULL << bits) - 1);
    if (neg) {
      // Magnitude up to 2^(bits-1) is representable in the signed range.
      const std::uint64_t limit = bits == 1 ? 1 : (1ULL << (bits - 1));
      if (mag > limit) fail(tok, "literal out of range for " + std::string(scalar_name(t)));
      return (~mag + 1) & mask;
    }
    if (bits < 64 && mag > mask) fail(tok, "literal out of range for " + std::string(scalar_name(t)));
    return mag;
  }

  std::string local_name(PendingInst& p) {
    const Token& t = expect(Tok::Local, "a %value");
    p.operand_names.push_back(t.text);
    p.operand_spans.push_back(span_of(t));
    return t.text;
  }

  std::vector<int> mask() {
    expect_punct("[");
    std::vector<int> m;
    if (!is_punct("]")) {
      for (;;) {
        const Token& t = next();
        if (t.kind == Tok::Ident && t.text == "u") {
          m.push_back(kUndefLane);
        } else if (t.kind == Tok::Number) {
          long v = integer<long>(t);
          if (v < 0 || v > 1 << 20) fail(t, "mask index out of range");
          m.push_back(static_cast<int>(v));
        } else {
          fail(t, "expected a mask index or `u`");
        }
        if (is_punct("]")) break;
        expect_punct(",");
      }
    }
    next();
    return m;
  }

  Function function() {
    next(); // func
    Function fn;
    fn.name = expect(Tok::Global, "@name").text;
    names_.clear();
    expect_punct("(");
    if (!is_punct(")")) {
      for (;;) {
        const Token& n = expect(Tok::Local, "a parameter name");
        expect_punct(":");
        Param p{n.text, type(), fn.fresh_id()};
        if (!names_.emplace(p.name, p.id).second) fail(n, "redefinition of %" + p.name);
        fn.params.push_back(std::move(p));
        if (is_punct(")")) break;
        expect_punct(",");
      }
    }
    next();
    if (is_punct("->")) {
      next();
      fn.return_type = type();
    }
    if (is_ident("reassoc")) {
      next();
      fn.reassoc = true;
    }
    expect_punct("{");

    std::vector<std::vector<PendingInst>> bodies;
    while (!is_punct("}")) {
      const Token& l = expect(Tok::Ident, "a block label");
      expect_punct(":");
      BasicBlock b;
      b.label = l.text;
      fn.blocks.push_back(std::move(b));
      bodies.emplace_back();
      while (!is_punct("}") && !(peek().kind == Tok::Ident && is_punct(":", 1))) {
        if (peek().kind == Tok::End) fail(peek(), "unterminated function body");
        bodies.back().push_back(instruction(fn));
      }
    }
    next();
    resolve(fn, bodies);
    return fn;
  }

  PendingInst instruction(Function& fn) {
    PendingInst p;
    p.span = span_of(peek());
    std::string result;
    const Token* result_tok = nullptr;
    if (peek().kind == Tok::Local) {
      result_tok = &next();
      result = result_tok->text;
      expect_punct("=");
    }
    const Token& opt = expect(Tok::Ident, "an opcode");
    auto op = opcode_from_name(opt.text);
    if (!op) fail(opt, "unknown opcode");
    Instruction& inst = p.inst;
    inst.op = *op;
    inst.id = fn.fresh_id();

    const bool produces = !(inst.op == Opcode::Store || is_terminator(inst.op));
    if (produces && !result_tok) fail(opt, std::string(opt.text) + " needs a result name");
    if (!produces && result_tok) fail(*result_tok, std::string(opt.text) + " produces no value");
    if (result_tok && !names_.emplace(result, inst.id).second) fail(*result_tok, "redefinition of %" + result);

    if (is_binary_op(inst.op)) {
      inst.type = type();
      local_name(p);
      expect_punct(",");
      local_name(p);
      return p;
    }
    switch (inst.op) {
    case Opcode::ICmp: {
      const Token& pt = expect(Tok::Ident, "an icmp predicate");
      auto pr = pred_from_name(pt.text);
      if (!pr) fail(pt, "unknown icmp predicate");
      inst.pred = *pr;
      Type ot = type();
      inst.type = ot.is_vector() ? ot : Type::scalar(ScalarKind::I1);
      local_name(p);
      expect_punct(",");
      local_name(p);
      return p;
    }
    case Opcode::Select:
      inst.type = type();
      local_name(p);
      expect_punct(",");
      local_name(p);
      expect_punct(",");
      local_name(p);
      return p;
    case Opcode::Const:
      inst.type = type();
      if (inst.type.is_ptr()) fail(opt, "pointer constants are not supported");
      if (is_punct("[")) {
        next();
        if (!is_punct("]")) {
          for (;;) {
            inst.constant.push_back(lane(inst.type.elem));
            if (is_punct("]")) break;
            expect_punct(",");
          }
        }
        next();
      } else {
        inst.constant.push_back(lane(inst.type.elem));
      }
      return p;
    case Opcode::Load:
      inst.type = type();
      local_name(p);
      return p;
    case Opcode::Store:
      local_name(p);
      expect_punct(",");
      local_name(p);
      return p;
    case Opcode::PtrAdd:
      local_name(p);
      expect_punct(",");
      local_name(p);
      p.derived_type = true;
      return p;
    case Opcode::Phi:
      inst.type = type();
      expect_punct("[");
      if (!is_punct("]")) {
        for (;;) {
          inst.labels.push_back(expect(Tok::Ident, "an incoming block label").text);
          expect_punct(":");
          local_name(p);
          if (is_punct("]")) break;
          expect_punct(",");
        }
      }
      next();
      return p;
    case Opcode::Shuffle:
      local_name(p);
      expect_punct(",");
      local_name(p);
      expect_punct(",");
      inst.mask = mask();
      p.derived_type = true;
      return p;
    case Opcode::Call: {
      const Token& c = expect(Tok::Global, "@intrinsic");
      inst.callee = c.text;
      const IntrinsicSignature* sig = find_intrinsic(inst.callee);
      if (!sig) fail(c, "unknown intrinsic @" + inst.callee);
      inst.type = sig->result;
      expect_punct("(");
      if (!is_punct(")")) {
        for (;;) {
          local_name(p);
          if (is_punct(")")) break;
          expect_punct(",");
        }
      }
      next();
      return p;
    }
    case Opcode::Bitcast:
      inst.type = type();
      local_name(p);
      return p;
    case Opcode::ExtractSubvec: {
      inst.type = type();
      local_name(p);
      expect_punct(",");
      inst.offset = integer<std::uint32_t>(expect(Tok::Number, "a lane offset"));
      return p;
    }
    case Opcode::Br:
      inst.labels.push_back(expect(Tok::Ident, "a target label").text);
      return p;
    case Opcode::CondBr:
      local_name(p);
      expect_punct(",");
      inst.labels.push_back(expect(Tok::Ident, "a target label").text);
      expect_punct(",");
      inst.labels.push_back(expect(Tok::Ident, "a target label").text);
      return p;
    case Opcode::Ret:
      if (peek().kind == Tok::Local) local_name(p);
      return p;
    default: fail(opt, "unexpected opcode");
    }
  }

  void resolve(Function& fn, std::vector<std::vector<PendingInst>>& bodies) {
    for (auto& body : bodies)
      for (auto& p : body)
        for (std::size_t k = 0; k < p.operand_names.size(); ++k) {
          auto it = names_.find(p.operand_names[k]);
          if (it == names_.end())
            throw ParseError(p.operand_spans[k], "use of undefined value %" + p.operand_names[k]);
          p.inst.operands.push_back(it->second);
        }

    // Result types of ptradd and shuffle follow from their operands; iterate
    // in case a definition appears textually after its use.
    std::map<ValueId, Type> known;
    for (const auto& prm : fn.params) known[prm.id] = prm.type;
    for (auto& body : bodies)
      for (auto& p : body)
        if (!p.derived_type && p.inst.has_result()) known[p.inst.id] = p.inst.type;
    bool progress = true;
    while (progress) {
      progress = false;
      for (auto& body : bodies)
        for (auto& p : body) {
          if (!p.derived_type || known.count(p.inst.id)) continue;
          auto it = known.find(p.inst.operands.at(0));
          if (it == known.end()) continue;
          if (p.inst.op == Opcode::PtrAdd) {
            if (!it->second.is_ptr()) throw ParseError(p.span, "ptradd base must be a pointer");
            p.inst.type = it->second;
          } else {
            if (!it->second.is_vector()) throw ParseError(p.span, "shuffle operands must be vectors");
            if (p.inst.mask.empty()) throw ParseError(p.span, "shuffle mask is empty");
            p.inst.type = it->second.with_count(static_cast<unsigned>(p.inst.mask.size()));
          }
          known[p.inst.id] = p.inst.type;
          progress = true;
        }
    }
    for (std::size_t b = 0; b < bodies.size(); ++b)
      for (auto& p : bodies[b]) {
        if (p.derived_type && !known.count(p.inst.id))
          throw ParseError(p.span, "cannot infer the result type (cyclic definition)");
        fn.blocks[b].insts.push_back(std::move(p.inst));
      }
  }

  std::vector<Token> toks_;
  std::string file_;
  std::size_t pos_ = 0;
  std::map<std::string, ValueId> names_;
};

class Printer {
public:
  explicit Printer(const Function& fn) : fn_(fn) {
    std::set<std::string> taken;
    for (const auto& p : fn.params) {
      names_[p.id] = p.name;
      taken.insert(p.name);
    }
    int n = 0;
    for (const auto& b : fn.blocks)
      for (const auto& i : b.insts) {
        if (!i.has_result()) continue;
        while (taken.count(std::to_string(n))) ++n;
        names_[i.id] = std::to_string(n++);
      }
  }

  std::string run() {
    std::ostringstream os;
    os << "func @" << fn_.name << "(";
    for (std::size_t i = 0; i < fn_.params.size(); ++i) {
      if (i) os << ", ";
      os << "%" << fn_.params[i].name << ": " << to_string(fn_.params[i].type);
    }
    os << ")";
    if (fn_.return_type) os << " -> " << to_string(*fn_.return_type);
    if (fn_.reassoc) os << " reassoc";
    os << " {\n";
    for (const auto& b : fn_.blocks) {
      os << b.label << ":\n";
      for (const auto& i : b.insts) os << "  " << inst(i) << "\n";
    }
    os << "}\n";
    return os.str();
  }

private:
  std::string v(ValueId id) const {
    auto it = names_.find(id);
    return "%" + (it == names_.end() ? "?" + std::to_string(id) : it->second);
  }

  std::string list(const std::vector<ValueId>& ids) const {
    std::string s;
    for (std::size_t k = 0; k < ids.size(); ++k) s += (k ? ", " : "") + v(ids[k]);
    return s;
  }

  std::string inst(const Instruction& i) const {
    std::string s;
    if (i.has_result()) s = v(i.id) + " = ";
    s += opcode_name(i.op);
    const auto& ops = i.operands;
    auto operand_type = [&](std::size_t k) {
      auto t = k < ops.size() ? fn_.type_of(ops[k]) : std::nullopt;
      return t ? to_string(*t) : std::string("?");
    };
    if (is_binary_op(i.op) || i.op == Opcode::Select) return s + " " + to_string(i.type) + " " + list(ops);
    switch (i.op) {
    case Opcode::ICmp:
      return s + " " + std::string(pred_name(i.pred)) + " " + operand_type(0) + " " + list(ops);
    case Opcode::Const: {
      s += " " + to_string(i.type) + " ";
      auto lane = [&](const ConstLane& l) { return l ? format_lane(i.type.elem, *l) : std::string("u"); };
      if (!i.type.is_vector() && i.constant.size() == 1) return s + lane(i.constant[0]);
      s += "[";
      for (std::size_t k = 0; k < i.constant.size(); ++k) s += (k ? ", " : "") + lane(i.constant[k]);
      return s + "]";
    }
    case Opcode::Load:
    case Opcode::Bitcast: return s + " " + to_string(i.type) + " " + list(ops);
    case Opcode::Store:
    case Opcode::PtrAdd: return s + " " + list(ops);
    case Opcode::Phi: {
      s += " " + to_string(i.type) + " [";
      for (std::size_t k = 0; k < ops.size(); ++k)
        s += (k ? ", " : "") + (k < i.labels.size() ? i.labels[k] : std::string("?")) + ": " + v(ops[k]);
      return s + "]";
    }
    case Opcode::Shuffle: {
      s += " " + list(ops) + ", [";
      for (std::size_t k = 0; k < i.mask.size(); ++k)
        s += (k ? ", " : "") + (i.mask[k] == kUndefLane ? std::string("u") : std::to_string(i.mask[k]));
      return s + "]";
    }
    case Opcode::Call: return s + " @" + i.callee + "(" + list(ops) + ")";
    case Opcode::ExtractSubvec: return s + " " + to_string(i.type) + " " + list(ops) + ", " + std::to_string(i.offset);
    case Opcode::Br: return s + " " + (i.labels.empty() ? "?" : i.labels[0]);
    case Opcode::CondBr:
      return s + " " + list(ops) + ", " + (i.labels.size() > 0 ? i.labels[0] : "?") + ", " +
             (i.labels.size() > 1 ? i.labels[1] : "?");
    case Opcode::Ret: return ops.empty() ? s : s + " " + list(ops);
    default: return s;
    }
  }

  const Function& fn_;
  std::map<ValueId, std::string> names_;
};

} // namespace

std::string format_lane(ScalarType t, std::uint64_t bits) {
  if (t.is_float()) {
    float f = std::bit_cast<float>(static_cast<std::uint32_t>(bits));
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, f);
    return ec == std::errc{} ? std::string(buf, p) : std::string("nan");
  }
  const unsigned w = t.bits();
  const std::uint64_t mask = w == 64 ? ~0ULL : ((1ULL << w) - 1);
  bits &= mask;
  if (t.is_signed() && w < 64 && (bits >> (w - 1)) & 1) {
    std::int64_t v = static_cast<std::int64_t>(bits | ~mask);
    return std::to_string(v);
  }
  if (t.is_signed() && w == 64) return std::to_string(static_cast<std::int64_t>(bits));
  return std::to_string(bits);
}

ProgramModule parse_unverified(std::string_view text, std::string_view filename) {
  std::string file(filename);
  return Parser(Lexer(text, file).run(), file).module();
}

ProgramModule parse(std::string_view text, std::string_view filename) {
  ProgramModule m = parse_unverified(text, filename);
  if (auto diags = verify(m); !diags.empty()) throw VerifyError(std::move(diags));
  return m;
}

std::string print(const Function& fn) { return Printer(fn).run(); }

std::string print(const ProgramModule& m) {
  std::string out;
  if (m.target_hint) out += "target " + *m.target_hint + "\n\n";
  for (std::size_t i = 0; i < m.functions.size(); ++i) {
    if (i) out += "\n";
    out += print(m.functions[i]);
  }
  return out;
}

} // namespace revec

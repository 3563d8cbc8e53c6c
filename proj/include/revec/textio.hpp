#pragma once

#include "revec/ir.hpp"
#include "revec/verify.hpp"

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace revec {

struct SourceSpan {
  std::string file;
  int line = 1;
  int column = 1;
};

std::string to_string(const SourceSpan& s);

class ParseError : public std::runtime_error {
public:
  ParseError(SourceSpan span, const std::string& msg)
      : std::runtime_error(to_string(span) + ": " + msg), span_(std::move(span)) {}
  const SourceSpan& span() const { return span_; }

private:
  SourceSpan span_;
};

class VerifyError : public std::runtime_error {
public:
  explicit VerifyError(std::vector<Diagnostic> diags);
  const std::vector<Diagnostic>& diagnostics() const { return diags_; }

private:
  std::vector<Diagnostic> diags_;
};

/// Parses `.vir` text. Throws ParseError on syntax errors and VerifyError
/// when the module is well-formed text but fails verification.
ProgramModule parse(std::string_view text, std::string_view filename = "<input>");

/// Parses without running the verifier (syntax and name resolution only).
ProgramModule parse_unverified(std::string_view text, std::string_view filename = "<input>");

/// Canonical text: parameters keep their names, instruction results are
/// renumbered %0, %1, ... in program order.
std::string print(const ProgramModule& m);
std::string print(const Function& fn);

/// Decimal rendering of one constant lane for the given element type.
std::string format_lane(ScalarType t, std::uint64_t bits);

} // namespace revec

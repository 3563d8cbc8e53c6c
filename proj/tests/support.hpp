#pragma once

#include "revec/ir.hpp"
#include "revec/textio.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#ifndef REVEC_SOURCE_DIR
#define REVEC_SOURCE_DIR "."
#endif

namespace testsupport {

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::filesystem::path source_dir() { return REVEC_SOURCE_DIR; }
inline std::filesystem::path corpus_dir() { return source_dir() / "corpus"; }

inline std::vector<std::filesystem::path> corpus_files() {
  std::vector<std::filesystem::path> out;
  for (const auto& e : std::filesystem::directory_iterator(corpus_dir()))
    if (e.path().extension() == ".vir") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

inline revec::ProgramModule load_corpus(const std::string& name) {
  auto p = corpus_dir() / name;
  return revec::parse(read_text(p), p.string());
}

inline revec::Function parse_one(const std::string& text) { return revec::parse(text).functions.at(0); }

/// Count of instructions in `fn` matching `pred`.
template <class Pred> std::size_t count_insts(const revec::Function& fn, Pred pred) {
  std::size_t n = 0;
  for (const auto& b : fn.blocks)
    for (const auto& i : b.insts)
      if (pred(b, i)) ++n;
  return n;
}

} // namespace testsupport

#include "revec/equiv.hpp"
#include "revec/pipeline.hpp"
#include "revec/stats.hpp"
#include "revec/textio.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#ifndef REVEC_DEFAULT_IMAP
#define REVEC_DEFAULT_IMAP "data/imap.txt"
#endif

namespace {

enum Exit { kOk = 0, kNotFound = 1, kParseError = 2, kVerifyError = 3, kCheckFailed = 4 };

struct Options {
  std::string input;
  std::string target = "gen256";
  std::string emit = "ir";
  std::size_t check = 0;
  std::uint64_t seed = 1;
  std::string imap = REVEC_DEFAULT_IMAP;
  std::string costs;
  std::string output;
};

struct Failure {
  int code;
  std::string message;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{kNotFound, "cannot open " + path};
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

revec::ProgramModule load_module(const std::string& path) {
  std::string text = read_file(path);
  try {
    return revec::parse(text, path);
  } catch (const revec::ParseError& e) {
    throw Failure{kParseError, std::string("parse error: ") + e.what()};
  } catch (const revec::VerifyError& e) {
    throw Failure{kVerifyError, std::string(e.what())};
  }
}

revec::TargetDesc load_target(const Options& o) {
  revec::TargetDesc t = revec::TargetDesc::named(o.target);
  if (!o.costs.empty()) {
    try {
      t.costs = revec::CostTable::parse(read_file(o.costs));
    } catch (const std::invalid_argument& e) {
      throw Failure{kParseError, o.costs + ": " + e.what()};
    }
  }
  return t;
}

revec::IntrinsicMap load_imap(const Options& o, const revec::TargetDesc& t) {
  try {
    return revec::IntrinsicMap::parse(read_file(o.imap)).filtered(t);
  } catch (const std::invalid_argument& e) {
    throw Failure{kParseError, o.imap + ": " + e.what()};
  }
}

void write_output(const Options& o, const std::string& text) {
  if (o.output.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(o.output, std::ios::binary);
  if (!out) throw Failure{kNotFound, "cannot write " + o.output};
  out << text;
}

std::string commented(const std::string& text) {
  std::istringstream in(text);
  std::string line, out;
  while (std::getline(in, line)) out += "; " + line + "\n";
  return out;
}

int run(const Options& o, bool check_only) {
  const revec::ProgramModule m = load_module(o.input);
  const revec::TargetDesc target = load_target(o);
  const revec::IntrinsicMap imap = load_imap(o, target);
  const revec::PipelineOutput out = revec::run_pipeline(m, target, imap);

  std::map<std::string, revec::EquivalenceResult> checks;
  bool failed = false;
  if (o.check > 0) {
    for (std::size_t i = 0; i < m.functions.size(); ++i) {
      auto r = revec::check_equivalence(m.functions[i], out.transformed.functions[i], o.check, o.seed);
      failed = failed || r.verdict == revec::Verdict::Fail;
      if (check_only || r.verdict != revec::Verdict::Pass) {
        std::ostream& os = r.verdict == revec::Verdict::Pass ? std::cout : std::cerr;
        os << revec::verdict_name(r.verdict) << " @" << r.function << " (" << r.inputs_checked << " inputs)";
        if (!r.detail.empty()) os << ": " << r.detail;
        os << "\n";
      }
      checks.emplace(r.function, std::move(r));
    }
  }
  if (!check_only) {
    std::string text;
    if (o.emit == "ir") text = revec::print(out.transformed);
    else if (o.emit == "stats") text = revec::stats_document(o.input, target, out, checks);
    else text = revec::print(out.transformed) + "\n" + commented(revec::stats_document(o.input, target, out, checks));
    write_output(o, text);
  }
  return failed ? kCheckFailed : kOk;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Revectorizes narrow vector IR to a wider target"};
  app.require_subcommand(1);
  Options o;
  const std::vector<std::string> targets{"gen128", "gen256", "gen512"};

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("input", o.input, "Input .vir file")->required();
    sub->add_option("--target", o.target, "Target generation")->check(CLI::IsMember(targets));
    sub->add_option("--imap", o.imap, "Conversion database");
    sub->add_option("--costs", o.costs, "Cost table override");
    sub->add_option("--seed", o.seed, "Seed for equivalence inputs");
  };

  auto* run_cmd = app.add_subcommand("run", "Run the pipeline and emit IR and/or statistics");
  add_common(run_cmd);
  run_cmd->add_option("--emit", o.emit, "What to emit")->check(CLI::IsMember({"ir", "stats", "both"}));
  run_cmd->add_option("--check", o.check, "Also check equivalence on N random inputs");
  run_cmd->add_option("-o", o.output, "Output path");

  auto* check_cmd = app.add_subcommand("check", "Check equivalence of the transformed functions");
  add_common(check_cmd);
  check_cmd->add_option("--check", o.check, "Number of random inputs")->check(CLI::PositiveNumber);

  std::size_t n_random = revec::kDefaultRandomCases;
  std::uint64_t dseed = revec::kDefaultSeed;
  auto* disc_cmd = app.add_subcommand("discover-conversions", "Fuzz narrow-to-wide intrinsic conversions");
  disc_cmd->add_option("--cases", n_random, "Random cases per candidate");
  disc_cmd->add_option("--seed", dseed, "Fuzzing seed");
  disc_cmd->add_option("-o", o.output, "Output path");

  auto* fmt_cmd = app.add_subcommand("fmt", "Print the canonical form of a .vir file");
  fmt_cmd->add_option("input", o.input, "Input .vir file")->required();
  fmt_cmd->add_option("-o", o.output, "Output path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return run(o, false);
    if (*check_cmd) {
      if (o.check == 0) o.check = 100;
      return run(o, true);
    }
    if (*disc_cmd) {
      revec::DiscoveryOptions d;
      d.n_random = n_random;
      d.seed = dseed;
      write_output(o, revec::discover_conversions(d).serialize());
      return kOk;
    }
    if (*fmt_cmd) {
      write_output(o, revec::print(load_module(o.input)));
      return kOk;
    }
  } catch (const Failure& f) {
    std::cerr << "revec: " << f.message << "\n";
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "revec: internal error: " << e.what() << "\n";
    return 70;
  }
  return kOk;
}

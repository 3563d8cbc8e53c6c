#include "revec/stats.hpp"

#include "json.hpp"

namespace revec {

namespace {

using nlohmann::ordered_json;

ordered_json dynamic_json(const DynamicSummary& s) {
  ordered_json by_width = ordered_json::object();
  for (const auto& [w, n] : s.vector_ops_by_width) by_width[std::to_string(w)] = n;
  return {{"total", s.total}, {"vector_ops", s.vector_ops}, {"vector_ops_by_width", by_width}};
}

} // namespace

std::string stats_document(const std::string& input, const TargetDesc& target, const PipelineOutput& out,
                           const std::map<std::string, EquivalenceResult>& checks) {
  ordered_json doc;
  doc["schema"] = kStatsSchema;
  doc["input"] = input;
  doc["target"] = target.name;
  doc["max_vector_bits"] = target.max_vector_bits;
  ordered_json fns = ordered_json::array();
  for (const auto& rep : out.reports) {
    ordered_json f;
    f["name"] = rep.name;
    unsigned uf = 1;
    unsigned split = 0;
    ordered_json loops = ordered_json::array();
    for (const auto& l : rep.loops) {
      if (l.unrolled) uf = std::max(uf, l.unroll_factor);
      split += l.reductions_split;
      loops.push_back({{"header", l.header},
                       {"unroll_factor", l.unroll_factor},
                       {"unrolled", l.unrolled},
                       {"main_trips", l.main_trips},
                       {"remainder_trips", l.remainder_trips},
                       {"reductions_split", l.reductions_split},
                       {"notes", l.notes}});
    }
    f["unroll_factor"] = uf;
    f["reductions_split"] = split;
    f["loops"] = loops;
    f["rejected_loops"] = rep.rejected_loops;

    std::map<std::string, int> kinds;
    std::map<std::string, int> patterns{{"A", 0}, {"B", 0}, {"C", 0}, {"D", 0}, {"GATHER", 0}};
    std::size_t packs = 0, applied_packs = 0;
    bool applied = false;
    ordered_json graphs = ordered_json::array();
    for (const auto& g : rep.graphs) {
      for (const auto& [k, n] : g.packs_by_kind) kinds[k] += n;
      for (const auto& [k, n] : g.patterns) patterns[k] += n;
      packs += g.packs;
      if (g.applied) applied_packs += g.packs;
      applied = applied || g.applied;
      ordered_json gj{{"block", g.block},
                      {"root", pack_kind_name(g.root_kind)},
                      {"p", g.p},
                      {"packs", g.packs},
                      {"packs_by_kind", g.packs_by_kind},
                      {"shuffle_patterns", g.patterns},
                      {"cost",
                       {{"benefit", g.cost.benefit},
                        {"gather_cost", g.cost.gather_cost},
                        {"extract_cost", g.cost.extract_cost},
                        {"profitable", g.cost.profitable()}}},
                      {"applied", g.applied}};
      if (!g.note.empty()) gj["note"] = g.note;
      graphs.push_back(std::move(gj));
    }
    f["packs"] = packs;
    f["packs_applied"] = applied_packs;
    f["packs_by_kind"] = kinds;
    f["shuffle_patterns"] = patterns;
    f["applied"] = applied;
    f["graphs"] = graphs;
    if (auto it = checks.find(rep.name); it != checks.end()) {
      const auto& c = it->second;
      f["equivalence"] = {{"verdict", verdict_name(c.verdict)},
                          {"inputs", c.inputs_checked},
                          {"detail", c.detail},
                          {"dynamic_ops", {{"before", dynamic_json(c.before)}, {"after", dynamic_json(c.after)}}}};
    }
    fns.push_back(std::move(f));
  }
  doc["functions"] = fns;
  return doc.dump(2) + "\n";
}

} // namespace revec

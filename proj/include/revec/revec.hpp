#pragma once

#include "revec/imap.hpp"
#include "revec/ir.hpp"
#include "revec/target.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace revec {

enum class PackKind {
  StoreRoot,
  PhiRoot,
  LiftedOp,
  IntrinsicCall,
  Shuffle,
  Load,
  GatherLeaf,
  // Graph nodes that are not packs: constant columns become one wide
  // constant, bitcast columns are looked through.
  Constant,
  Bitcast,
};

std::string_view pack_kind_name(PackKind k);

enum class ShufflePattern { A, B, C, D, Gather };

std::string_view pattern_name(ShufflePattern p);

struct Pack {
  PackKind kind = PackKind::GatherLeaf;
  std::vector<ValueId> members; // I1..Ip
  Type narrow;                  // member type (stored value type for stores)

  unsigned p() const { return static_cast<unsigned>(members.size()); }
  unsigned sw() const { return narrow.total_bits(); }
};

struct PackNode {
  Pack pack;
  /// Child node per operand position; -1 where the position is not widened
  /// (store addresses, pattern A-C shuffle operands).
  std::vector<int> children;
  /// Phi nodes: incoming label per child position.
  std::vector<std::string> child_labels;
  std::optional<ShufflePattern> pattern; // shuffle columns (GATHER for gathered shuffle packs)
  std::vector<int> parents;

  /// Packs replaced by one wide instruction (or an existing value).
  bool mergeable() const;
  /// Nodes whose members are erased after widening.
  bool rewritten() const { return mergeable() || pack.kind == PackKind::Bitcast; }
  /// Counted in pack statistics.
  bool is_pack() const { return pack.kind != PackKind::Constant && pack.kind != PackKind::Bitcast; }
};

struct RevecGraph {
  std::string block;
  std::vector<PackNode> nodes; // nodes[0] is the root
  /// (parent, child) pairs closing a cycle through a phi root.
  std::vector<std::pair<int, int>> back_edges;

  std::size_t pack_count() const;
  std::map<std::string, int> packs_by_kind() const;
};

/// Store chains with adjacent addresses and same-typed vector phis of
/// `block`, chunked into power-of-two packs of at most VW/SW members.
std::vector<Pack> find_root_packs(const Function& fn, const std::string& block, const TargetDesc& target);

RevecGraph build_graph(const Function& fn, const Pack& root, const TargetDesc& target, const IntrinsicMap& imap);

/// First matching pattern in the order A, B, C, D, else GATHER.
ShufflePattern classify_shuffle_pack(const Function& fn, const std::vector<ValueId>& members);

/// Pattern D mask for narrow shuffle `i` (1-based) of a pack of `p` shuffles
/// over operands of `n` lanes.
std::vector<int> remap_pattern_d(const std::vector<int>& mask, unsigned n, unsigned p, unsigned i);
std::vector<int> widen_mask_pattern_d(const std::vector<std::vector<int>>& masks, unsigned n);

/// Identity-mask shuffle tree concatenating `values` (all of one vector
/// type, power-of-two count). Creates p-1 shuffles with fresh ids in
/// dependence order; the caller inserts them.
struct GatherTree {
  std::vector<Instruction> shuffles;
  ValueId result = kNoValue;
};
GatherTree build_gather_tree(Function& fn, const std::vector<ValueId>& values);

struct CostReport {
  long benefit = 0;
  long gather_cost = 0;
  long extract_cost = 0;
  bool profitable() const { return benefit > gather_cost + extract_cost; }
};

CostReport estimate_profit(const Function& fn, const RevecGraph& graph, const TargetDesc& target);

/// Rewrites `graph` to wide instructions. The graph must have
/// been built on `fn` as given.
Function transform_graph(const Function& fn, const RevecGraph& graph, const IntrinsicMap& imap);

struct GraphReport {
  std::string block;
  PackKind root_kind = PackKind::StoreRoot;
  unsigned p = 0;
  std::map<std::string, int> packs_by_kind;
  std::map<std::string, int> patterns;
  CostReport cost;
  bool applied = false;
  std::size_t packs = 0;
  std::string note;
};

struct RevecResult {
  Function fn;
  std::vector<GraphReport> graphs;
};

/// Seeds, builds, gates and transforms every root of every block.
RevecResult revectorize(const Function& fn, const TargetDesc& target, const IntrinsicMap& imap);

} // namespace revec

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mgcnet/sessions.hpp"

namespace mgcnet {

// Typed edge class: transitions whose endpoints carry behaviors src and dst.
// The relation set is the full cross product of the behavior vocabulary, so
// a corpus with |O| behaviors always has |O|^2 relations, populated or not.
struct RelationType {
  int src_behavior = 0;
  int dst_behavior = 0;
};

std::string relation_name(const RelationType& r,
                          const std::vector<std::string>& behaviors);

// Directed multigraph over the item vocabulary, one weighted adjacency per
// relation. Edges come from two rules applied to every training session:
//   - each adjacent pair (v_i, v_{i+1}) adds edge v_i -> v_{i+1} under the
//     relation (o_i, o_{i+1});
//   - each non-adjacent pair i < j with j - i > 1 and o_i == o_j adds edge
//     v_i -> v_j under (o_i, o_j).
// Weights count rule firings. Per (item, relation), only the `neighbor_cap`
// heaviest inbound sources are kept (ties keep the smaller item index);
// cap <= 0 disables the cut. No self-connections are synthesized, though a
// genuine transition between two events of the same item is kept.
class GlobalGraph {
 public:
  GlobalGraph(int n_items, std::vector<std::string> behavior_labels);

  int n_items() const { return n_items_; }
  int n_behaviors() const { return static_cast<int>(behaviors_.size()); }
  int n_relations() const { return n_behaviors() * n_behaviors(); }
  const std::vector<std::string>& behavior_labels() const { return behaviors_; }

  int relation_index(const RelationType& r) const;
  RelationType relation_of(int index) const;

  // Inbound (source, weight) list of `item` under `relation`, sorted by
  // weight descending, then source index ascending.
  const std::vector<std::pair<int, std::int64_t>>& inbound(int relation,
                                                           int item) const;

  // Sources with an inbound edge to `item` under any relation, deduplicated,
  // ascending item index. This is the neighborhood the local context
  // attention walks.
  const std::vector<int>& union_inbound(int item) const;

  std::int64_t total_weight() const;
  std::int64_t edge_count() const;

  // Build-time hooks; `finalize` applies the cap and computes unions.
  void add_edge(int src, int relation, int dst, std::int64_t weight);
  void finalize(int neighbor_cap);

 private:
  int n_items_;
  std::vector<std::string> behaviors_;
  // inbound_[relation][item] = sorted (src, weight)
  std::vector<std::vector<std::vector<std::pair<int, std::int64_t>>>> inbound_;
  std::vector<std::vector<int>> union_inbound_;
};

// Builds the transition graph from (already filtered) training sessions.
// Every session item must be in `item_vocab` and every behavior in
// `behaviors`. Raises on an empty training set.
GlobalGraph build_global_graph(const std::vector<Session>& train_sessions,
                               const Vocab& item_vocab,
                               const std::vector<std::string>& behaviors,
                               int neighbor_cap = 12);

// Inbound neighbor list lookup by relation type.
const std::vector<std::pair<int, std::int64_t>>& neighbor_query(
    const GlobalGraph& graph, int item, const RelationType& relation);

// TSV serialization: a header line
//   #mgcnet-graph<TAB>n_items=N<TAB>behaviors=a,b,...
// followed by src<TAB>relation_name<TAB>dst<TAB>weight rows in deterministic
// order. Reading a written graph reproduces it exactly.
void write_graph_tsv(const std::string& path, const GlobalGraph& graph);
GlobalGraph read_graph_tsv(const std::string& path);

}  // namespace mgcnet

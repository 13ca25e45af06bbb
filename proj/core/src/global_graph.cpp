#include "mgcnet/global_graph.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>
#include <unordered_map>

namespace mgcnet {

std::string relation_name(const RelationType& r,
                          const std::vector<std::string>& behaviors) {
  const auto n = static_cast<int>(behaviors.size());
  if (r.src_behavior < 0 || r.src_behavior >= n || r.dst_behavior < 0 ||
      r.dst_behavior >= n) {
    throw std::runtime_error("relation_name: behavior index out of range");
  }
  return behaviors[static_cast<std::size_t>(r.src_behavior)] + "2" +
         behaviors[static_cast<std::size_t>(r.dst_behavior)];
}

GlobalGraph::GlobalGraph(int n_items, std::vector<std::string> behavior_labels)
    : n_items_(n_items), behaviors_(std::move(behavior_labels)) {
  if (n_items_ < 1) throw std::runtime_error("GlobalGraph: n_items must be >= 1");
  if (behaviors_.empty()) throw std::runtime_error("GlobalGraph: empty behavior vocabulary");
  inbound_.assign(static_cast<std::size_t>(n_relations()),
                  std::vector<std::vector<std::pair<int, std::int64_t>>>(
                      static_cast<std::size_t>(n_items_)));
  union_inbound_.assign(static_cast<std::size_t>(n_items_), {});
}

int GlobalGraph::relation_index(const RelationType& r) const {
  const int n = n_behaviors();
  if (r.src_behavior < 0 || r.src_behavior >= n || r.dst_behavior < 0 ||
      r.dst_behavior >= n) {
    throw std::runtime_error("relation_index: behavior index out of range");
  }
  return r.src_behavior * n + r.dst_behavior;
}

RelationType GlobalGraph::relation_of(int index) const {
  if (index < 0 || index >= n_relations()) {
    throw std::runtime_error("relation_of: relation index out of range");
  }
  return RelationType{index / n_behaviors(), index % n_behaviors()};
}

const std::vector<std::pair<int, std::int64_t>>& GlobalGraph::inbound(
    int relation, int item) const {
  if (relation < 0 || relation >= n_relations()) {
    throw std::runtime_error("inbound: relation index out of range");
  }
  if (item < 0 || item >= n_items_) {
    throw std::runtime_error("inbound: item index out of range");
  }
  return inbound_[static_cast<std::size_t>(relation)][static_cast<std::size_t>(item)];
}

const std::vector<int>& GlobalGraph::union_inbound(int item) const {
  if (item < 0 || item >= n_items_) {
    throw std::runtime_error("union_inbound: item index out of range");
  }
  return union_inbound_[static_cast<std::size_t>(item)];
}

std::int64_t GlobalGraph::total_weight() const {
  std::int64_t total = 0;
  for (const auto& rel : inbound_) {
    for (const auto& lst : rel) {
      for (const auto& [src, w] : lst) total += w;
    }
  }
  return total;
}

std::int64_t GlobalGraph::edge_count() const {
  std::int64_t total = 0;
  for (const auto& rel : inbound_) {
    for (const auto& lst : rel) total += static_cast<std::int64_t>(lst.size());
  }
  return total;
}

void GlobalGraph::add_edge(int src, int relation, int dst, std::int64_t weight) {
  if (relation < 0 || relation >= n_relations()) {
    throw std::runtime_error("add_edge: relation index out of range");
  }
  if (src < 0 || src >= n_items_ || dst < 0 || dst >= n_items_) {
    throw std::runtime_error("add_edge: item index out of range");
  }
  auto& lst = inbound_[static_cast<std::size_t>(relation)][static_cast<std::size_t>(dst)];
  for (auto& [s, w] : lst) {
    if (s == src) {
      w += weight;
      return;
    }
  }
  lst.emplace_back(src, weight);
}

void GlobalGraph::finalize(int neighbor_cap) {
  for (auto& rel : inbound_) {
    for (auto& lst : rel) {
      std::sort(lst.begin(), lst.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
      });
      if (neighbor_cap > 0 &&
          lst.size() > static_cast<std::size_t>(neighbor_cap)) {
        lst.resize(static_cast<std::size_t>(neighbor_cap));
      }
    }
  }
  for (int item = 0; item < n_items_; ++item) {
    std::vector<int> u;
    for (int r = 0; r < n_relations(); ++r) {
      for (const auto& [src, w] : inbound(r, item)) u.push_back(src);
    }
    std::sort(u.begin(), u.end());
    u.erase(std::unique(u.begin(), u.end()), u.end());
    union_inbound_[static_cast<std::size_t>(item)] = std::move(u);
  }
}

GlobalGraph build_global_graph(const std::vector<Session>& train_sessions,
                               const Vocab& item_vocab,
                               const std::vector<std::string>& behaviors,
                               int neighbor_cap) {
  if (train_sessions.empty()) {
    throw std::runtime_error("build_global_graph: empty training set");
  }
  GlobalGraph g(static_cast<int>(item_vocab.size()),
                std::vector<std::string>(behaviors));

  std::unordered_map<std::string, int> behavior_index;
  for (std::size_t i = 0; i < behaviors.size(); ++i) {
    behavior_index[behaviors[i]] = static_cast<int>(i);
  }
  const int nb = static_cast<int>(behaviors.size());

  for (const auto& s : train_sessions) {
    std::vector<int> items(s.events.size()), behs(s.events.size());
    for (std::size_t i = 0; i < s.events.size(); ++i) {
      items[i] = item_vocab.index(s.events[i].item);
      if (items[i] < 0) {
        throw std::runtime_error("build_global_graph: item '" + s.events[i].item +
                                 "' is not in the vocab");
      }
      const auto it = behavior_index.find(s.events[i].behavior);
      if (it == behavior_index.end()) {
        throw std::runtime_error("build_global_graph: unknown behavior label '" +
                                 s.events[i].behavior + "'");
      }
      behs[i] = it->second;
    }
    const std::size_t len = items.size();
    for (std::size_t i = 0; i + 1 < len; ++i) {
      g.add_edge(items[i], behs[i] * nb + behs[i + 1], items[i + 1], 1);
    }
    for (std::size_t i = 0; i < len; ++i) {
      for (std::size_t j = i + 2; j < len; ++j) {
        if (behs[i] == behs[j]) {
          g.add_edge(items[i], behs[i] * nb + behs[j], items[j], 1);
        }
      }
    }
  }
  g.finalize(neighbor_cap);
  return g;
}

const std::vector<std::pair<int, std::int64_t>>& neighbor_query(
    const GlobalGraph& graph, int item, const RelationType& relation) {
  return graph.inbound(graph.relation_index(relation), item);
}

void write_graph_tsv(const std::string& path, const GlobalGraph& graph) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "#mgcnet-graph\tn_items=" << graph.n_items() << "\tbehaviors=";
  const auto& labels = graph.behavior_labels();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i) out << ',';
    out << labels[i];
  }
  out << "\n";
  for (int r = 0; r < graph.n_relations(); ++r) {
    const std::string rname = relation_name(graph.relation_of(r), labels);
    for (int dst = 0; dst < graph.n_items(); ++dst) {
      for (const auto& [src, w] : graph.inbound(r, dst)) {
        out << src << '\t' << rname << '\t' << dst << '\t' << w << "\n";
      }
    }
  }
}

GlobalGraph read_graph_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path + " for reading");
  std::string header;
  if (!std::getline(in, header) || header.rfind("#mgcnet-graph\t", 0) != 0) {
    throw std::runtime_error(path + ": missing graph header line");
  }
  const std::size_t n_pos = header.find("n_items=");
  const std::size_t b_pos = header.find("behaviors=");
  if (n_pos == std::string::npos || b_pos == std::string::npos) {
    throw std::runtime_error(path + ": malformed graph header");
  }
  const int n_items = std::stoi(header.substr(n_pos + 8));
  std::vector<std::string> behaviors;
  {
    std::string blob = header.substr(b_pos + 10);
    if (const auto tab = blob.find('\t'); tab != std::string::npos) blob.resize(tab);
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = blob.find(',', start);
      behaviors.push_back(blob.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }
  GlobalGraph g(n_items, std::move(behaviors));
  const auto& labels = g.behavior_labels();

  // relation names can be ambiguous if a label contains '2'; resolve against
  // the declared vocabulary, preferring the longest matching source label
  auto parse_relation = [&](const std::string& name, std::size_t line) {
    int best_src = -1, best_dst = -1;
    std::size_t best_len = 0;
    for (std::size_t s = 0; s < labels.size(); ++s) {
      const std::string prefix = labels[s] + "2";
      if (name.rfind(prefix, 0) != 0 || labels[s].size() < best_len) continue;
      const std::string rest = name.substr(prefix.size());
      for (std::size_t d = 0; d < labels.size(); ++d) {
        if (labels[d] == rest) {
          best_src = static_cast<int>(s);
          best_dst = static_cast<int>(d);
          best_len = labels[s].size();
        }
      }
    }
    if (best_src < 0) {
      throw std::runtime_error(path + ":" + std::to_string(line) +
                               ": unknown relation '" + name + "'");
    }
    return RelationType{best_src, best_dst};
  };

  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (fields.size() != 4) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected 4 tab-separated fields");
    }
    const RelationType rel = parse_relation(fields[1], line_no);
    g.add_edge(std::stoi(fields[0]), g.relation_index(rel), std::stoi(fields[2]),
               std::stoll(fields[3]));
  }
  g.finalize(0);  // lists were written capped; just sort and build unions
  return g;
}

}  // namespace mgcnet

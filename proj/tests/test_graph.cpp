#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "doctest.h"
#include "mgcnet/global_graph.hpp"
#include "mgcnet/sessions.hpp"

using namespace mgcnet;

namespace {

using EdgeKey = std::tuple<int, int, int>;  // (src, relation, dst)

// Independent double-loop transcription of the construction rules: adjacent
// pairs under (o_i, o_{i+1}), and every non-adjacent pair i < j sharing a
// behavior under (o_i, o_j).
std::map<EdgeKey, std::int64_t> brute_force_edges(
    const std::vector<Session>& sessions, const Vocab& vocab,
    const std::vector<std::string>& behaviors) {
  const auto behavior_index = [&](const std::string& label) {
    for (std::size_t i = 0; i < behaviors.size(); ++i) {
      if (behaviors[i] == label) return static_cast<int>(i);
    }
    REQUIRE(false);
    return -1;
  };
  const int nb = static_cast<int>(behaviors.size());
  std::map<EdgeKey, std::int64_t> edges;
  for (const auto& s : sessions) {
    const auto len = s.events.size();
    for (std::size_t i = 0; i < len; ++i) {
      for (std::size_t j = i + 1; j < len; ++j) {
        const int oi = behavior_index(s.events[i].behavior);
        const int oj = behavior_index(s.events[j].behavior);
        const bool adjacent = j == i + 1;
        if (!adjacent && oi != oj) continue;
        const int src = vocab.index(s.events[i].item);
        const int dst = vocab.index(s.events[j].item);
        ++edges[{src, oi * nb + oj, dst}];
      }
    }
  }
  return edges;
}

std::map<EdgeKey, std::int64_t> graph_edges(const GlobalGraph& graph) {
  std::map<EdgeKey, std::int64_t> edges;
  for (int r = 0; r < graph.n_relations(); ++r) {
    for (int item = 0; item < graph.n_items(); ++item) {
      for (const auto& [src, w] : graph.inbound(r, item)) {
        edges[{src, r, item}] = w;
      }
    }
  }
  return edges;
}

std::vector<Session> toy_sessions(
    const std::vector<std::vector<std::pair<std::string, std::string>>>& specs) {
  std::vector<Session> sessions;
  int sid = 0;
  for (const auto& spec : specs) {
    Session s;
    s.session_id = "s" + std::to_string(sid++);
    int ts = 1;
    for (const auto& [item, behavior] : spec) {
      s.events.push_back(Event{item, behavior, ts++});
    }
    sessions.push_back(std::move(s));
  }
  return sessions;
}

}  // namespace

TEST_SUITE_BEGIN("global_graph");

TEST_CASE("adjacent edges carry the behavior pair of their endpoints") {
  const auto sessions =
      toy_sessions({{{"v1", "click"}, {"v2", "click"}, {"v3", "buy"}}});
  const Vocab vocab = Vocab::build(sessions);
  const std::vector<std::string> behaviors = {"buy", "click"};
  const auto graph = build_global_graph(sessions, vocab, behaviors, 0);

  const auto edges = graph_edges(graph);
  REQUIRE(edges.size() == 2);
  const int click = 1, buy = 0, nb = 2;
  // v1 -click2click-> v2 and v2 -click2buy-> v3; v1/v3 differ in behavior so
  // no long-distance edge appears
  CHECK(edges.at({vocab.index("v1"), click * nb + click, vocab.index("v2")}) == 1);
  CHECK(edges.at({vocab.index("v2"), click * nb + buy, vocab.index("v3")}) == 1);
}

TEST_CASE("non-adjacent same-behavior pairs add long-distance edges") {
  const auto sessions =
      toy_sessions({{{"v1", "click"}, {"v2", "buy"}, {"v3", "click"}}});
  const Vocab vocab = Vocab::build(sessions);
  const std::vector<std::string> behaviors = {"buy", "click"};
  const auto graph = build_global_graph(sessions, vocab, behaviors, 0);

  const auto edges = graph_edges(graph);
  REQUIRE(edges.size() == 3);
  const int click = 1, buy = 0, nb = 2;
  CHECK(edges.at({vocab.index("v1"), click * nb + buy, vocab.index("v2")}) == 1);
  CHECK(edges.at({vocab.index("v2"), buy * nb + click, vocab.index("v3")}) == 1);
  CHECK(edges.at({vocab.index("v1"), click * nb + click, vocab.index("v3")}) == 1);

  // the long-distance edge is readable through the typed query
  const auto& inbound = neighbor_query(graph, vocab.index("v3"),
                                       RelationType{click, click});
  REQUIRE(inbound.size() == 1);
  CHECK(inbound[0].first == vocab.index("v1"));
  CHECK(inbound[0].second == 1);

  // isolated relation and isolated item both come back empty
  CHECK(neighbor_query(graph, vocab.index("v1"), RelationType{buy, buy}).empty());
  CHECK(graph.union_inbound(vocab.index("v1")).empty());
}

TEST_CASE("duplicated sessions double every weight") {
  const auto base =
      toy_sessions({{{"v1", "click"}, {"v2", "click"}, {"v3", "click"}}});
  auto doubled = base;
  doubled.push_back(base[0]);
  doubled.back().session_id = "copy";
  const Vocab vocab = Vocab::build(base);
  const std::vector<std::string> behaviors = {"click"};

  const auto single = graph_edges(build_global_graph(base, vocab, behaviors, 0));
  const auto twice = graph_edges(build_global_graph(doubled, vocab, behaviors, 0));
  REQUIRE(single.size() == twice.size());
  for (const auto& [key, w] : single) CHECK(twice.at(key) == 2 * w);
}

TEST_CASE("graph equals the brute force oracle on random corpora") {
  for (const auto preset :
       {SyntheticPreset::tmall_like, SyntheticPreset::planted_rule}) {
    const auto sessions = generate_synthetic(preset, 200, 31);
    const Vocab vocab = Vocab::build(sessions);
    const auto behaviors = infer_behavior_vocab(sessions);
    const auto graph = build_global_graph(sessions, vocab, behaviors, 0);
    CHECK(graph_edges(graph) == brute_force_edges(sessions, vocab, behaviors));

    // total weight identity: adjacency contributes L-1 per session, the
    // long-distance rule one unit per same-behavior pair with j > i + 1
    std::int64_t expected = 0;
    for (const auto& s : sessions) {
      expected += static_cast<std::int64_t>(s.events.size()) - 1;
      for (std::size_t i = 0; i + 2 < s.events.size(); ++i) {
        for (std::size_t j = i + 2; j < s.events.size(); ++j) {
          if (s.events[i].behavior == s.events[j].behavior) ++expected;
        }
      }
    }
    CHECK(graph.total_weight() == expected);
  }
}

TEST_CASE("neighbor cap keeps the heaviest inbound sources") {
  // four sources into t under one relation with weights 3, 2, 2, 1: a cap of
  // two keeps weight 3 and the smaller-indexed weight-2 source
  std::vector<std::vector<std::pair<std::string, std::string>>> specs;
  const auto pair_session = [&](const std::string& src, int copies) {
    for (int c = 0; c < copies; ++c) specs.push_back({{src, "click"}, {"t", "click"}});
  };
  specs.push_back({{"t", "click"}, {"a", "click"}});  // fixes vocab order t, a, ...
  pair_session("a", 3);
  pair_session("b", 2);
  pair_session("c", 2);
  pair_session("d", 1);
  const auto sessions = toy_sessions(specs);
  const Vocab vocab = Vocab::build(sessions);
  const std::vector<std::string> behaviors = {"click"};

  const auto capped = build_global_graph(sessions, vocab, behaviors, 2);
  const auto& inbound = capped.inbound(0, vocab.index("t"));
  REQUIRE(inbound.size() == 2);
  CHECK(inbound[0].first == vocab.index("a"));
  CHECK(inbound[0].second == 3);
  CHECK(inbound[1].first == vocab.index("b"));
  CHECK(inbound[1].second == 2);
  // the union neighborhood reflects the cap
  const auto& uni = capped.union_inbound(vocab.index("t"));
  CHECK(uni == std::vector<int>{vocab.index("a"), vocab.index("b")});

  const auto uncapped = build_global_graph(sessions, vocab, behaviors, 0);
  CHECK(uncapped.inbound(0, vocab.index("t")).size() == 4);
}

TEST_CASE("union neighborhood merges relations and stays sorted") {
  const auto sessions = toy_sessions({
      {{"a", "click"}, {"t", "buy"}},
      {{"b", "buy"}, {"t", "buy"}},
      {{"a", "buy"}, {"t", "buy"}},
  });
  const Vocab vocab = Vocab::build(sessions);
  const std::vector<std::string> behaviors = {"buy", "click"};
  const auto graph = build_global_graph(sessions, vocab, behaviors, 0);
  // a reaches t under two relations but appears once, ascending index order
  std::vector<int> expected = {vocab.index("a"), vocab.index("b")};
  std::sort(expected.begin(), expected.end());
  CHECK(graph.union_inbound(vocab.index("t")) == expected);
}

TEST_CASE("empty training set is rejected") {
  const Vocab vocab;
  CHECK_THROWS_AS(build_global_graph({}, vocab, {"click"}, 0), std::runtime_error);
}

TEST_CASE("tsv round trip reproduces the graph exactly") {
  const auto sessions = generate_synthetic(SyntheticPreset::tmall_like, 60, 17);
  const Vocab vocab = Vocab::build(sessions);
  const auto behaviors = infer_behavior_vocab(sessions);
  const auto graph = build_global_graph(sessions, vocab, behaviors, 0);

  const auto path =
      (std::filesystem::temp_directory_path() / "mgcnet_graph_roundtrip.tsv").string();
  write_graph_tsv(path, graph);
  const auto back = read_graph_tsv(path);
  CHECK(back.n_items() == graph.n_items());
  CHECK(back.behavior_labels() == graph.behavior_labels());
  CHECK(graph_edges(back) == graph_edges(graph));
  CHECK(back.total_weight() == graph.total_weight());

  // a second write of the reread graph is byte-identical (serialization is
  // deterministic)
  const auto path2 =
      (std::filesystem::temp_directory_path() / "mgcnet_graph_roundtrip2.tsv").string();
  write_graph_tsv(path2, back);
  std::ifstream f1(path), f2(path2);
  const std::string c1((std::istreambuf_iterator<char>(f1)), {});
  const std::string c2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(c1 == c2);
  std::filesystem::remove(path);
  std::filesystem::remove(path2);
}

TEST_CASE("relation names honor labels containing digits") {
  // labels like "add2cart" contain the separator digit; the parser must
  // still split the relation name unambiguously
  const auto sessions = toy_sessions({{{"a", "add2cart"}, {"b", "click"}}});
  const Vocab vocab = Vocab::build(sessions);
  const std::vector<std::string> behaviors = {"add2cart", "click"};
  const auto graph = build_global_graph(sessions, vocab, behaviors, 0);
  CHECK(relation_name(RelationType{0, 1}, behaviors) == "add2cart2click");

  const auto path =
      (std::filesystem::temp_directory_path() / "mgcnet_graph_labels.tsv").string();
  write_graph_tsv(path, graph);
  const auto back = read_graph_tsv(path);
  CHECK(graph_edges(back) == graph_edges(graph));
  std::filesystem::remove(path);
}

TEST_SUITE_END();

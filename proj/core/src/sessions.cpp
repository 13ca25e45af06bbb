#include "mgcnet/sessions.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "mgcnet/rng.hpp"

namespace mgcnet {

namespace {

using nlohmann::json;

[[noreturn]] void line_error(const std::string& path, std::size_t line,
                             const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(line) +
                           ": malformed line (" + what + ")");
}

void sort_and_collapse(Session& s) {
  std::stable_sort(s.events.begin(), s.events.end(),
                   [](const Event& a, const Event& b) { return a.ts < b.ts; });
  std::vector<Event> out;
  out.reserve(s.events.size());
  for (auto& e : s.events) {
    if (!out.empty() && out.back().item == e.item &&
        out.back().behavior == e.behavior) {
      continue;  // consecutive duplicate, keep the first occurrence
    }
    out.push_back(std::move(e));
  }
  s.events = std::move(out);
}

void check_behavior(const std::string& label,
                    const std::vector<std::string>* declared,
                    const std::string& path, std::size_t line) {
  if (!declared) return;
  if (std::find(declared->begin(), declared->end(), label) == declared->end()) {
    throw std::runtime_error(path + ":" + std::to_string(line) +
                             ": unknown behavior label '" + label + "'");
  }
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path + " for reading");
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  return out;
}

std::vector<Session> parse_jsonl(const std::string& path,
                                 const std::vector<std::string>* declared) {
  auto in = open_input(path);
  std::vector<Session> sessions;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      line_error(path, line_no, e.what());
    }
    if (!j.is_object() || !j.contains("session_id") || !j.contains("events") ||
        !j["session_id"].is_string() || !j["events"].is_array()) {
      line_error(path, line_no, "expected {session_id, events}");
    }
    Session s;
    s.session_id = j["session_id"].get<std::string>();
    for (const auto& je : j["events"]) {
      if (!je.is_object() || !je.contains("item") || !je.contains("behavior") ||
          !je.contains("ts") || !je["item"].is_string() ||
          !je["behavior"].is_string() || !je["ts"].is_number_integer()) {
        line_error(path, line_no, "expected event {item, behavior, ts}");
      }
      Event e{je["item"].get<std::string>(), je["behavior"].get<std::string>(),
              je["ts"].get<std::int64_t>()};
      check_behavior(e.behavior, declared, path, line_no);
      s.events.push_back(std::move(e));
    }
    sort_and_collapse(s);
    sessions.push_back(std::move(s));
  }
  return sessions;
}

std::vector<Session> parse_tsv(const std::string& path,
                               const std::vector<std::string>* declared) {
  auto in = open_input(path);
  std::vector<Session> sessions;
  std::string line;
  std::size_t line_no = 0;
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
    if (fields.size() != 4) line_error(path, line_no, "expected 4 tab-separated fields");
    std::int64_t ts = 0;
    try {
      std::size_t used = 0;
      ts = std::stoll(fields[3], &used);
      if (used != fields[3].size()) throw std::invalid_argument(fields[3]);
    } catch (const std::exception&) {
      line_error(path, line_no, "timestamp '" + fields[3] + "' is not an integer");
    }
    check_behavior(fields[2], declared, path, line_no);
    // lines of one session are contiguous; a re-appearing id opens a new session
    if (sessions.empty() || sessions.back().session_id != fields[0]) {
      sessions.push_back(Session{fields[0], {}});
    }
    sessions.back().events.push_back(Event{fields[1], fields[2], ts});
  }
  for (auto& s : sessions) sort_and_collapse(s);
  return sessions;
}

std::string item_id(int idx) { return "i" + std::to_string(idx); }

}  // namespace

// ---- ingest ------------------------------------------------------------------

std::vector<Session> parse_sessions(const std::string& path, SessionFormat format,
                                    const std::vector<std::string>* declared_behaviors) {
  return format == SessionFormat::jsonl ? parse_jsonl(path, declared_behaviors)
                                        : parse_tsv(path, declared_behaviors);
}

void write_sessions_jsonl(const std::string& path,
                          const std::vector<Session>& sessions) {
  auto out = open_output(path);
  for (const auto& s : sessions) {
    json events = json::array();
    for (const auto& e : s.events) {
      events.push_back({{"item", e.item}, {"behavior", e.behavior}, {"ts", e.ts}});
    }
    out << json{{"session_id", s.session_id}, {"events", events}}.dump() << "\n";
  }
}

void write_sessions_tsv(const std::string& path,
                        const std::vector<Session>& sessions) {
  auto out = open_output(path);
  for (const auto& s : sessions) {
    for (const auto& e : s.events) {
      out << s.session_id << '\t' << e.item << '\t' << e.behavior << '\t' << e.ts
          << "\n";
    }
  }
}

std::vector<std::string> infer_behavior_vocab(const std::vector<Session>& sessions) {
  std::vector<std::string> labels;
  for (const auto& s : sessions) {
    for (const auto& e : s.events) {
      if (std::find(labels.begin(), labels.end(), e.behavior) == labels.end()) {
        labels.push_back(e.behavior);
      }
    }
  }
  std::sort(labels.begin(), labels.end());
  return labels;
}

std::vector<std::int64_t> behavior_counts(const std::vector<Session>& sessions,
                                          const std::vector<std::string>& behaviors) {
  std::vector<std::int64_t> counts(behaviors.size(), 0);
  for (const auto& s : sessions) {
    for (const auto& e : s.events) {
      const auto it = std::find(behaviors.begin(), behaviors.end(), e.behavior);
      if (it != behaviors.end()) ++counts[it - behaviors.begin()];
    }
  }
  return counts;
}

// ---- vocab -------------------------------------------------------------------

Vocab Vocab::build(const std::vector<Session>& sessions) {
  Vocab v;
  for (const auto& s : sessions) {
    for (const auto& e : s.events) {
      auto [it, inserted] = v.index_of.try_emplace(e.item, static_cast<int>(v.items.size()));
      if (inserted) {
        v.items.push_back(e.item);
        v.counts.push_back(0);
      }
      ++v.counts[it->second];
    }
  }
  return v;
}

// ---- preprocessing -------------------------------------------------------------

FilterResult preprocess_filter(std::vector<Session> sessions, int min_session_len,
                               std::int64_t min_item_count) {
  if (min_session_len < 1) {
    throw std::runtime_error("preprocess_filter: min_session_len must be >= 1");
  }
  bool changed = true;
  while (changed) {
    changed = false;
    std::unordered_map<std::string, std::int64_t> counts;
    for (const auto& s : sessions) {
      for (const auto& e : s.events) ++counts[e.item];
    }
    for (auto& s : sessions) {
      const std::size_t before = s.events.size();
      std::vector<Event> kept;
      kept.reserve(before);
      for (auto& e : s.events) {
        if (counts[e.item] >= min_item_count) kept.push_back(std::move(e));
      }
      s.events = std::move(kept);
      sort_and_collapse(s);  // removals can expose new adjacent duplicates
      if (s.events.size() != before) changed = true;
    }
    const std::size_t n_before = sessions.size();
    std::erase_if(sessions, [min_session_len](const Session& s) {
      return s.events.size() < static_cast<std::size_t>(min_session_len);
    });
    if (sessions.size() != n_before) changed = true;
  }
  if (sessions.empty()) {
    throw std::runtime_error("preprocess_filter: no sessions survive filtering");
  }
  Vocab vocab = Vocab::build(sessions);
  return FilterResult{std::move(sessions), std::move(vocab)};
}

SplitResult split_dataset(const std::vector<Session>& sessions,
                          const std::array<double, 3>& ratios, std::uint64_t seed) {
  double total = 0.0;
  for (double r : ratios) {
    if (r < 0.0) throw std::runtime_error("split_dataset: negative ratio");
    total += r;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::runtime_error("split_dataset: ratios must sum to 1");
  }

  std::vector<std::size_t> order(sessions.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  const std::size_t n = sessions.size();
  std::array<std::size_t, 3> sizes{};
  std::array<double, 3> frac{};
  std::size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    const double exact = ratios[i] * static_cast<double>(n);
    sizes[i] = static_cast<std::size_t>(std::floor(exact));
    frac[i] = exact - std::floor(exact);
    assigned += sizes[i];
  }
  // largest-remainder distribution; ties favor train, then valid
  while (assigned < n) {
    int best = 0;
    for (int i = 1; i < 3; ++i) {
      if (frac[i] > frac[best]) best = i;
    }
    ++sizes[best];
    frac[best] = -1.0;
    ++assigned;
  }

  SplitResult out;
  std::size_t pos = 0;
  for (int i = 0; i < 3; ++i) {
    auto& dst = i == 0 ? out.train : (i == 1 ? out.valid : out.test);
    for (std::size_t j = 0; j < sizes[i]; ++j) dst.push_back(sessions[order[pos++]]);
  }
  return out;
}

std::vector<Session> most_recent_fraction(const std::vector<Session>& sessions,
                                          double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw std::runtime_error("most_recent_fraction: fraction must be in (0, 1]");
  }
  if (sessions.empty()) return {};
  std::vector<std::size_t> order(sessions.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return sessions[a].events.back().ts < sessions[b].events.back().ts;
  });
  const std::size_t keep = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(fraction * static_cast<double>(sessions.size()))));
  std::vector<Session> out;
  out.reserve(keep);
  for (std::size_t i = sessions.size() - keep; i < sessions.size(); ++i) {
    out.push_back(sessions[order[i]]);
  }
  return out;
}

std::vector<SessionExample> augment_prefixes(const std::vector<Session>& sessions,
                                             const Vocab& item_vocab,
                                             const std::vector<std::string>& behaviors,
                                             int max_len, bool drop_unseen_items) {
  if (max_len < 1) throw std::runtime_error("augment_prefixes: max_len must be >= 1");
  std::unordered_map<std::string, int> behavior_index;
  for (std::size_t i = 0; i < behaviors.size(); ++i) {
    behavior_index[behaviors[i]] = static_cast<int>(i);
  }

  std::vector<SessionExample> out;
  for (const auto& s : sessions) {
    // per-session index mapping; -1 marks an out-of-vocab item
    std::vector<std::pair<int, int>> indexed;
    indexed.reserve(s.events.size());
    for (const auto& e : s.events) {
      const auto bit = behavior_index.find(e.behavior);
      if (bit == behavior_index.end()) {
        throw std::runtime_error("augment_prefixes: unknown behavior label '" +
                                 e.behavior + "'");
      }
      const int item = item_vocab.index(e.item);
      if (item < 0 && !drop_unseen_items) {
        throw std::runtime_error("augment_prefixes: item '" + e.item +
                                 "' is not in the vocab");
      }
      indexed.emplace_back(item, bit->second);
    }
    for (std::size_t t = 1; t < indexed.size(); ++t) {
      const std::size_t lo = t > static_cast<std::size_t>(max_len)
                                 ? t - static_cast<std::size_t>(max_len)
                                 : 0;
      SessionExample ex;
      ex.prefix.assign(indexed.begin() + static_cast<std::ptrdiff_t>(lo),
                       indexed.begin() + static_cast<std::ptrdiff_t>(t));
      ex.target_item = indexed[t].first;
      ex.target_behavior = indexed[t].second;
      if (drop_unseen_items) {
        bool unseen = ex.target_item < 0;
        for (const auto& [item, behavior] : ex.prefix) unseen = unseen || item < 0;
        if (unseen) continue;
      }
      out.push_back(std::move(ex));
    }
  }
  return out;
}

// ---- synthetic corpora -----------------------------------------------------------

SyntheticPreset preset_from_name(const std::string& name) {
  if (name == "tmall_like") return SyntheticPreset::tmall_like;
  if (name == "yoochoose_like") return SyntheticPreset::yoochoose_like;
  if (name == "planted_rule") return SyntheticPreset::planted_rule;
  throw std::runtime_error("unknown synthetic preset '" + name + "'");
}

std::string preset_name(SyntheticPreset preset) {
  switch (preset) {
    case SyntheticPreset::tmall_like: return "tmall_like";
    case SyntheticPreset::yoochoose_like: return "yoochoose_like";
    case SyntheticPreset::planted_rule: return "planted_rule";
  }
  throw std::runtime_error("unknown synthetic preset");
}

std::vector<std::string> preset_behaviors(SyntheticPreset preset) {
  switch (preset) {
    case SyntheticPreset::tmall_like: return {"click", "purchase", "favorite"};
    case SyntheticPreset::yoochoose_like: return {"click", "purchase"};
    case SyntheticPreset::planted_rule: return {"click", "purchase"};
  }
  throw std::runtime_error("unknown synthetic preset");
}

int PlantedRule::category_of(const std::string& item_id) {
  if (item_id.size() < 2 || item_id[0] != 'v') return -1;
  const int idx = std::stoi(item_id.substr(1));
  if (idx < 0 || idx >= categories * items_per_category) return -1;
  return idx / items_per_category;
}

namespace {

std::string session_id_of(int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "s%06d", i);
  return buf;
}

// Behavior marginals are drawn independently per event, so empirical
// frequencies converge to the targets. Item popularity is skewed by the
// squared-uniform index draw.
std::vector<Session> generate_marginal_corpus(
    int n_sessions, std::uint64_t seed, const std::vector<std::string>& behaviors,
    const std::vector<double>& probs, double poisson_mean) {
  const int n_items = std::max(50, n_sessions / 10);
  Rng rng(seed);
  std::vector<Session> sessions;
  sessions.reserve(static_cast<std::size_t>(n_sessions));
  for (int si = 0; si < n_sessions; ++si) {
    Session s;
    s.session_id = session_id_of(si);
    const int len = 3 + rng.poisson(poisson_mean);
    for (int pos = 1; pos <= len; ++pos) {
      int behavior = 0;
      double u = rng.uniform();
      for (std::size_t b = 0; b < probs.size(); ++b) {
        behavior = static_cast<int>(b);
        u -= probs[b];
        if (u < 0.0) break;
      }
      int idx;
      do {
        const double v = rng.uniform();
        idx = static_cast<int>(v * v * n_items);
        idx = std::min(idx, n_items - 1);
      } while (!s.events.empty() && item_id(idx) == s.events.back().item &&
               behaviors[static_cast<std::size_t>(behavior)] == s.events.back().behavior);
      s.events.push_back(Event{item_id(idx),
                               behaviors[static_cast<std::size_t>(behavior)], pos});
    }
    sessions.push_back(std::move(s));
  }
  return sessions;
}

std::vector<Session> generate_planted(int n_sessions, std::uint64_t seed) {
  constexpr int kCats = PlantedRule::categories;
  constexpr int kPerCat = PlantedRule::items_per_category;
  Rng rng(seed);
  auto vid = [](int idx) { return "v" + std::to_string(idx); };

  std::vector<Session> sessions;
  sessions.reserve(static_cast<std::size_t>(n_sessions));
  for (int si = 0; si < n_sessions; ++si) {
    Session s;
    s.session_id = session_id_of(si);
    const int len = 3 + rng.poisson(3.5);
    int run_cat = -1;
    std::vector<int> run;  // items of the current within-category click run
    for (int pos = 1; pos <= len; ++pos) {
      if (run.size() >= 2) {
        if (rng.uniform() < PlantedRule::purchase_prob) {
          s.events.push_back(Event{vid(run.front()), "purchase", pos});
          run_cat = -1;
          run.clear();
        } else {
          int it;
          do {
            it = static_cast<int>(rng.below(kCats * kPerCat));
          } while (it == run.back());
          s.events.push_back(Event{vid(it), "click", pos});
          run_cat = it / kPerCat;
          run = {it};
        }
      } else if (run.empty()) {
        const int cat = static_cast<int>(rng.below(kCats));
        const int it = cat * kPerCat + static_cast<int>(rng.below(kPerCat));
        s.events.push_back(Event{vid(it), "click", pos});
        run_cat = cat;
        run = {it};
      } else {
        if (rng.uniform() < PlantedRule::extend_prob) {
          int it;
          do {
            it = run_cat * kPerCat + static_cast<int>(rng.below(kPerCat));
          } while (it == run.back());
          s.events.push_back(Event{vid(it), "click", pos});
          run.push_back(it);
        } else {
          int cat;
          do {
            cat = static_cast<int>(rng.below(kCats));
          } while (cat == run_cat);
          const int it = cat * kPerCat + static_cast<int>(rng.below(kPerCat));
          s.events.push_back(Event{vid(it), "click", pos});
          run_cat = cat;
          run = {it};
        }
      }
    }
    sessions.push_back(std::move(s));
  }
  return sessions;
}

}  // namespace

std::vector<Session> generate_synthetic(SyntheticPreset preset, int n_sessions,
                                        std::uint64_t seed) {
  if (n_sessions < 1) throw std::runtime_error("generate_synthetic: n_sessions must be >= 1");
  switch (preset) {
    case SyntheticPreset::tmall_like:
      return generate_marginal_corpus(n_sessions, seed, preset_behaviors(preset),
                                      {0.903, 0.036, 0.061}, 3.73);
    case SyntheticPreset::yoochoose_like:
      return generate_marginal_corpus(n_sessions, seed, preset_behaviors(preset),
                                      {0.951, 0.049}, 3.18);
    case SyntheticPreset::planted_rule:
      return generate_planted(n_sessions, seed);
  }
  throw std::runtime_error("unknown synthetic preset");
}

// ---- processed artifacts ----------------------------------------------------------

void write_examples_jsonl(const std::string& path,
                          const std::vector<SessionExample>& examples) {
  auto out = open_output(path);
  for (const auto& ex : examples) {
    json prefix = json::array();
    for (const auto& [item, behavior] : ex.prefix) {
      prefix.push_back({item, behavior});
    }
    out << json{{"prefix", prefix},
                {"target_item", ex.target_item},
                {"target_behavior", ex.target_behavior}}
               .dump()
        << "\n";
  }
}

std::vector<SessionExample> read_examples_jsonl(const std::string& path) {
  auto in = open_input(path);
  std::vector<SessionExample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      line_error(path, line_no, e.what());
    }
    if (!j.is_object() || !j.contains("prefix") || !j.contains("target_item") ||
        !j.contains("target_behavior")) {
      line_error(path, line_no, "expected {prefix, target_item, target_behavior}");
    }
    SessionExample ex;
    for (const auto& p : j["prefix"]) {
      if (!p.is_array() || p.size() != 2) line_error(path, line_no, "bad prefix entry");
      ex.prefix.emplace_back(p[0].get<int>(), p[1].get<int>());
    }
    ex.target_item = j["target_item"].get<int>();
    ex.target_behavior = j["target_behavior"].get<int>();
    out.push_back(std::move(ex));
  }
  return out;
}

void write_vocab_tsv(const std::string& path, const Vocab& vocab) {
  auto out = open_output(path);
  for (std::size_t i = 0; i < vocab.items.size(); ++i) {
    out << i << '\t' << vocab.items[i] << '\t' << vocab.counts[i] << "\n";
  }
}

Vocab read_vocab_tsv(const std::string& path) {
  auto in = open_input(path);
  Vocab v;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::size_t t1 = line.find('\t');
    const std::size_t t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) line_error(path, line_no, "expected 3 fields");
    const long idx = std::stol(line.substr(0, t1));
    if (idx != static_cast<long>(v.items.size())) {
      line_error(path, line_no, "non-contiguous vocab index");
    }
    const std::string id = line.substr(t1 + 1, t2 - t1 - 1);
    v.index_of[id] = static_cast<int>(v.items.size());
    v.items.push_back(id);
    v.counts.push_back(std::stoll(line.substr(t2 + 1)));
  }
  return v;
}

void write_behaviors_tsv(const std::string& path,
                         const std::vector<std::string>& behaviors,
                         const std::vector<std::int64_t>& counts) {
  auto out = open_output(path);
  for (std::size_t i = 0; i < behaviors.size(); ++i) {
    out << i << '\t' << behaviors[i] << '\t'
        << (i < counts.size() ? counts[i] : 0) << "\n";
  }
}

std::vector<std::string> read_behaviors_tsv(const std::string& path) {
  auto in = open_input(path);
  std::vector<std::string> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::size_t t1 = line.find('\t');
    const std::size_t t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) line_error(path, line_no, "expected 3 fields");
    labels.push_back(line.substr(t1 + 1, t2 - t1 - 1));
  }
  return labels;
}

}  // namespace mgcnet

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace mgcnet {

// One user interaction. `behavior` is the interaction type label
// (e.g. "click", "purchase").
struct Event {
  std::string item;
  std::string behavior;
  std::int64_t ts = 0;
};

// A session holds its events in chronological order with no two consecutive
// events sharing both item and behavior (duplicates are collapsed on ingest).
struct Session {
  std::string session_id;
  std::vector<Event> events;
};

enum class SessionFormat { jsonl, tsv };

// Dense item index assignment in first-appearance order with occurrence
// counts from the corpus the vocab was built on.
struct Vocab {
  std::vector<std::string> items;           // index -> external id
  std::vector<std::int64_t> counts;         // index -> occurrence count
  std::unordered_map<std::string, int> index_of;

  int index(const std::string& id) const {
    auto it = index_of.find(id);
    return it == index_of.end() ? -1 : it->second;
  }
  std::size_t size() const { return items.size(); }

  static Vocab build(const std::vector<Session>& sessions);
};

// A training/evaluation example: a truncated prefix of (item index, behavior
// index) pairs plus the next interaction to predict.
struct SessionExample {
  std::vector<std::pair<int, int>> prefix;
  int target_item = -1;
  int target_behavior = -1;
};

// ---- ingest ----------------------------------------------------------------

// Reads a session corpus. JSONL carries one session object per line:
//   {"session_id": "...", "events": [{"item": "...", "behavior": "...", "ts": 3}]}
// TSV carries one event per line (session_id, item, behavior, ts) with the
// lines of a session contiguous. Events are stably sorted by ts within each
// session (ties keep file order) and consecutive duplicates are collapsed.
// Malformed lines raise errors naming the 1-based line number. When
// `declared_behaviors` is given, any other behavior label is rejected.
std::vector<Session> parse_sessions(
    const std::string& path, SessionFormat format,
    const std::vector<std::string>* declared_behaviors = nullptr);

void write_sessions_jsonl(const std::string& path,
                          const std::vector<Session>& sessions);
void write_sessions_tsv(const std::string& path,
                        const std::vector<Session>& sessions);

// Behavior labels observed in the corpus, lexicographically sorted, with
// occurrence counts aligned to the labels.
std::vector<std::string> infer_behavior_vocab(const std::vector<Session>& sessions);
std::vector<std::int64_t> behavior_counts(const std::vector<Session>& sessions,
                                          const std::vector<std::string>& behaviors);

// ---- preprocessing -----------------------------------------------------------

struct FilterResult {
  std::vector<Session> sessions;
  Vocab vocab;
};

// Alternates dropping items that occur fewer than `min_item_count` times and
// sessions shorter than `min_session_len` until both constraints hold
// simultaneously (removals re-collapse any duplicates they expose). Running
// the filter on its own output is the identity. Raises if nothing survives.
FilterResult preprocess_filter(std::vector<Session> sessions,
                               int min_session_len = 3,
                               std::int64_t min_item_count = 5);

struct SplitResult {
  std::vector<Session> train, valid, test;
};

// Seeded session-level shuffle followed by a largest-remainder assignment of
// the ratio sizes (ties favor train, then valid). Ratios must sum to 1.
SplitResult split_dataset(const std::vector<Session>& sessions,
                          const std::array<double, 3>& ratios,
                          std::uint64_t seed);

// Keeps the most recent `fraction` of sessions ordered by their final event
// timestamp (stable for ties). At least one session is kept.
std::vector<Session> most_recent_fraction(const std::vector<Session>& sessions,
                                          double fraction);

// Expands each session into one example per non-initial position; the prefix
// keeps the most recent min(t, max_len) events before the target. Items are
// mapped through `item_vocab`. With `drop_unseen_items`, examples whose
// target or prefix touches an out-of-vocab item are skipped (valid/test
// against a train vocab); otherwise an unknown item raises.
std::vector<SessionExample> augment_prefixes(
    const std::vector<Session>& sessions, const Vocab& item_vocab,
    const std::vector<std::string>& behaviors, int max_len,
    bool drop_unseen_items);

// ---- synthetic corpora -------------------------------------------------------

enum class SyntheticPreset { tmall_like, yoochoose_like, planted_rule };

SyntheticPreset preset_from_name(const std::string& name);
std::string preset_name(SyntheticPreset preset);
std::vector<std::string> preset_behaviors(SyntheticPreset preset);

// Constants of the planted_rule generator, exposed so tests can recover the
// category of an item from its id (items are "v<idx>", category = idx / 12).
struct PlantedRule {
  static constexpr int categories = 10;
  static constexpr int items_per_category = 12;
  static constexpr double purchase_prob = 0.9;
  static constexpr double extend_prob = 0.8;
  static int category_of(const std::string& item_id);
};

// Deterministic synthetic corpus. tmall_like draws behaviors from
// {click 0.903, purchase 0.036, favorite 0.061}, yoochoose_like from
// {click 0.951, purchase 0.049}; planted_rule emits two-click category runs
// that are followed w.p. 0.9 by a purchase of the run's first item.
std::vector<Session> generate_synthetic(SyntheticPreset preset, int n_sessions,
                                        std::uint64_t seed);

// ---- processed artifacts -------------------------------------------------------

// Examples as JSONL: {"prefix": [[item, behavior], ...],
//                     "target_item": i, "target_behavior": b}
void write_examples_jsonl(const std::string& path,
                          const std::vector<SessionExample>& examples);
std::vector<SessionExample> read_examples_jsonl(const std::string& path);

// Item vocab sidecar: index <TAB> external_id <TAB> count.
void write_vocab_tsv(const std::string& path, const Vocab& vocab);
Vocab read_vocab_tsv(const std::string& path);

// Behavior sidecar: index <TAB> label <TAB> count.
void write_behaviors_tsv(const std::string& path,
                         const std::vector<std::string>& behaviors,
                         const std::vector<std::int64_t>& counts);
std::vector<std::string> read_behaviors_tsv(const std::string& path);

}  // namespace mgcnet

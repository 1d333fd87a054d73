#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "sessrec/errors.hpp"

namespace sessrec {

// A session as read from the input log, before vocabulary remapping.
struct RawSession {
  std::string session_id;
  std::vector<std::string> items;
  std::vector<int64_t> timestamps;  // unix seconds, nondecreasing
};

// A session after items have been remapped to dense indices.
struct SessionRecord {
  std::string session_id;
  std::vector<int64_t> items;
  std::vector<int64_t> timestamps;
};

// One training/evaluation example: a prefix plus the next item.
struct Example {
  std::string session_id;
  std::vector<int64_t> items;
  std::vector<int64_t> timestamps;
  int64_t target = -1;
};

struct DatasetSplit {
  std::vector<Example> train;
  std::vector<Example> test;
  int64_t item_count = 0;
  std::vector<std::string> item_names;             // dense index -> original id
  std::unordered_map<std::string, int64_t> vocab;  // original id -> dense index
};

// Reads delimited text with a header naming session_id, item_id and
// timestamp (TSV or CSV, chosen by whether the header contains a tab).
// Rows are grouped by session in first-appearance order and sorted by
// timestamp within each session; ties keep file order.
std::vector<RawSession> parse_sessions(std::istream& in);
std::vector<RawSession> parse_sessions_file(const std::string& path);

// Splits sessions wherever consecutive events are more than gap_seconds
// apart. Split parts get "#k" suffixes on the session id.
std::vector<RawSession> gap_split(const std::vector<RawSession>& sessions,
                                  int64_t gap_seconds);

// Repeatedly drops items occurring fewer than min_item_freq times
// corpus-wide and then sessions shorter than min_session_len, until stable.
std::vector<RawSession> filter_corpus(std::vector<RawSession> sessions,
                                      int64_t min_session_len = 3,
                                      int64_t min_item_freq = 5);

// ([v1..vk], v_{k+1}) for k = 1..n-1; empty when the session is shorter
// than 2.
std::vector<Example> augment_prefixes(const SessionRecord& session);

// floor(|t_i - t_j| / bucket_width) clamped to [0, max_step].
int64_t bucket_interval(int64_t t_i, int64_t t_j, int64_t bucket_width,
                        int64_t max_step);

struct PreprocessOptions {
  int64_t min_session_len = 3;
  int64_t min_item_freq = 5;
  int64_t gap_split_seconds = 0;  // 0 disables gap splitting
  double test_fraction = 0.1;
};

// Full pipeline: optional gap split, frequency/length filtering, a
// chronological split (the last fraction of sessions by end timestamp
// becomes the test side), vocabulary assignment and prefix augmentation.
DatasetSplit preprocess(std::vector<RawSession> sessions,
                        const PreprocessOptions& opt);

void save_dataset(const DatasetSplit& split, const std::string& path);
DatasetSplit load_dataset(const std::string& path);

}  // namespace sessrec

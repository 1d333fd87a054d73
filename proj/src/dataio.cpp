#include "sessrec/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

namespace sessrec {

namespace {

std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    size_t pos = line.find(delim, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

int64_t parse_int64(const std::string& s, int64_t line_no, const char* what) {
  std::string t = trim(s);
  int64_t value = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size())
    throw ParseError("line " + std::to_string(line_no) + ": " + what + " '" +
                     s + "' is not an integer");
  return value;
}

struct Row {
  std::string item;
  int64_t timestamp;
  int64_t file_order;
};

}  // namespace

std::vector<RawSession> parse_sessions(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) return {};
  const char delim = header.find('\t') != std::string::npos ? '\t' : ',';
  std::vector<std::string> names = split_line(header, delim);
  int sid_col = -1, item_col = -1, ts_col = -1;
  for (size_t i = 0; i < names.size(); ++i) {
    std::string n = trim(names[i]);
    if (n == "session_id") sid_col = static_cast<int>(i);
    if (n == "item_id") item_col = static_cast<int>(i);
    if (n == "timestamp") ts_col = static_cast<int>(i);
  }
  if (sid_col < 0 || item_col < 0 || ts_col < 0)
    throw ParseError(
        "line 1: header must name session_id, item_id and timestamp columns");

  std::vector<std::string> order;  // session ids in first-appearance order
  std::unordered_map<std::string, size_t> index;
  std::vector<std::vector<Row>> rows;

  std::string line;
  int64_t line_no = 1;
  int64_t file_order = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields = split_line(line, delim);
    if (fields.size() != names.size())
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(names.size()) + " fields, got " +
                       std::to_string(fields.size()));
    std::string sid = trim(fields[static_cast<size_t>(sid_col)]);
    std::string item = trim(fields[static_cast<size_t>(item_col)]);
    if (sid.empty() || item.empty())
      throw ParseError("line " + std::to_string(line_no) +
                       ": empty session_id or item_id");
    int64_t ts = parse_int64(fields[static_cast<size_t>(ts_col)], line_no,
                             "timestamp");
    auto it = index.find(sid);
    if (it == index.end()) {
      it = index.emplace(sid, rows.size()).first;
      order.push_back(sid);
      rows.emplace_back();
    }
    rows[it->second].push_back({std::move(item), ts, file_order++});
  }

  std::vector<RawSession> out;
  out.reserve(order.size());
  for (size_t s = 0; s < order.size(); ++s) {
    std::vector<Row>& rs = rows[s];
    std::stable_sort(rs.begin(), rs.end(), [](const Row& a, const Row& b) {
      return a.timestamp < b.timestamp;
    });
    RawSession session;
    session.session_id = order[s];
    session.items.reserve(rs.size());
    session.timestamps.reserve(rs.size());
    for (Row& r : rs) {
      session.items.push_back(std::move(r.item));
      session.timestamps.push_back(r.timestamp);
    }
    out.push_back(std::move(session));
  }
  return out;
}

std::vector<RawSession> parse_sessions_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return parse_sessions(in);
}

std::vector<RawSession> gap_split(const std::vector<RawSession>& sessions,
                                  int64_t gap_seconds) {
  if (gap_seconds <= 0) throw ConfigError("gap_split: gap must be positive");
  std::vector<RawSession> out;
  for (const RawSession& s : sessions) {
    std::vector<std::pair<size_t, size_t>> parts;  // [begin, end)
    size_t begin = 0;
    for (size_t i = 1; i < s.items.size(); ++i) {
      if (s.timestamps[i] - s.timestamps[i - 1] > gap_seconds) {
        parts.emplace_back(begin, i);
        begin = i;
      }
    }
    parts.emplace_back(begin, s.items.size());
    for (size_t p = 0; p < parts.size(); ++p) {
      RawSession part;
      part.session_id = parts.size() == 1
                            ? s.session_id
                            : s.session_id + "#" + std::to_string(p);
      part.items.assign(s.items.begin() + parts[p].first,
                        s.items.begin() + parts[p].second);
      part.timestamps.assign(s.timestamps.begin() + parts[p].first,
                             s.timestamps.begin() + parts[p].second);
      out.push_back(std::move(part));
    }
  }
  return out;
}

std::vector<RawSession> filter_corpus(std::vector<RawSession> sessions,
                                      int64_t min_session_len,
                                      int64_t min_item_freq) {
  bool changed = true;
  while (changed) {
    changed = false;
    std::unordered_map<std::string, int64_t> freq;
    for (const RawSession& s : sessions)
      for (const std::string& item : s.items) ++freq[item];
    for (RawSession& s : sessions) {
      std::vector<std::string> items;
      std::vector<int64_t> times;
      for (size_t i = 0; i < s.items.size(); ++i) {
        if (freq[s.items[i]] >= min_item_freq) {
          items.push_back(s.items[i]);
          times.push_back(s.timestamps[i]);
        }
      }
      if (items.size() != s.items.size()) {
        changed = true;
        s.items = std::move(items);
        s.timestamps = std::move(times);
      }
    }
    size_t before = sessions.size();
    std::erase_if(sessions, [&](const RawSession& s) {
      return static_cast<int64_t>(s.items.size()) < min_session_len;
    });
    if (sessions.size() != before) changed = true;
  }
  return sessions;
}

std::vector<Example> augment_prefixes(const SessionRecord& session) {
  std::vector<Example> out;
  const size_t n = session.items.size();
  if (n < 2) return out;
  out.reserve(n - 1);
  for (size_t k = 1; k < n; ++k) {
    Example e;
    e.session_id = session.session_id;
    e.items.assign(session.items.begin(), session.items.begin() + k);
    e.timestamps.assign(session.timestamps.begin(),
                        session.timestamps.begin() + k);
    e.target = session.items[k];
    out.push_back(std::move(e));
  }
  return out;
}

int64_t bucket_interval(int64_t t_i, int64_t t_j, int64_t bucket_width,
                        int64_t max_step) {
  if (bucket_width <= 0)
    throw ConfigError("bucket_interval: bucket width must be positive");
  int64_t diff = t_i >= t_j ? t_i - t_j : t_j - t_i;
  int64_t steps = diff / bucket_width;
  return std::min(steps, max_step);
}

DatasetSplit preprocess(std::vector<RawSession> sessions,
                        const PreprocessOptions& opt) {
  if (opt.test_fraction < 0.0 || opt.test_fraction > 1.0)
    throw ConfigError("preprocess: test fraction must lie in [0, 1]");
  if (opt.gap_split_seconds > 0)
    sessions = gap_split(sessions, opt.gap_split_seconds);
  sessions = filter_corpus(std::move(sessions), opt.min_session_len,
                           opt.min_item_freq);

  // chronological split: the sessions ending latest form the test side
  const size_t n = sessions.size();
  const size_t test_count =
      static_cast<size_t>(std::floor(static_cast<double>(n) *
                                     opt.test_fraction));
  std::vector<size_t> by_end(n);
  for (size_t i = 0; i < n; ++i) by_end[i] = i;
  std::stable_sort(by_end.begin(), by_end.end(), [&](size_t a, size_t b) {
    return sessions[a].timestamps.back() < sessions[b].timestamps.back();
  });
  std::vector<bool> is_test(n, false);
  for (size_t i = n - test_count; i < n; ++i) is_test[by_end[i]] = true;

  DatasetSplit split;
  auto intern = [&](const std::string& item) {
    auto it = split.vocab.find(item);
    if (it != split.vocab.end()) return it->second;
    int64_t id = static_cast<int64_t>(split.item_names.size());
    split.vocab.emplace(item, id);
    split.item_names.push_back(item);
    return id;
  };
  auto remap = [&](const RawSession& s) {
    SessionRecord r;
    r.session_id = s.session_id;
    r.timestamps = s.timestamps;
    r.items.reserve(s.items.size());
    for (const std::string& item : s.items) r.items.push_back(intern(item));
    return r;
  };

  std::vector<SessionRecord> train_sessions, test_sessions;
  for (size_t i = 0; i < n; ++i)
    if (!is_test[i]) train_sessions.push_back(remap(sessions[i]));
  for (size_t i = 0; i < n; ++i)
    if (is_test[i]) test_sessions.push_back(remap(sessions[i]));
  split.item_count = static_cast<int64_t>(split.item_names.size());

  for (const SessionRecord& s : train_sessions)
    for (Example& e : augment_prefixes(s)) split.train.push_back(std::move(e));
  for (const SessionRecord& s : test_sessions)
    for (Example& e : augment_prefixes(s)) split.test.push_back(std::move(e));
  return split;
}

namespace {

void check_writable_token(const std::string& token, const char* what) {
  if (token.find('\t') != std::string::npos ||
      token.find('\n') != std::string::npos)
    throw IoError(std::string(what) + " '" + token +
                  "' contains a tab or newline and cannot be serialized");
}

void write_examples(std::ostream& out, const std::vector<Example>& examples) {
  for (const Example& e : examples) {
    check_writable_token(e.session_id, "session id");
    out << e.session_id << '\t' << e.items.size() << '\t';
    for (size_t i = 0; i < e.items.size(); ++i)
      out << (i ? " " : "") << e.items[i];
    out << '\t';
    for (size_t i = 0; i < e.timestamps.size(); ++i)
      out << (i ? " " : "") << e.timestamps[i];
    out << '\t' << e.target << '\n';
  }
}

std::vector<int64_t> parse_int_list(const std::string& s, int64_t line_no,
                                    const char* what) {
  std::vector<int64_t> out;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) out.push_back(parse_int64(tok, line_no, what));
  return out;
}

std::string next_line(std::istream& in, int64_t& line_no) {
  std::string line;
  if (!std::getline(in, line))
    throw ParseError("line " + std::to_string(line_no + 1) +
                     ": unexpected end of dataset file");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

int64_t parse_counted_header(const std::string& line, const char* key,
                             int64_t line_no) {
  std::istringstream is(line);
  std::string word;
  int64_t count = -1;
  if (!(is >> word >> count) || word != key || count < 0)
    throw ParseError("line " + std::to_string(line_no) + ": expected '" +
                     key + " <count>', got '" + line + "'");
  return count;
}

std::vector<Example> read_examples(std::istream& in, int64_t count,
                                   int64_t item_count, int64_t& line_no) {
  std::vector<Example> out;
  out.reserve(static_cast<size_t>(count));
  for (int64_t i = 0; i < count; ++i) {
    std::string line = next_line(in, line_no);
    std::vector<std::string> fields = split_line(line, '\t');
    if (fields.size() != 5)
      throw ParseError("line " + std::to_string(line_no) +
                       ": expected 5 tab-separated fields");
    Example e;
    e.session_id = fields[0];
    int64_t n = parse_int64(fields[1], line_no, "length");
    e.items = parse_int_list(fields[2], line_no, "item index");
    e.timestamps = parse_int_list(fields[3], line_no, "timestamp");
    e.target = parse_int64(fields[4], line_no, "target");
    if (static_cast<int64_t>(e.items.size()) != n ||
        static_cast<int64_t>(e.timestamps.size()) != n || n < 1)
      throw ParseError("line " + std::to_string(line_no) +
                       ": item/timestamp counts disagree with length " +
                       std::to_string(n));
    for (int64_t v : e.items)
      if (v < 0 || v >= item_count)
        throw ParseError("line " + std::to_string(line_no) + ": item index " +
                         std::to_string(v) + " outside vocabulary");
    if (e.target < 0 || e.target >= item_count)
      throw ParseError("line " + std::to_string(line_no) + ": target " +
                       std::to_string(e.target) + " outside vocabulary");
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace

void save_dataset(const DatasetSplit& split, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "sessrec-dataset v1\n";
  out << "item_count " << split.item_count << "\n";
  out << "vocab " << split.item_names.size() << "\n";
  for (size_t i = 0; i < split.item_names.size(); ++i) {
    check_writable_token(split.item_names[i], "item id");
    out << split.item_names[i] << '\t' << i << '\n';
  }
  out << "train " << split.train.size() << "\n";
  write_examples(out, split.train);
  out << "test " << split.test.size() << "\n";
  write_examples(out, split.test);
  if (!out) throw IoError("failed while writing " + path);
}

DatasetSplit load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  int64_t line_no = 0;
  if (next_line(in, line_no) != "sessrec-dataset v1")
    throw ParseError("line 1: not a sessrec-dataset v1 file");
  DatasetSplit split;
  split.item_count =
      parse_counted_header(next_line(in, line_no), "item_count", line_no);
  int64_t vocab_count =
      parse_counted_header(next_line(in, line_no), "vocab", line_no);
  if (vocab_count != split.item_count)
    throw ParseError("line " + std::to_string(line_no) +
                     ": vocab size disagrees with item_count");
  split.item_names.assign(static_cast<size_t>(vocab_count), "");
  for (int64_t i = 0; i < vocab_count; ++i) {
    std::string line = next_line(in, line_no);
    std::vector<std::string> fields = split_line(line, '\t');
    if (fields.size() != 2)
      throw ParseError("line " + std::to_string(line_no) +
                       ": expected '<item>\\t<index>'");
    int64_t id = parse_int64(fields[1], line_no, "vocab index");
    if (id < 0 || id >= vocab_count ||
        !split.item_names[static_cast<size_t>(id)].empty())
      throw ParseError("line " + std::to_string(line_no) +
                       ": vocab indices must form a permutation");
    split.item_names[static_cast<size_t>(id)] = fields[0];
    split.vocab.emplace(fields[0], id);
  }
  int64_t train_count =
      parse_counted_header(next_line(in, line_no), "train", line_no);
  split.train = read_examples(in, train_count, split.item_count, line_no);
  int64_t test_count =
      parse_counted_header(next_line(in, line_no), "test", line_no);
  split.test = read_examples(in, test_count, split.item_count, line_no);
  return split;
}

}  // namespace sessrec

#include <doctest.h>

#include <unistd.h>

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "sessrec/dataio.hpp"
#include "sessrec/rng.hpp"

using namespace sessrec;

namespace {

RawSession raw(const std::string& id, std::vector<std::string> items,
               std::vector<int64_t> times) {
  RawSession s;
  s.session_id = id;
  s.items = std::move(items);
  s.timestamps = std::move(times);
  return s;
}

std::string temp_path(const char* stem) {
  return std::string("/tmp/sessrec_test_") + stem + "_" +
         std::to_string(::getpid());
}

}  // namespace

TEST_SUITE("dataio") {

TEST_CASE("parse groups one session of three rows") {
  std::istringstream in(
      "session_id\titem_id\ttimestamp\n"
      "s1\ta\t10\n"
      "s1\tb\t20\n"
      "s1\tc\t30\n");
  auto sessions = parse_sessions(in);
  REQUIRE(sessions.size() == 1);
  CHECK(sessions[0].session_id == "s1");
  CHECK(sessions[0].items == std::vector<std::string>{"a", "b", "c"});
  CHECK(sessions[0].timestamps == std::vector<int64_t>{10, 20, 30});
}

TEST_CASE("parse sorts rows that arrive out of time order") {
  std::istringstream in(
      "session_id,item_id,timestamp\n"
      "s1,b,20\n"
      "s1,a,10\n"
      "s1,c,30\n");
  auto sessions = parse_sessions(in);
  REQUIRE(sessions.size() == 1);
  CHECK(sessions[0].items == std::vector<std::string>{"a", "b", "c"});
  CHECK(sessions[0].timestamps == std::vector<int64_t>{10, 20, 30});
}

TEST_CASE("parse keeps file order for tied timestamps") {
  std::istringstream in(
      "session_id,item_id,timestamp\n"
      "s1,x,10\n"
      "s1,y,10\n"
      "s1,z,10\n");
  auto sessions = parse_sessions(in);
  REQUIRE(sessions.size() == 1);
  CHECK(sessions[0].items == std::vector<std::string>{"x", "y", "z"});
}

TEST_CASE("parse reports a non-numeric timestamp with its line number") {
  std::istringstream in(
      "session_id,item_id,timestamp\n"
      "s1,a,10\n"
      "s1,b,oops\n");
  try {
    parse_sessions(in);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("parse of an empty stream yields an empty list") {
  std::istringstream in("");
  CHECK(parse_sessions(in).empty());
}

TEST_CASE("parse rejects a header missing the required columns") {
  std::istringstream in("user,thing,when\nu1,a,10\n");
  CHECK_THROWS_AS(parse_sessions(in), ParseError);
}

TEST_CASE("parse keeps sessions in first-appearance order") {
  std::istringstream in(
      "session_id,item_id,timestamp\n"
      "s2,a,10\n"
      "s1,b,5\n"
      "s2,c,20\n");
  auto sessions = parse_sessions(in);
  REQUIRE(sessions.size() == 2);
  CHECK(sessions[0].session_id == "s2");
  CHECK(sessions[1].session_id == "s1");
  CHECK(sessions[0].items == std::vector<std::string>{"a", "c"});
}

TEST_CASE("gap split cuts a session at large pauses") {
  std::vector<RawSession> in{raw("s", {"a", "b", "c", "d"},
                                 {0, 100, 5000, 5100})};
  auto out = gap_split(in, 3600);
  REQUIRE(out.size() == 2);
  CHECK(out[0].session_id == "s#0");
  CHECK(out[0].items == std::vector<std::string>{"a", "b"});
  CHECK(out[1].session_id == "s#1");
  CHECK(out[1].items == std::vector<std::string>{"c", "d"});
}

TEST_CASE("gap split leaves tight sessions alone, id unchanged") {
  std::vector<RawSession> in{raw("s", {"a", "b"}, {0, 100})};
  auto out = gap_split(in, 3600);
  REQUIRE(out.size() == 1);
  CHECK(out[0].session_id == "s");
}

TEST_CASE("gap split rejects a nonpositive gap") {
  std::vector<RawSession> in{raw("s", {"a"}, {0})};
  CHECK_THROWS_AS(gap_split(in, 0), ConfigError);
}

TEST_CASE("filter drops sessions of length two and under") {
  std::vector<RawSession> in;
  in.push_back(raw("keep", {"a", "a", "a", "a", "a"}, {1, 2, 3, 4, 5}));
  in.push_back(raw("short", {"a", "a"}, {1, 2}));
  auto out = filter_corpus(in, 3, 5);
  REQUIRE(out.size() == 1);
  CHECK(out[0].session_id == "keep");
}

TEST_CASE("filter strips items rarer than the frequency floor") {
  // "b" appears 4 times corpus-wide and must vanish everywhere; each
  // session keeps enough "a"s to stay above the length floor.
  std::vector<RawSession> in;
  in.push_back(raw("s1", {"a", "b", "a", "b", "a"}, {1, 2, 3, 4, 5}));
  in.push_back(raw("s2", {"a", "b", "a", "b", "a"}, {1, 2, 3, 4, 5}));
  auto out = filter_corpus(in, 3, 5);
  REQUIRE(out.size() == 2);
  CHECK(out[0].items == std::vector<std::string>{"a", "a", "a"});
  CHECK(out[0].timestamps == std::vector<int64_t>{1, 3, 5});
  CHECK(out[1].items == std::vector<std::string>{"a", "a", "a"});
}

TEST_CASE("filter cascades to a fixpoint on the five-session toy") {
  // Hand enumeration. Item counts: a=6, b=5, c=4, d=3, e=1.
  // Pass 1 drops c, d, e (freq < 5): s1 [a,b,a] keeps 3, s2 [a,b] shrinks
  // to 2 and dies, s3 [a,b,a] keeps 3, s4 [b,b] dies, s5 [a] dies.
  // Recount on survivors: a=4, b=2. Pass 2 drops both, everything dies.
  std::vector<RawSession> in;
  in.push_back(raw("s1", {"a", "b", "a", "c"}, {1, 2, 3, 4}));
  in.push_back(raw("s2", {"a", "c", "b", "d"}, {1, 2, 3, 4}));
  in.push_back(raw("s3", {"a", "b", "a", "d"}, {1, 2, 3, 4}));
  in.push_back(raw("s4", {"b", "c", "b", "d"}, {1, 2, 3, 4}));
  in.push_back(raw("s5", {"a", "c", "e"}, {1, 2, 3}));
  auto out = filter_corpus(in, 3, 5);
  CHECK(out.empty());
}

TEST_CASE("filter fixpoint keeps a stable core") {
  // f appears 6 times across three long sessions and survives; the rare
  // tail items cascade away without dragging the core sessions under the
  // length floor.
  std::vector<RawSession> in;
  in.push_back(raw("s1", {"f", "f", "g", "f"}, {1, 2, 3, 4}));
  in.push_back(raw("s2", {"f", "g", "f", "g"}, {1, 2, 3, 4}));
  in.push_back(raw("s3", {"g", "f", "g", "f"}, {1, 2, 3, 4}));
  auto out = filter_corpus(in, 3, 5);
  REQUIRE(out.size() == 3);
  for (const auto& s : out) {
    CHECK(s.items.size() >= 3);
    for (const auto& it : s.items) CHECK((it == "f" || it == "g"));
  }
}

TEST_CASE("filter is idempotent") {
  Rng rng(11);
  std::vector<RawSession> in;
  for (int s = 0; s < 40; ++s) {
    RawSession r;
    r.session_id = "s" + std::to_string(s);
    int64_t n = rng.uniform_range(1, 8);
    int64_t t = 0;
    for (int64_t i = 0; i < n; ++i) {
      r.items.push_back("i" + std::to_string(rng.uniform_int(12)));
      t += rng.uniform_range(1, 50);
      r.timestamps.push_back(t);
    }
    in.push_back(std::move(r));
  }
  auto once = filter_corpus(in, 3, 5);
  auto twice = filter_corpus(once, 3, 5);
  REQUIRE(once.size() == twice.size());
  for (size_t i = 0; i < once.size(); ++i) {
    CHECK(once[i].session_id == twice[i].session_id);
    CHECK(once[i].items == twice[i].items);
    CHECK(once[i].timestamps == twice[i].timestamps);
  }
}

TEST_CASE("prefix augmentation unrolls a three-item session") {
  SessionRecord s{"s", {7, 8, 9}, {10, 20, 30}};
  auto ex = augment_prefixes(s);
  REQUIRE(ex.size() == 2);
  CHECK(ex[0].items == std::vector<int64_t>{7});
  CHECK(ex[0].timestamps == std::vector<int64_t>{10});
  CHECK(ex[0].target == 8);
  CHECK(ex[1].items == std::vector<int64_t>{7, 8});
  CHECK(ex[1].timestamps == std::vector<int64_t>{10, 20});
  CHECK(ex[1].target == 9);
}

TEST_CASE("prefix augmentation of a pair gives one example") {
  SessionRecord s{"s", {1, 2}, {5, 6}};
  auto ex = augment_prefixes(s);
  REQUIRE(ex.size() == 1);
  CHECK(ex[0].items == std::vector<int64_t>{1});
  CHECK(ex[0].target == 2);
}

TEST_CASE("prefix augmentation of a singleton is empty") {
  SessionRecord s{"s", {1}, {5}};
  CHECK(augment_prefixes(s).empty());
}

TEST_CASE("prefix augmentation emits sum of (n-1) over a corpus") {
  Rng rng(3);
  size_t expected = 0;
  size_t got = 0;
  for (int s = 0; s < 30; ++s) {
    SessionRecord r;
    r.session_id = "s";
    int64_t n = rng.uniform_range(1, 9);
    for (int64_t i = 0; i < n; ++i) {
      r.items.push_back(rng.uniform_int(20));
      r.timestamps.push_back(i);
    }
    expected += static_cast<size_t>(n - 1);
    got += augment_prefixes(r).size();
  }
  CHECK(got == expected);
}

TEST_CASE("interval bucketing floors, zeroes and clamps") {
  CHECK(bucket_interval(100, 40, 8, 300) == 7);
  CHECK(bucket_interval(40, 40, 8, 300) == 0);
  CHECK(bucket_interval(1000000000, 0, 8, 300) == 300);
}

TEST_CASE("interval bucketing is symmetric") {
  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    int64_t a = rng.uniform_range(0, 100000);
    int64_t b = rng.uniform_range(0, 100000);
    CHECK(bucket_interval(a, b, 8, 300) == bucket_interval(b, a, 8, 300));
  }
}

TEST_CASE("interval bucketing rejects a nonpositive width") {
  CHECK_THROWS_AS(bucket_interval(0, 1, 0, 300), ConfigError);
}

TEST_CASE("preprocess splits chronologically by session end") {
  // Ten sessions ending at increasing times; fraction 0.2 puts the last
  // two into the test side regardless of input order.
  std::vector<RawSession> in;
  for (int s = 0; s < 10; ++s) {
    int shuffled = (s * 7) % 10;  // scramble input order
    int64_t base = 1000 * (shuffled + 1);
    in.push_back(raw("s" + std::to_string(shuffled),
                     {"a", "b", "c", "a", "b", "c"},
                     {base, base + 1, base + 2, base + 3, base + 4,
                      base + 5}));
  }
  PreprocessOptions opt;
  opt.test_fraction = 0.2;
  auto split = preprocess(in, opt);
  CHECK(split.item_count == 3);
  // each retained session of length 6 yields 5 prefix examples
  CHECK(split.train.size() == 8 * 5);
  CHECK(split.test.size() == 2 * 5);
  std::set<std::string> test_ids;
  for (const auto& e : split.test) test_ids.insert(e.session_id);
  CHECK(test_ids == std::set<std::string>{"s8", "s9"});
}

TEST_CASE("preprocess keeps every example index inside the vocabulary") {
  Rng rng(13);
  std::vector<RawSession> in;
  for (int s = 0; s < 50; ++s) {
    RawSession r;
    r.session_id = "s" + std::to_string(s);
    int64_t n = rng.uniform_range(2, 9);
    int64_t t = s * 10000;
    for (int64_t i = 0; i < n; ++i) {
      r.items.push_back("i" + std::to_string(rng.uniform_int(9)));
      t += rng.uniform_range(1, 60);
      r.timestamps.push_back(t);
    }
    in.push_back(std::move(r));
  }
  PreprocessOptions opt;
  auto split = preprocess(in, opt);
  REQUIRE(split.item_count > 0);
  auto check_examples = [&](const std::vector<Example>& v) {
    for (const auto& e : v) {
      CHECK(!e.items.empty());
      CHECK(e.target >= 0);
      CHECK(e.target < split.item_count);
      for (int64_t it : e.items) {
        CHECK(it >= 0);
        CHECK(it < split.item_count);
      }
      for (size_t i = 1; i < e.timestamps.size(); ++i)
        CHECK(e.timestamps[i] >= e.timestamps[i - 1]);
    }
  };
  check_examples(split.train);
  check_examples(split.test);
  CHECK(split.item_names.size() == static_cast<size_t>(split.item_count));
  for (const auto& [name, id] : split.vocab)
    CHECK(split.item_names[static_cast<size_t>(id)] == name);
}

TEST_CASE("preprocess rejects an out-of-range test fraction") {
  PreprocessOptions opt;
  opt.test_fraction = 1.5;
  CHECK_THROWS_AS(preprocess({}, opt), ConfigError);
}

TEST_CASE("dataset file round-trips exactly") {
  std::vector<RawSession> in;
  for (int s = 0; s < 12; ++s) {
    int64_t base = 100 * (s + 1);
    in.push_back(raw("sess " + std::to_string(s), {"x", "y", "z", "x"},
                     {base, base + 3, base + 9, base + 12}));
  }
  PreprocessOptions opt;
  opt.test_fraction = 0.25;
  auto split = preprocess(in, opt);
  const std::string path = temp_path("dataset");
  save_dataset(split, path);
  auto loaded = load_dataset(path);
  std::remove(path.c_str());

  CHECK(loaded.item_count == split.item_count);
  CHECK(loaded.item_names == split.item_names);
  REQUIRE(loaded.train.size() == split.train.size());
  REQUIRE(loaded.test.size() == split.test.size());
  for (size_t i = 0; i < split.train.size(); ++i) {
    CHECK(loaded.train[i].session_id == split.train[i].session_id);
    CHECK(loaded.train[i].items == split.train[i].items);
    CHECK(loaded.train[i].timestamps == split.train[i].timestamps);
    CHECK(loaded.train[i].target == split.train[i].target);
  }
  for (size_t i = 0; i < split.test.size(); ++i) {
    CHECK(loaded.test[i].items == split.test[i].items);
    CHECK(loaded.test[i].target == split.test[i].target);
  }
}

TEST_CASE("dataset loader rejects tampered files") {
  std::vector<RawSession> in{
      raw("s0", {"a", "b", "a"}, {1, 2, 3}),
      raw("s1", {"b", "a", "b"}, {10, 20, 30}),
  };
  PreprocessOptions opt;
  opt.min_item_freq = 1;
  opt.test_fraction = 0.0;
  auto split = preprocess(in, opt);
  const std::string path = temp_path("tamper");
  save_dataset(split, path);

  std::ifstream f(path);
  std::stringstream buf;
  buf << f.rdbuf();
  std::string text = buf.str();

  SUBCASE("wrong banner") {
    std::ofstream out(path);
    out << "sessrec-dataset v9\n" << text.substr(text.find('\n') + 1);
    out.close();
    CHECK_THROWS_AS(load_dataset(path), ParseError);
  }
  SUBCASE("truncated") {
    std::ofstream out(path);
    out << text.substr(0, text.size() / 2);
    out.close();
    CHECK_THROWS_AS(load_dataset(path), ParseError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_dataset(path + ".nope"), IoError);
  }
  std::remove(path.c_str());
}

}  // TEST_SUITE

// End-to-end checks for the sessrec binary: every subcommand, the exit-code
// contract (0 ok, 2 usage/config, 3 data, 4 numeric) and the config file
// override rules. Each run spawns the real executable.
#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace {

const std::string& scratch_dir() {
  static const std::string dir = [] {
    const std::string d =
        "/tmp/sessrec_cli_" + std::to_string(::getpid());
    std::filesystem::create_directories(d);
    return d;
  }();
  return dir;
}

struct Cleanup {
  ~Cleanup() {
    std::error_code ec;
    std::filesystem::remove_all(scratch_dir(), ec);
  }
} cleanup;

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

struct RunResult {
  int code = -1;
  std::string out, err;
};

RunResult run(const std::string& args) {
  static int seq = 0;
  const std::string base = scratch_dir() + "/run" + std::to_string(seq++);
  const std::string cmd = std::string(SESSREC_CLI) + " " + args + " >" +
                          base + ".out 2>" + base + ".err";
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(base + ".out");
  r.err = slurp(base + ".err");
  return r;
}

// 2 pools x 8 items, 60 sessions; built once, reused across cases
const std::string& pools_dataset() {
  static const std::string path = [] {
    const std::string p = scratch_dir() + "/pools.ds";
    RunResult r = run("synth --output " + p +
                      " --pools 2 --pool-size 8 --sessions 60 --items-lo 2"
                      " --items-hi 3 --seed 5 --test-frac 0.25");
    if (r.code != 0)
      throw std::runtime_error("synth fixture failed: " + r.err);
    return p;
  }();
  return path;
}

struct Trained {
  std::string checkpoint, log;
};

const Trained& trained_model() {
  static const Trained fx = [] {
    Trained f;
    f.checkpoint = scratch_dir() + "/pools.ckpt";
    f.log = scratch_dir() + "/pools.log";
    RunResult r = run("train --data " + pools_dataset() + " --checkpoint " +
                      f.checkpoint + " --log " + f.log +
                      " --dim 8 --layers 1 --epochs 2 --batch 20 --seed 9"
                      " --validate");
    if (r.code != 0)
      throw std::runtime_error("train fixture failed: " + r.err);
    return f;
  }();
  return fx;
}

std::string token_after(const std::string& text, const std::string& key) {
  const auto pos = text.rfind(key);
  REQUIRE(pos != std::string::npos);
  std::istringstream rest(text.substr(pos + key.size()));
  std::string tok;
  rest >> tok;
  return tok;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("synth reports the split and writes the label sidecar") {
  const std::string ds = scratch_dir() + "/tiny.ds";
  RunResult r = run("synth --output " + ds +
                    " --pools 2 --pool-size 6 --sessions 8 --items-lo 2"
                    " --items-hi 2 --seed 3 --test-frac 0.25");
  REQUIRE(r.code == 0);
  CHECK(r.out.find("6 train / 2 test sessions, 12 items") !=
        std::string::npos);
  const std::string labels = slurp(ds + ".labels");
  CHECK(labels.rfind("sessrec-labels v1\n", 0) == 0);
}

TEST_CASE("train writes a checkpoint and an epoch log") {
  const Trained& fx = trained_model();
  CHECK(std::filesystem::file_size(fx.checkpoint) > 0);
  const std::string log = slurp(fx.log);
  const auto rows = lines_of(log);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].rfind("epoch 1 loss ", 0) == 0);
  CHECK(rows[1].rfind("epoch 2 loss ", 0) == 0);
  CHECK(rows[1].find(" hit10 ") != std::string::npos);
}

TEST_CASE("eval reproduces the final validation metrics") {
  const Trained& fx = trained_model();
  RunResult r =
      run("eval --data " + pools_dataset() + " --checkpoint " + fx.checkpoint);
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("sessrec-metrics v1\n", 0) == 0);
  const std::string log = slurp(fx.log);
  const std::string row10 = "10 " + token_after(log, " hit10 ") + " " +
                            token_after(log, " ndcg10 ") + "\n";
  const std::string row20 = "20 " + token_after(log, " hit20 ") + " " +
                            token_after(log, " ndcg20 ") + "\n";
  CHECK(r.out.find(row10) != std::string::npos);
  CHECK(r.out.find(row20) != std::string::npos);
}

TEST_CASE("eval scores the popularity baseline") {
  RunResult r = run("eval --data " + pools_dataset() + " --popularity");
  REQUIRE(r.code == 0);
  CHECK(r.out.find("examples 15\n") != std::string::npos);
}

TEST_CASE("predict ranks items and explains the interest assignment") {
  const Trained& fx = trained_model();

  SUBCASE("numeric indices with a graph dump") {
    RunResult r = run("predict --checkpoint " + fx.checkpoint +
                      " --items 0,8,1 --times 0,30,60 --topk 5 --dump-graph");
    REQUIRE(r.code == 0);
    const auto rows = lines_of(r.out);
    REQUIRE(!rows.empty());
    CHECK(rows[0] == "graph N=3 H=2");
    CHECK(r.out.find("item-item\n") != std::string::npos);
    int ranked = 0;
    for (const auto& row : rows)
      if (row.rfind(std::to_string(ranked + 1) + " ", 0) == 0) ++ranked;
    CHECK(ranked == 5);
    CHECK(r.out.find("assignment weights\ninterest 0 8 1\n") !=
          std::string::npos);
    CHECK(r.out.find("u0 ") != std::string::npos);
    CHECK(r.out.find("u1 ") != std::string::npos);
  }

  SUBCASE("item names resolve through the dataset vocabulary") {
    RunResult r = run("predict --checkpoint " + fx.checkpoint + " --data " +
                      pools_dataset() + " --items p0_0,p0_1 --times 0,5"
                      " --topk 3");
    REQUIRE(r.code == 0);
    const auto rows = lines_of(r.out);
    REQUIRE(!rows.empty());
    CHECK(rows[0].rfind("1 p", 0) == 0);
  }

  SUBCASE("unknown item names are data errors") {
    RunResult r = run("predict --checkpoint " + fx.checkpoint + " --data " +
                      pools_dataset() + " --items nope --times 0");
    CHECK(r.code == 3);
    CHECK(r.err.find("vocabulary") != std::string::npos);
  }
}

TEST_CASE("single-interest checkpoints have no assignment table") {
  const std::string ckpt = scratch_dir() + "/single.ckpt";
  RunResult t = run("train --data " + pools_dataset() + " --checkpoint " +
                    ckpt + " --dim 8 --layers 1 --epochs 1 --batch 20"
                    " --single-interest --log " + scratch_dir() +
                    "/single.log");
  REQUIRE(t.code == 0);
  RunResult r = run("predict --checkpoint " + ckpt +
                    " --items 0,1 --times 0,9 --topk 2");
  REQUIRE(r.code == 0);
  CHECK(r.out.find("single-interest model: no assignment weights\n") !=
        std::string::npos);
}

TEST_CASE("config file fills in flags and the command line wins") {
  const std::string conf = scratch_dir() + "/train.conf";
  spit(conf,
       "# quick-run defaults\n"
       "dim = 8\n"
       "layers=1\n"
       "epochs=1\n"
       "batch=20\n"
       "lr=0.05\n");
  const std::string log = scratch_dir() + "/conf.log";

  SUBCASE("file values apply when the flag is absent") {
    RunResult r = run("train --data " + pools_dataset() + " --checkpoint " +
                      scratch_dir() + "/conf.ckpt --config " + conf +
                      " --log " + log);
    REQUIRE(r.code == 0);
    const auto rows = lines_of(slurp(log));
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].find(" lr 0.05") != std::string::npos);
  }

  SUBCASE("an explicit flag beats the file") {
    RunResult r = run("train --data " + pools_dataset() + " --checkpoint " +
                      scratch_dir() + "/conf.ckpt --config " + conf +
                      " --lr 0.01 --log " + log);
    REQUIRE(r.code == 0);
    CHECK(slurp(log).find(" lr 0.01") != std::string::npos);
  }

  SUBCASE("unknown keys are config errors") {
    const std::string bad = scratch_dir() + "/bad.conf";
    spit(bad, "frobnicate=1\n");
    RunResult r = run("train --data " + pools_dataset() + " --checkpoint " +
                      scratch_dir() + "/conf.ckpt --config " + bad);
    CHECK(r.code == 2);
    CHECK(r.err.find("unknown option 'frobnicate'") != std::string::npos);
  }

  SUBCASE("a missing config file is a data error") {
    RunResult r = run("train --data " + pools_dataset() + " --checkpoint " +
                      scratch_dir() + "/conf.ckpt --config " + scratch_dir() +
                      "/nope.conf");
    CHECK(r.code == 3);
  }
}

TEST_CASE("usage errors exit 2 and help exits 0") {
  CHECK(run("").code == 2);
  CHECK(run("frobnicate").code == 2);
  CHECK(run("train --checkpoint x.ckpt").code == 2);
  CHECK(run("train --data x.ds --checkpoint x.ckpt --bogus-flag").code == 2);
  CHECK(run("eval --data " + pools_dataset() +
            " --checkpoint x.ckpt --popularity")
            .code == 2);
  CHECK(run("train --data " + pools_dataset() +
            " --checkpoint " + scratch_dir() +
            "/x.ckpt --no-last-time --first-time")
            .code == 2);
  CHECK(run("predict --checkpoint " + trained_model().checkpoint +
            " --items 1,2 --times 0")
            .code == 2);
  CHECK(run("train --data " + pools_dataset() + " --checkpoint " +
            scratch_dir() + "/x.ckpt --grid-lr 0.01,0.1")
            .code == 2);
  CHECK(run("--help").code == 0);
  CHECK(run("train --help").code == 0);
}

TEST_CASE("data errors exit 3") {
  CHECK(run("train --data " + scratch_dir() +
            "/missing.ds --checkpoint " + scratch_dir() + "/x.ckpt")
            .code == 3);

  // vocabulary size mismatch between checkpoint and dataset
  const std::string small = scratch_dir() + "/small.ds";
  RunResult s = run("synth --output " + small +
                    " --pools 2 --pool-size 6 --sessions 12 --items-lo 2"
                    " --items-hi 2 --seed 3 --test-frac 0.25");
  REQUIRE(s.code == 0);
  RunResult ev =
      run("eval --data " + small + " --checkpoint " +
          trained_model().checkpoint);
  CHECK(ev.code == 3);
  CHECK(ev.err.find("16") != std::string::npos);

  // --session-file must hold exactly one session
  const std::string two = scratch_dir() + "/two.csv";
  spit(two,
       "session_id,item_id,timestamp\n"
       "s1,0,100\ns1,1,110\ns2,0,200\ns2,1,210\n");
  RunResult p = run("predict --checkpoint " + trained_model().checkpoint +
                    " --session-file " + two);
  CHECK(p.code == 3);
}

TEST_CASE("numeric blowups exit 4") {
  RunResult r = run("train --data " + pools_dataset() + " --checkpoint " +
                    scratch_dir() + "/blown.ckpt --dim 8 --layers 1"
                    " --epochs 1 --batch 20 --lr 1e300 --log " +
                    scratch_dir() + "/blown.log");
  CHECK(r.code == 4);
  CHECK(r.err.find("diverged") != std::string::npos);
}

TEST_CASE("identical seeds reproduce the training log byte for byte") {
  const std::string base = " --data " + pools_dataset() +
                           " --dim 8 --layers 1 --epochs 1 --batch 20"
                           " --validate";
  auto log_for = [&](const char* tag, int seed) {
    const std::string log = scratch_dir() + "/det_" + tag + ".log";
    RunResult r = run("train" + base + " --seed " + std::to_string(seed) +
                      " --checkpoint " + scratch_dir() + "/det_" + tag +
                      ".ckpt --log " + log);
    REQUIRE(r.code == 0);
    return slurp(log);
  };
  const std::string a = log_for("a", 11);
  const std::string b = log_for("b", 11);
  const std::string c = log_for("c", 12);
  CHECK(a == b);
  CHECK(a != c);
}

TEST_CASE("ablate compares every architecture switch") {
  const std::string table = scratch_dir() + "/ablate.txt";
  RunResult r = run("ablate --data " + pools_dataset() +
                    " --dim 8 --layers 1 --epochs 1 --batch 20 --seed 9"
                    " --output " + table);
  REQUIRE(r.code == 0);
  const auto rows = lines_of(slurp(table));
  REQUIRE(rows.size() == 8);
  CHECK(rows[0] == "variant hit10 ndcg10 hit20 ndcg20");
  const char* names[] = {"full",  "-V2V",      "-U2V", "-Last",
                         "First", "-Interest", "-Loss"};
  for (int i = 0; i < 7; ++i)
    CHECK(rows[static_cast<size_t>(i + 1)].rfind(std::string(names[i]) + " ",
                                                 0) == 0);
}

TEST_CASE("grid sweep ranks combinations and retrains the winner") {
  RunResult r = run("train --data " + pools_dataset() + " --checkpoint " +
                    scratch_dir() + "/grid.ckpt --dim 8 --layers 1"
                    " --epochs 1 --batch 20 --validate --grid-lr 0.01,0.1"
                    " --log " + scratch_dir() + "/grid.log");
  REQUIRE(r.code == 0);
  const auto rows = lines_of(r.out);
  int combos = 0;
  bool winner = false;
  for (const auto& row : rows) {
    if (row.rfind("grid lr=", 0) == 0) ++combos;
    if (row.rfind("grid winner:", 0) == 0) winner = true;
  }
  CHECK(combos == 2);
  CHECK(winner);
  CHECK(std::filesystem::file_size(scratch_dir() + "/grid.ckpt") > 0);
}

TEST_CASE("preprocess turns a raw log into a dataset") {
  const std::string raw = scratch_dir() + "/raw.csv";
  spit(raw,
       "session_id,item_id,timestamp\n"
       "s1,a,100\ns1,b,110\ns1,a,120\n"
       "s2,b,200\ns2,a,210\ns2,c,220\n"
       "s3,a,300\ns3,c,310\ns3,b,320\n"
       "s4,c,400\ns4,b,410\ns4,a,420\n");
  const std::string ds = scratch_dir() + "/raw.ds";
  RunResult r = run("preprocess --input " + raw + " --output " + ds +
                    " --min-freq 2 --test-frac 0.25");
  REQUIRE(r.code == 0);
  CHECK(r.out.find("6 train / 2 test examples over 3 items") !=
        std::string::npos);
  CHECK(run("eval --data " + ds + " --popularity").code == 0);
}

}  // TEST_SUITE

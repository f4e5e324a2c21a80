#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output; // stdout and stderr combined
};

const fs::path& scratch_root() {
  static const fs::path root = [] {
    const fs::path dir = fs::temp_directory_path() / "entrofuse_cli";
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
  }();
  return root;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

RunResult run_cli(const std::string& args) {
  static int call = 0;
  const fs::path log = scratch_root() / ("log_" + std::to_string(call++));
  const std::string cmd =
      std::string(ENTROFUSE_CLI_PATH) + " " + args + " > " + log.string() +
      " 2>&1";
  const int status = std::system(cmd.c_str());
  RunResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.output = slurp(log);
  return result;
}

// One small dataset shared by the read-only tests.
const fs::path& shared_dataset() {
  static const fs::path dir = [] {
    const fs::path d = scratch_root() / "dataset";
    const RunResult r = run_cli("synth --out " + d.string() +
                                " --train 10 --test 3 --height 16 --width 16 "
                                "--folds 5 --seed 7");
    REQUIRE(r.exit_code == 0);
    return d;
  }();
  return dir;
}

std::string shared_manifest() {
  return (shared_dataset() / "manifest.json").string();
}

std::size_t line_count(const std::string& text) {
  std::size_t n = 0;
  for (char c : text) n += c == '\n';
  return n;
}

} // namespace

TEST_CASE("synthesize, optimize, fuse and evaluate round trip") {
  const fs::path work = scratch_root() / "roundtrip";
  fs::create_directories(work);
  const std::string doc = (work / "thresholds.json").string();
  const std::string trace = (work / "trace.csv").string();

  RunResult r = run_cli("optimize --manifest " + shared_manifest() +
                        " --pop 8 --iters 40 --seed 3 --threads 2 --out " +
                        doc + " --trace " + trace);
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("achieved dice:") != std::string::npos);
  CHECK(r.output.find("theta[strong]") != std::string::npos);
  CHECK(fs::exists(doc));
  REQUIRE(fs::exists(trace));
  const std::string trace_text = slurp(trace);
  CHECK(trace_text.rfind("iteration,best,mean,out_of_bounds", 0) == 0);
  CHECK(line_count(trace_text) == 42); // header + initial point + 40 steps

  const std::string fused = (work / "fused").string();
  r = run_cli("fuse --manifest " + shared_manifest() + " --thresholds " + doc +
              " --split test --out " + fused);
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("wrote 3 fused masks") != std::string::npos);
  CHECK(fs::exists(fs::path(fused) / "test_000.pgm"));
  CHECK(fs::exists(fs::path(fused) / "test_002.pgm"));

  r = run_cli("evaluate --manifest " + shared_manifest() + " --thresholds " +
              doc + " --split test");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("model:strong") != std::string::npos);
  CHECK(r.output.find("ensemble:mean") != std::string::npos);
  CHECK(r.output.find("ensemble:gated") != std::string::npos);

  r = run_cli("evaluate --manifest " + shared_manifest() + " --pred " + fused +
              " --split test");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("class_0") != std::string::npos);
  CHECK(r.output.find("average") != std::string::npos);
}

TEST_CASE("the same seed reproduces the same bytes") {
  const fs::path work = scratch_root() / "repro";
  fs::create_directories(work);
  const std::string base = "optimize --manifest " + shared_manifest() +
                           " --pop 6 --iters 25 --seed 11";

  const std::string doc1 = (work / "a.json").string();
  const std::string doc2 = (work / "b.json").string();
  const std::string tr1 = (work / "a.csv").string();
  const std::string tr2 = (work / "b.csv").string();
  CHECK(run_cli(base + " --out " + doc1 + " --trace " + tr1).exit_code == 0);
  CHECK(run_cli(base + " --out " + doc2 + " --trace " + tr2).exit_code == 0);

  CHECK(slurp(doc1) == slurp(doc2));
  CHECK(slurp(tr1) == slurp(tr2));
  CHECK(!slurp(doc1).empty());
}

TEST_CASE("optimizer defaults are echoed before the run") {
  const fs::path work = scratch_root() / "defaults";
  const RunResult synth = run_cli("synth --out " + work.string() +
                                  " --train 5 --height 8 --width 8 "
                                  "--folds 5 --seed 2");
  REQUIRE(synth.exit_code == 0);

  const RunResult r =
      run_cli("optimize --manifest " + (work / "manifest.json").string() +
              " --seed 4 --out " + (work / "th.json").string());
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("pop=10 iters=500") != std::string::npos);
  CHECK(r.output.find("pc-mode=ramped") != std::string::npos);
  CHECK(r.output.find("inertia-literal=off") != std::string::npos);
  CHECK(r.output.find("seed=4") != std::string::npos);
}

TEST_CASE("failures exit with distinct codes") {
  SUBCASE("unknown flag") {
    CHECK(run_cli("optimize --no-such-flag").exit_code == 1);
  }
  SUBCASE("missing input file") {
    const RunResult r =
        run_cli("stack --manifest /nonexistent/manifest.json");
    CHECK(r.exit_code == 2);
  }
  SUBCASE("evaluate without a source of predictions") {
    const RunResult r =
        run_cli("evaluate --manifest " + shared_manifest() + " --split test");
    CHECK(r.exit_code == 1);
  }
}

TEST_CASE("ground truth masks score a perfect average against themselves") {
  const RunResult r = run_cli("evaluate --manifest " + shared_manifest() +
                              " --pred " + (shared_dataset() / "masks").string() +
                              " --split test");
  CHECK(r.exit_code == 0);
  std::istringstream lines(r.output);
  std::string line;
  bool found = false;
  while (std::getline(lines, line)) {
    if (line.rfind("average", 0) == 0) {
      found = true;
      CHECK(line.find("1.0000") != std::string::npos);
    }
  }
  CHECK(found);
}

TEST_CASE("generated seeds are disclosed for reproduction") {
  const fs::path work = scratch_root() / "noseed";
  const RunResult r = run_cli("synth --out " + work.string() +
                              " --train 3 --height 8 --width 8 --folds 3");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("seed:") != std::string::npos);
  CHECK(r.output.find("generated") != std::string::npos);
}

TEST_CASE("stack reports the assembled matrix") {
  const RunResult r = run_cli("stack --manifest " + shared_manifest());
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("prediction matrix: 10 images, 3 models, 2 classes, "
                      "2560 pixels") != std::string::npos);
}

TEST_CASE("grid sweep writes a consumable document") {
  const fs::path work = scratch_root() / "oracle";
  fs::create_directories(work);
  const std::string out = (work / "oracle.json").string();
  const RunResult r = run_cli("oracle --manifest " + shared_manifest() +
                              " --delta 0.3465 --threads 2 --out " + out);
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("grid evaluations: 27") != std::string::npos);
  CHECK(r.output.find("best dice:") != std::string::npos);
  REQUIRE(fs::exists(out));

  // The written document drives fuse like any optimizer output.
  const std::string fused = (work / "fused").string();
  const RunResult f = run_cli("fuse --manifest " + shared_manifest() +
                              " --thresholds " + out + " --split test --out " +
                              fused);
  CHECK(f.exit_code == 0);
  CHECK(fs::exists(fs::path(fused) / "test_000.pgm"));
}

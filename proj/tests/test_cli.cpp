#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <json.hpp>

#include "seamline/corpus_io.hpp"
#include "support.hpp"

using nlohmann::json;
using seamline::read_text_file;
using seamline::testing::TempDir;

namespace {

struct Outcome {
  int code = -1;
  std::string output;
};

Outcome run(const TempDir& dir, const std::string& args) {
  const auto log = dir / "cli-output.txt";
  const std::string cmd = std::string(SEAMLINE_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  Outcome o;
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  o.output = read_text_file(log);
  return o;
}

const std::string kSources = std::string(SEAMLINE_DATA_DIR) + "/sample_sources.jsonl";

// Runs the command twice and returns the two contents of `file`.
std::pair<std::string, std::string> twice(const TempDir& dir, const std::string& args,
                                          const std::filesystem::path& file) {
  const auto first = run(dir, args);
  REQUIRE_MESSAGE(first.code == 0, first.output);
  const auto a = read_text_file(file);
  const auto second = run(dir, args);
  REQUIRE_MESSAGE(second.code == 0, second.output);
  return {a, read_text_file(file)};
}

}  // namespace

TEST_CASE("pipeline subcommands are deterministic") {
  TempDir dir;
  const auto corpus = dir / "corpus.jsonl";
  const auto synth = "synth --source " + kSources + " --out " + corpus.string() + " --seed 3";

  auto [c1, c2] = twice(dir, synth, corpus);
  CHECK(c1 == c2);
  CHECK(read_text_file(dir / "corpus.log.jsonl").size() > 0);
  CHECK(std::filesystem::exists(dir / "corpus.config.toml"));
  const auto docs = seamline::load_corpus(corpus);
  CHECK(docs.size() == 48);

  SUBCASE("thread count does not change the corpus") {
    const auto single = dir / "single.jsonl";
    REQUIRE(run(dir, "synth --source " + kSources + " --out " + single.string() + " --seed 3 --jobs 1").code == 0);
    CHECK(read_text_file(single) == c1);
  }
  SUBCASE("persisted config replays the run") {
    const auto replay = dir / "replay.jsonl";
    const auto r = run(dir, "--config " + (dir / "corpus.config.toml").string() + " synth --out " + replay.string());
    REQUIRE_MESSAGE(r.code == 0, r.output);
    CHECK(read_text_file(replay) == c1);
  }
  SUBCASE("stats") {
    const auto r = run(dir, "stats --corpus " + corpus.string() + " --format json");
    REQUIRE(r.code == 0);
    CHECK(json::parse(r.output)["all"]["doc_count"] == 48);
  }
  SUBCASE("split, embed, train, detect") {
    const auto split = dir / "split.json";
    auto [s1, s2] = twice(dir, "split --corpus " + corpus.string() + " --mode id --seed 1 --out " + split.string(), split);
    CHECK(s1 == s2);

    const auto emb = dir / "emb.jsonl";
    auto [e1, e2] = twice(dir, "embed --corpus " + corpus.string() + " --out " + emb.string(), emb);
    CHECK(e1 == e2);

    const auto head = dir / "head.json";
    auto [h1, h2] = twice(dir,
                          "train --corpus " + corpus.string() + " --split " + split.string() +
                              " --max-epochs 2 --epoch-size 500 --seed 4 --out " + head.string(),
                          head);
    CHECK(h1 == h2);
    CHECK(std::filesystem::exists(dir / "head.history.json"));

    const auto det = dir / "det.jsonl";
    auto [d1, d2] = twice(dir,
                          "detect --corpus " + corpus.string() + " --head " + head.string() +
                              " --p 2 --format jsonl --out " + det.string(),
                          det);
    CHECK(d1 == d2);
    const auto first = json::parse(d1.substr(0, d1.find('\n')));
    CHECK(first["method_id"] == "tribert(p=2,K=3)");
  }
  SUBCASE("eval and report") {
    const auto prefix = dir / "ev";
    const std::string eval = "eval --corpus " + corpus.string() +
                             " --methods random,tribert-nt --runs 2 --seed 5 --format html --out " + prefix.string();
    auto [j1, j2] = twice(dir, eval, dir / "ev.json");
    CHECK(j1 == j2);
    CHECK(read_text_file(dir / "ev.txt").find("#Bry=1") != std::string::npos);
    CHECK(read_text_file(dir / "ev.html").find("class=\"boundary\"") != std::string::npos);

    const auto report = json::parse(j1);
    CHECK(report["schema"] == "seamline-report/1");
    double random = -1, nt = -1;
    for (const auto& m : report["methods"]) {
      if (m["method_id"] == "random(K=3)") random = m["overall"];
      if (m["method_id"] == "tribert-nt(p=1,K=3)") nt = m["overall"];
    }
    CHECK(nt >= random);

    const auto r = run(dir, "report --in " + (dir / "ev.json").string() + " --format text");
    REQUIRE(r.code == 0);
    CHECK(r.output == read_text_file(dir / "ev.txt"));
  }
  SUBCASE("prototype sweep reports one row per p") {
    const auto prefix = dir / "sweep";
    const auto r = run(dir, "eval --corpus " + corpus.string() + " --methods tribert-nt --sweep-p --runs 1 --out " +
                                prefix.string());
    REQUIRE_MESSAGE(r.code == 0, r.output);
    const auto report = json::parse(read_text_file(dir / "sweep.json"));
    CHECK(report["methods"].size() == 6);
  }
  SUBCASE("a single prompt cannot be split out of domain") {
    const auto one = dir / "one.jsonl";
    std::vector<seamline::HybridDocument> same_prompt;
    for (const auto& d : docs)
      if (d.prompt_id == docs.front().prompt_id) same_prompt.push_back(d);
    seamline::save_corpus(same_prompt, one);
    const auto r = run(dir, "eval --corpus " + one.string() + " --mode ood --methods random --out " + (dir / "ood").string());
    CHECK(r.code == 3);
    CHECK(r.output.find("SinglePrompt") != std::string::npos);
  }
}

TEST_CASE("usage errors") {
  TempDir dir;
  CHECK(run(dir, "").code == 2);
  CHECK(run(dir, "frobnicate").code == 2);
  CHECK(run(dir, "stats --corpus /nonexistent/corpus.jsonl").code == 2);
  CHECK(run(dir, "synth --source " + kSources + " --out " + (dir / "x.jsonl").string() + " --tasks 7").code == 2);
  CHECK(run(dir, "synth --source " + kSources + " --out " + (dir / "x.jsonl").string() + " --generator nope").code == 2);
  CHECK(run(dir, "--help").code == 0);
}

TEST_CASE("data errors") {
  TempDir dir;
  seamline::write_text_file(dir / "broken.jsonl", "{not json\n");
  const auto r = run(dir, "stats --corpus " + (dir / "broken.jsonl").string());
  CHECK(r.code == 3);
  CHECK(r.output.find("line 1") != std::string::npos);
}

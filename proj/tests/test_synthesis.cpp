#include <doctest.h>

#include <json.hpp>
#include <map>
#include <set>

#include "seamline/error.hpp"
#include "seamline/generators.hpp"
#include "seamline/segment.hpp"
#include "seamline/synthesis.hpp"
#include "support.hpp"

using namespace seamline;

namespace {

constexpr auto H = AuthorLabel::Human;
constexpr auto G = AuthorLabel::Generated;

// Chi-square critical values at significance 0.01, by degrees of freedom.
double chi2_critical_001(std::size_t df) {
  static const std::map<std::size_t, double> table = {{1, 6.635},  {2, 9.210},  {3, 11.345}, {4, 13.277},
                                                      {5, 15.086}, {6, 16.812}, {7, 18.475}, {8, 20.090},
                                                      {9, 21.666}, {10, 23.209}, {11, 24.725}};
  return table.at(df);
}

double chi_square_uniform(const std::map<std::size_t, std::size_t>& counts, std::size_t lo, std::size_t hi,
                          std::size_t draws) {
  const double expected = static_cast<double>(draws) / static_cast<double>(hi - lo + 1);
  double chi2 = 0.0;
  for (std::size_t v = lo; v <= hi; ++v) {
    const double observed = counts.count(v) ? static_cast<double>(counts.at(v)) : 0.0;
    chi2 += (observed - expected) * (observed - expected) / expected;
  }
  return chi2;
}

RawEssay essay(std::size_t sentences, const std::string& id = "src") {
  std::string text;
  for (std::size_t i = 1; i <= sentences; ++i) {
    text += "Human sentence number " + std::to_string(i) + " talks about the garden in early spring. ";
  }
  return {id, 1, text, "Write about your garden."};
}

// Produces the exact template-conforming text for a request.
std::string conforming_text(const GenerationRequest& request, int& counter) {
  std::string out;
  for (const auto& slot : request.slots) {
    const auto n = std::max<std::size_t>(slot.fixed ? slot.sentences.size() : slot.target_sentences, 1);
    for (std::size_t i = 0; i < n; ++i) {
      out += slot.fixed ? slot.sentences[i] : "Filler line " + std::to_string(++counter) + " was generated.";
      out += " ";
    }
  }
  return out;
}

class ScriptedGenerator final : public SentenceGenerator {
 public:
  explicit ScriptedGenerator(std::size_t conform_from_call) : conform_from_(conform_from_call) {}
  std::string generate(const GenerationRequest& request) override {
    ++calls;
    if (calls < conform_from_) return "Nothing useful here.";
    return conforming_text(request, counter_);
  }
  std::string id() const override { return "scripted"; }
  std::size_t calls = 0;

 private:
  std::size_t conform_from_;
  int counter_ = 0;
};

}  // namespace

TEST_CASE("fill task table") {
  const std::size_t bry[] = {1, 1, 2, 2, 3, 3};
  for (int t = 1; t <= 6; ++t) {
    const auto spec = fill_task(t);
    CHECK(spec.expected_boundaries == bry[t - 1]);
    CHECK(spec.structure.size() == bry[t - 1] + 1);
    CHECK(spec.structure.front() == (t % 2 == 1 ? H : G));
  }
  CHECK_THROWS_AS(fill_task(7), Error);
  CHECK_THROWS_AS(fill_task(0), Error);
}

TEST_CASE("plan_removal examples") {
  SUBCASE("two sentences leave a single choice") {
    for (int t : {1, 2}) {
      Rng rng(1);
      for (int i = 0; i < 20; ++i) CHECK(plan_removal(2, fill_task(t), rng).removed_count == 1);
    }
  }
  SUBCASE("task 1 removes a suffix") {
    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
      const auto plan = plan_removal(5, fill_task(1), rng);
      REQUIRE(plan.kept_spans.size() == 1);
      CHECK(plan.kept_spans[0] == SentenceSpan{1, 5 - plan.removed_count});
    }
  }
  SUBCASE("task 2 removes a prefix") {
    Rng rng(4);
    for (int i = 0; i < 200; ++i) {
      const auto plan = plan_removal(7, fill_task(2), rng);
      CHECK(plan.kept_spans[0] == SentenceSpan{plan.removed_count + 1, 7});
    }
  }
  SUBCASE("too short sources") {
    Rng rng(0);
    for (int t = 1; t <= 6; ++t) {
      try {
        plan_removal(min_source_sentences(t) - 1, fill_task(t), rng);
        FAIL("expected SourceTooShort");
      } catch (const Error& e) {
        CHECK(e.code() == Errc::SourceTooShort);
      }
      CHECK_NOTHROW(plan_removal(min_source_sentences(t), fill_task(t), rng));
    }
  }
}

TEST_CASE("task 5 plan replays from the same seed") {
  // Replay oracle: redo the documented draw order with a fresh stream.
  Rng rng(7);
  const auto plan = plan_removal(12, fill_task(5), rng);
  Rng replay(7);
  const auto r1 = static_cast<std::size_t>(replay.between(1, 12 - 3));
  const auto s = static_cast<std::size_t>(replay.between(2, static_cast<std::int64_t>(12 - r1 - 1)));
  const std::size_t h2_size = 12 - (s + r1) + 1;
  const auto r2 = static_cast<std::size_t>(replay.between(1, static_cast<std::int64_t>(h2_size - 1)));

  REQUIRE(plan.removal_events.size() == 2);
  CHECK(plan.removal_events[0] == r1);
  CHECK(plan.removal_events[1] == r2);
  CHECK(r1 >= 1);
  CHECK(r1 <= 11);
  CHECK(r2 >= 1);
  CHECK(r2 <= h2_size - 1);
  CHECK(plan.first_stage_spans[0] == SentenceSpan{1, s - 1});
  CHECK(plan.kept_spans[1] == SentenceSpan{s + r1, 12 - r2});
}

TEST_CASE("plan invariants across tasks and lengths") {
  Rng rng(11);
  for (int t = 1; t <= 6; ++t) {
    for (std::size_t k = min_source_sentences(t); k <= 20; ++k) {
      for (int rep = 0; rep < 50; ++rep) {
        const auto plan = plan_removal(k, fill_task(t), rng);
        const auto spec = fill_task(t);
        REQUIRE(plan.removed_count >= 1);
        REQUIRE(plan.removed_count <= k - 1);
        // Kept spans are ordered, disjoint, inside [1, k] and non-empty.
        std::size_t kept = 0, last_end = 0;
        for (const auto& span : plan.kept_spans) {
          REQUIRE(span.start >= 1);
          REQUIRE(span.end <= k);
          REQUIRE(span.start <= span.end);
          REQUIRE(span.start > last_end);
          last_end = span.end;
          kept += span.size();
        }
        REQUIRE(kept + plan.removed_count == k);
        std::size_t humans = 0, generated = 0;
        for (auto l : spec.structure) (l == H ? humans : generated) += 1;
        REQUIRE(plan.kept_spans.size() == humans);
        REQUIRE(plan.fill_sizes.size() == generated);
        for (auto f : plan.fill_sizes) REQUIRE(f >= 1);
      }
    }
  }
}

TEST_CASE("removed count is uniform over its range") {
  struct Case {
    int task;
    std::size_t k, lo, hi;
  };
  // Tasks 1/2 use [1, k-1]; the interior block of task 3 leaves one
  // sentence on each side, so [1, k-2]; task 4 removes at least two.
  for (const auto& c : {Case{1, 10, 1, 9}, Case{2, 8, 1, 7}, Case{3, 9, 1, 7}, Case{4, 9, 2, 8}}) {
    CAPTURE(c.task);
    Rng rng(100 + static_cast<std::uint64_t>(c.task));
    std::map<std::size_t, std::size_t> counts;
    const std::size_t draws = 10000;
    for (std::size_t i = 0; i < draws; ++i) ++counts[plan_removal(c.k, fill_task(c.task), rng).removed_count];
    for (const auto& [v, n] : counts) {
      REQUIRE(v >= c.lo);
      REQUIRE(v <= c.hi);
    }
    CHECK(chi_square_uniform(counts, c.lo, c.hi, draws) < chi2_critical_001(c.hi - c.lo));
  }
}

TEST_CASE("prompt directives") {
  const std::string instr = "Write a letter about computers.";
  SUBCASE("task 1") {
    const auto p = build_prompt(fill_task(1), instr, {Slot::keep(H, {"A B."}), Slot::fill(2)});
    CHECK(p.directive == "Please begin with \"A B.\"");
    CHECK(p.text() == instr + "\n\n" + p.directive);
    CHECK(p.text().ends_with("Please begin with \"A B.\""));
  }
  SUBCASE("task 2") {
    const auto p = build_prompt(fill_task(2), instr, {Slot::fill(1), Slot::keep(H, {"End one.", "End two."})});
    CHECK(p.directive == "Please ensure to use \"End one. End two.\" as the ending.");
  }
  SUBCASE("task 3 has beginning and ending clauses") {
    const auto p = build_prompt(fill_task(3), instr, {Slot::keep(H, {"Start."}), Slot::fill(1), Slot::keep(H, {"Stop."})});
    CHECK(p.directive.find("Please begin with \"Start.\"") != std::string::npos);
    CHECK(p.directive.find("\"Stop.\" as the ending") != std::string::npos);
  }
  SUBCASE("task 4 has the in-between clause") {
    const auto p = build_prompt(fill_task(4), instr, {Slot::fill(1), Slot::keep(H, {"Middle."}), Slot::fill(1)});
    CHECK(p.directive == "Please ensure to include \"Middle.\" in between the starting text and the ending text.");
  }
  SUBCASE("task 5 second stage begins with the whole intermediate essay") {
    const auto p = build_prompt(fill_task(5), instr,
                                {Slot::keep(H, {"One."}), Slot::keep(G, {"Two."}), Slot::keep(H, {"Three."}), Slot::fill(1)});
    CHECK(p.directive == "Please begin with \"One. Two. Three.\"");
  }
  SUBCASE("task 6 second stage uses it as the ending") {
    const auto p = build_prompt(fill_task(6), instr,
                                {Slot::fill(1), Slot::keep(H, {"One."}), Slot::keep(G, {"Two."}), Slot::keep(H, {"Three."})});
    CHECK(p.directive == "Please use \"One. Two. Three.\" as the ending.");
  }
}

TEST_CASE("validation outcomes") {
  const std::vector<Slot> slots = {Slot::keep(H, {"Kept one.", "Kept two."}), Slot::fill(1), Slot::keep(H, {"Last kept."})};

  SUBCASE("conforming candidate") {
    const auto r = validate_generation("Kept one.  Kept two.\nNew words here. More new words. Last kept.", slots);
    REQUIRE(r.valid());
    REQUIRE(r.sentences.size() == 5);
    CHECK(r.sentences[2] == std::pair<std::string, AuthorLabel>{"New words here.", G});
    CHECK(r.sentences[4].second == H);
  }
  SUBCASE("duplicate sentence") {
    CHECK(validate_generation("Kept one. Kept two. New. New. Last kept.", slots).reason ==
          ValidationReason::DuplicateSentence);
    CHECK(validate_generation("Kept one. Kept two. KEPT ONE. Last kept.", slots).reason ==
          ValidationReason::DuplicateSentence);
  }
  SUBCASE("missing ending") {
    CHECK(validate_generation("Kept one. Kept two. New words here.", slots).reason ==
          ValidationReason::StructureMismatch);
  }
  SUBCASE("altered kept text") {
    CHECK(validate_generation("Kept 1. Kept two. New. Last kept.", slots).reason == ValidationReason::StructureMismatch);
  }
  SUBCASE("empty fill") {
    CHECK(validate_generation("Kept one. Kept two. Last kept.", slots).reason == ValidationReason::EmptySegment);
  }
  SUBCASE("empty candidate") {
    CHECK(validate_generation("   ", slots).reason == ValidationReason::EmptyCandidate);
  }
  CHECK(reason_code(ValidationReason::DuplicateSentence) == "DuplicateSentence");
}

TEST_CASE("synthesis retries and skips") {
  const auto source = essay(10);
  SUBCASE("conforming mock succeeds on the first attempt") {
    MockGenerator gen(1);
    Rng rng(1);
    const auto out = synthesize_hybrid(source, fill_task(3), gen, rng);
    REQUIRE_FALSE(out.skipped());
    CHECK(out.attempts_used == 1);
    CHECK(ground_truth_boundaries(*out.document).size() == 2);
    CHECK(out.document->doc_id == "src-t3");
    CHECK(out.document->task_id == 3);
  }
  SUBCASE("duplicating generator is skipped after five attempts") {
    for (int t = 1; t <= 6; ++t) {
      MockGenerator gen(1, MockMode::DuplicateSentence);
      Rng rng(2);
      const auto out = synthesize_hybrid(source, fill_task(t), gen, rng);
      CHECK(out.skipped());
      CHECK(out.attempts_used == 5);
      REQUIRE(out.failures.size() == 5);
      for (auto f : out.failures) CHECK(f == ValidationReason::DuplicateSentence);
    }
  }
  SUBCASE("drop-ending generator never validates") {
    for (int t = 1; t <= 6; ++t) {
      MockGenerator gen(1, MockMode::DropEnding);
      Rng rng(3);
      CHECK(synthesize_hybrid(source, fill_task(t), gen, rng).skipped());
    }
  }
  SUBCASE("generator conforming from the third call") {
    ScriptedGenerator gen(3);
    Rng rng(4);
    const auto out = synthesize_hybrid(source, fill_task(1), gen, rng);
    REQUIRE_FALSE(out.skipped());
    CHECK(out.attempts_used == 3);
    CHECK(out.failures.size() == 2);
  }
  SUBCASE("custom attempt budget") {
    ScriptedGenerator gen(100);
    Rng rng(5);
    CHECK(synthesize_hybrid(source, fill_task(2), gen, rng, 2).attempts_used == 2);
  }
}

TEST_CASE("bulk mock synthesis keeps structure and source order") {
  MockGenerator gen(42);
  std::size_t accepted = 0;
  for (int i = 0; i < 1000; ++i) {
    const int task = i % 6 + 1;
    const auto source = essay(4 + static_cast<std::size_t>(i % 14), "s" + std::to_string(i));
    Rng rng(derive_seed(9, std::to_string(i)));
    const auto out = synthesize_hybrid(source, fill_task(task), gen, rng);
    REQUIRE_FALSE(out.skipped());
    ++accepted;
    const auto& doc = *out.document;
    // Segment labels follow the template exactly.
    std::vector<AuthorLabel> segments;
    for (const auto& s : doc.sentences) {
      if (segments.empty() || segments.back() != *s.label) segments.push_back(*s.label);
    }
    REQUIRE(segments == fill_task(task).structure);
    REQUIRE(ground_truth_boundaries(doc).size() == fill_task(task).expected_boundaries);
    // Human sentences are a subsequence of the source, in order.
    const auto original = split_sentences(source.text);
    std::size_t cursor = 0;
    for (const auto& s : doc.sentences) {
      if (*s.label != H) continue;
      while (cursor < original.size() && original[cursor] != s.text) ++cursor;
      REQUIRE(cursor < original.size());
      ++cursor;
    }
  }
  CHECK(accepted == 1000);
}

TEST_CASE("mock generator is a pure function of seed and request") {
  GenerationRequest req;
  req.instructions = "Write.";
  req.directive = "Please begin with \"A.\"";
  req.slots = {Slot::keep(H, {"A."}), Slot::fill(3)};
  MockGenerator a(5), b(5), c(6);
  CHECK(a.generate(req) == b.generate(req));
  CHECK(a.generate(req) == a.generate(req));
  CHECK(a.generate(req) != c.generate(req));
  MockGenerator dup(5, MockMode::DuplicateSentence);
  CHECK(validate_generation(dup.generate(req), req.slots).reason == ValidationReason::DuplicateSentence);
}

TEST_CASE("corpus synthesis assigns tasks round-robin and logs skips") {
  std::vector<RawEssay> sources;
  for (int i = 0; i < 12; ++i) sources.push_back(essay(12, "e" + std::to_string(i)));
  sources.push_back({"tiny", 1, "Too short to use.", ""});
  MockGenerator gen(3);
  const auto result = synthesize_corpus(sources, {1, 2, 3, 4, 5, 6}, gen, 8);
  CHECK(result.filtered_out == 1);
  REQUIRE(result.documents.size() == 12);
  for (std::size_t i = 0; i < 12; ++i) CHECK(result.documents[i].task_id == static_cast<int>(i % 6) + 1);

  const auto again = synthesize_corpus(sources, {1, 2, 3, 4, 5, 6}, gen, 8);
  CHECK(again.documents == result.documents);

  MockGenerator bad(3, MockMode::DuplicateSentence);
  const auto skipped = synthesize_corpus(sources, {5}, bad, 8);
  CHECK(skipped.documents.empty());
  REQUIRE(skipped.log.size() == 12);
  CHECK(skipped.log[0].attempts == 5);
  CHECK(skipped.log[0].reasons == std::vector<std::string>(5, "DuplicateSentence"));

  std::vector<RawEssay> short_sources = {essay(3, "three")};
  short_sources[0].text += std::string(400, ' ') + "and more words to pass the length filter easily here";
  for (int i = 0; i < 100; ++i) short_sources[0].text += " word";
  const auto too_short = synthesize_corpus(short_sources, {5}, gen, 1);
  REQUIRE(too_short.log.size() == 1);
  CHECK_FALSE(too_short.log[0].accepted);
  CHECK(too_short.log[0].reasons == std::vector<std::string>{"source_too_short"});
}

TEST_CASE("process generator protocol") {
  GenerationRequest req;
  req.instructions = "Write.";
  req.directive = "Please begin with \"A.\"";
  SUBCASE("reads the request on stdin and returns text") {
    ProcessGenerator gen(R"(python3 -c 'import json,sys; r=json.load(sys.stdin); print(json.dumps({"text": r["directive"] + " ok"}))')");
    CHECK(gen.generate(req) == req.directive + " ok");
  }
  SUBCASE("failing command") {
    ProcessGenerator gen("exit 3");
    CHECK_THROWS_AS(gen.generate(req), Error);
  }
  SUBCASE("malformed output") {
    ProcessGenerator gen("echo not-json");
    try {
      gen.generate(req);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::GeneratorUnavailable);
    }
  }
}

TEST_CASE("http generator protocol") {
  seamline::testing::TestServer server;
  std::string seen;
  server.server().Post("/generate", [&](const httplib::Request& req, httplib::Response& res) {
    seen = req.body;
    res.set_content(R"({"text": "Generated reply."})", "application/json");
  });
  server.start();
  GenerationRequest req;
  req.instructions = "Write.";
  req.directive = "Go.";
  req.max_tokens = 77;
  auto gen = make_generator(server.url(), 0);
  CHECK(gen->generate(req) == "Generated reply.");
  const auto body = nlohmann::json::parse(seen);
  CHECK(body["directive"] == "Go.");
  CHECK(body["max_tokens"] == 77);
  server.stop();

  try {
    HttpGenerator("http://127.0.0.1:1").generate(req);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::GeneratorUnavailable);
  }
}

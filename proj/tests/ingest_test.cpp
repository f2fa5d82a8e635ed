#include "doctest.h"

#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "mcqeval/errors.hpp"
#include "mcqeval/ingest.hpp"
#include "mcqeval/question.hpp"

using namespace mcqeval;
using nlohmann::json;

namespace {

const std::string kFixtureDir = std::string(MCQEVAL_SOURCE_DIR) + "/data/fixtures";

json hellaswag_box_record() {
    return json{
        {"ind", 24},
        {"ctx", "A bearded man is seen speaking to the camera and making several faces. The man"},
        {"label", 0},
        {"endings",
         {"then holds up a razor and begins shaving his face.",
          "then switches off and shows himself via the washer and dryer rolling down a towel "
          "and scrubbing the floor.",
          "then rubs and wipes down an individual's face and leads into another man playing "
          "another person's flute.",
          "is then seen eating food on a ladder while still speaking."}},
    };
}

} // namespace

TEST_CASE("hellaswag: example record parses") {
    std::string reason;
    auto q = parse_hellaswag(hellaswag_box_record(), 0, &reason);
    REQUIRE(q);
    CHECK(q->choices.size() == 4);
    CHECK(q->correct_index == 0);
    CHECK(q->choices[0] == "then holds up a razor and begins shaving his face.");
    CHECK(q->dataset == Dataset::hellaswag);
    CHECK(q->id == "hellaswag/24");
    CHECK(check_question_invariants(*q).empty());
}

TEST_CASE("hellaswag: wrong ending count rejected") {
    auto rec = hellaswag_box_record();
    rec["endings"].erase(3);
    std::string reason;
    CHECK(!parse_hellaswag(rec, 0, &reason));
    CHECK(reason == "choice count 3 != 4 for hellaswag");
}

TEST_CASE("hellaswag: label passthrough and range") {
    auto rec = hellaswag_box_record();
    rec["label"] = 2;
    std::string reason;
    auto q = parse_hellaswag(rec, 0, &reason);
    REQUIRE(q);
    CHECK(q->correct_index == 2);

    rec["label"] = 4;
    CHECK(!parse_hellaswag(rec, 0, &reason));
    CHECK(reason.find("out of range") != std::string::npos);

    rec["label"] = "1"; // some dumps carry the index as a string
    q = parse_hellaswag(rec, 0, &reason);
    REQUIRE(q);
    CHECK(q->correct_index == 1);

    rec.erase("label");
    CHECK(!parse_hellaswag(rec, 0, &reason));
    CHECK(reason == "missing field: label");
}

TEST_CASE("mmlu: letter arithmetic and range") {
    json rec{{"question", "Pick one"},
             {"choices", {"red", "green", "blue", "teal"}},
             {"answer", "A"},
             {"subject", "colors"}};
    std::string reason;
    auto q = parse_mmlu(rec, 3, &reason);
    REQUIRE(q);
    CHECK(q->correct_index == 0);
    CHECK(q->subject == "colors");
    CHECK(q->id == "mmlu/colors/3");

    rec["answer"] = "D";
    q = parse_mmlu(rec, 3, &reason);
    REQUIRE(q);
    CHECK(q->correct_index == 3);

    rec["answer"] = "E";
    CHECK(!parse_mmlu(rec, 3, &reason));
    CHECK(reason.find("answer letter out of range") != std::string::npos);
}

TEST_CASE("medqa: example shape") {
    json rec{{"question", "Best treatment?"},
             {"options",
              {{"A", "Ampicillin"},
               {"B", "Ceftriaxone"},
               {"C", "Ciprofloxacin"},
               {"D", "Doxycycline"},
               {"E", "Nitrofurantoin"}}},
             {"answer_idx", "E"}};
    std::string reason;
    auto q = parse_medqa(rec, 0, &reason);
    REQUIRE(q);
    CHECK(q->choices.size() == 5);
    CHECK(q->choices[static_cast<std::size_t>(q->correct_index)] == "Nitrofurantoin");
}

TEST_CASE("medqa: minimal k and bad answer key") {
    json rec{{"question", "Two options"},
             {"options", {{"A", "yes"}, {"B", "no"}}},
             {"answer_idx", "B"}};
    std::string reason;
    auto q = parse_medqa(rec, 7, &reason);
    REQUIRE(q);
    CHECK(q->choices.size() == 2);
    CHECK(q->correct_index == 1);

    rec["answer_idx"] = "F";
    CHECK(!parse_medqa(rec, 7, &reason));
    CHECK(reason.find("absent from options") != std::string::npos);
}

TEST_CASE("openbookqa: example, letters, duplicates") {
    json rec{{"id", "7-980"},
             {"question",
              {{"stem", "Which of these would let the most heat travel through?"},
               {"choices",
                {{{"text", "a new pair of jeans."}, {"label", "A"}},
                 {{"text", "a steel spoon in a cafeteria."}, {"label", "B"}},
                 {{"text", "a cotton candy at a store."}, {"label", "C"}},
                 {{"text", "Doxycycline."}, {"label", "D"}}}}}},
             {"answerKey", "B"}};
    std::string reason;
    auto q = parse_openbookqa(rec, 0, &reason);
    REQUIRE(q);
    CHECK(q->choices[static_cast<std::size_t>(q->correct_index)] ==
          "a steel spoon in a cafeteria.");
    CHECK(q->id == "openbookqa/7-980");

    rec["answerKey"] = "A";
    q = parse_openbookqa(rec, 0, &reason);
    REQUIRE(q);
    CHECK(q->correct_index == 0);

    rec["question"]["choices"][2]["text"] = "a new pair of jeans.";
    CHECK(!parse_openbookqa(rec, 0, &reason));
    CHECK(reason == "choices not distinct");
}

TEST_CASE("bundled fixtures parse with zero rejects") {
    struct Case {
        const char* path;
        Dataset tag;
        std::size_t count;
    };
    const Case cases[] = {
        {"/hellaswag.jsonl", Dataset::hellaswag, 10},
        {"/medqa.jsonl", Dataset::medqa, 10},
        {"/mmlu", Dataset::mmlu, 10},
        {"/openbookqa.jsonl", Dataset::openbookqa, 10},
    };
    for (const auto& c : cases) {
        CAPTURE(c.path);
        auto result = read_dataset(kFixtureDir + c.path, c.tag);
        CHECK(result.rejected.empty());
        CHECK(result.questions.size() == c.count);
        for (const auto& q : result.questions) CHECK(check_question_invariants(q).empty());
    }
}

TEST_CASE("validate_dataset: counts and histogram") {
    auto result = read_dataset(kFixtureDir + "/medqa.jsonl", Dataset::medqa);
    auto stats = validate_dataset(result.questions, Dataset::medqa, result.rejected, result.split);
    CHECK(stats.count == 10);
    CHECK(stats.per_choice_count_histogram.at(5) == 10);
    CHECK(stats.split == "test");
    std::size_t total = 0;
    for (const auto& [k, n] : stats.per_choice_count_histogram) total += n;
    CHECK(total == stats.count);

    auto empty = validate_dataset({}, Dataset::medqa);
    CHECK(empty.count == 0);
    CHECK(empty.per_choice_count_histogram.empty());
}

TEST_CASE("parsing is deterministic and order-preserving") {
    auto a = read_dataset(kFixtureDir + "/hellaswag.jsonl", Dataset::hellaswag);
    auto b = read_dataset(kFixtureDir + "/hellaswag.jsonl", Dataset::hellaswag);
    REQUIRE(a.questions.size() == b.questions.size());
    CHECK(a.questions == b.questions);
}

TEST_CASE("canonical round-trip") {
    auto result = read_dataset(kFixtureDir + "/mmlu", Dataset::mmlu);
    std::stringstream buf;
    write_canonical(buf, result.questions);
    auto again = read_canonical(buf);
    CHECK(again == result.questions);
}

TEST_CASE("rejected locators are unique") {
    std::ostringstream bad;
    bad << R"({"ctx": "a context line", "endings": ["x","y","z"], "label": 0})" << "\n";
    bad << "not json at all\n";
    bad << R"({"ctx": "another", "endings": ["x","y","z","w"], "label": 9})" << "\n";
    const std::string path = "/tmp/mcqeval_bad_hellaswag.jsonl";
    std::ofstream(path) << bad.str();
    auto result = read_dataset(path, Dataset::hellaswag);
    CHECK(result.questions.empty());
    REQUIRE(result.rejected.size() == 3);
    std::set<std::string> locators;
    for (const auto& r : result.rejected) locators.insert(r.locator);
    CHECK(locators.size() == 3);
}

TEST_CASE("property: fuzzed records either reject or satisfy all invariants") {
    std::mt19937_64 rng(20260809);
    std::uniform_int_distribution<int> pct(0, 99);

    std::size_t accepted = 0;
    for (int iter = 0; iter < 2000; ++iter) {
        json rec;
        // mostly well-shaped records with targeted corruption
        if (pct(rng) < 90) rec["ctx"] = pct(rng) < 90 ? "A context line" : "   ";
        if (pct(rng) < 90) {
            json endings = json::array();
            const int n = pct(rng) < 70 ? 4 : pct(rng) % 6;
            for (int i = 0; i < n; ++i) {
                // occasional duplicates and blank/whitespace texts
                const int roll = pct(rng);
                if (roll < 10) endings.push_back("");
                else if (roll < 20) endings.push_back("  ");
                else if (roll < 35) endings.push_back("ending 0");
                else endings.push_back("ending " + std::to_string(i));
            }
            rec["endings"] = endings;
        }
        if (pct(rng) < 90) rec["label"] = pct(rng) < 80 ? pct(rng) % 4 : pct(rng) % 9 - 2;
        std::string reason;
        auto q = parse_hellaswag(rec, static_cast<std::size_t>(iter), &reason);
        if (q) {
            ++accepted;
            CHECK(check_question_invariants(*q).empty());
        } else {
            CHECK(!reason.empty());
        }
    }
    // the generator produces both valid and corrupt records in bulk
    CHECK(accepted > 100);
    CHECK(accepted < 2000);
}

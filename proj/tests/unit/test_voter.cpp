#include <doctest.h>

#include "testsift/voter.hpp"

using namespace testsift;
using enum Answer;

namespace {

AnswerVector vector_from_bits(unsigned bits) {
    AnswerVector v;
    for (std::size_t i = 0; i < 5; ++i) {
        v[i] = (bits >> i) & 1u ? Yes : No;
    }
    return v;
}

// Independent brute force: enumerate classes, count positionwise agreement,
// resolve ties by priority.
ScenarioClass classify_oracle(const AnswerVector& v) {
    int best = -1;
    ScenarioClass winner = ScenarioClass::AlreadyTested;
    for (ScenarioClass c : kAllClasses) {
        AnswerVector row = expected_answers(c);
        int n = 0;
        for (std::size_t i = 0; i < 5; ++i) n += v[i] == row[i] ? 1 : 0;
        if (n > best || (n == best && class_priority(c) > class_priority(winner))) {
            best = n;
            winner = c;
        }
    }
    return winner;
}

}  // namespace

TEST_CASE("the three expected rows match the fixed table") {
    CHECK(expected_answers(ScenarioClass::AlreadyTested) == make_answers(Yes, No, No, Yes, No));
    CHECK(expected_answers(ScenarioClass::NeedTest) == make_answers(No, Yes, No, Yes, No));
    CHECK(expected_answers(ScenarioClass::ErrorProne) == make_answers(No, Yes, Yes, No, Yes));
}

TEST_CASE("each row scores 5 against its own class") {
    for (ScenarioClass c : kAllClasses) {
        CHECK(match_count(expected_answers(c), c) == 5);
        CHECK(classify(expected_answers(c)) == c);
    }
}

TEST_CASE("match_count examples") {
    CHECK(match_count(make_answers(Yes, No, No, Yes, No), ScenarioClass::AlreadyTested) == 5);
    // The error-prone row is the complement of the already-tested row.
    CHECK(match_count(make_answers(No, Yes, Yes, No, Yes), ScenarioClass::AlreadyTested) == 0);
    CHECK(match_count(make_answers(Yes, Yes, No, Yes, No), ScenarioClass::ErrorProne) == 1);
}

TEST_CASE("the running-example vector classifies as error-prone") {
    CHECK(classify(make_answers(No, Yes, Yes, No, Yes)) == ScenarioClass::ErrorProne);
}

TEST_CASE("ties resolve by priority") {
    // Scores 4 / 4 / 1: need-test beats already-tested.
    CHECK(classify(make_answers(Yes, Yes, No, Yes, No)) == ScenarioClass::NeedTest);
    // Scores 2 / 2 / 3: error-prone wins outright.
    CHECK(classify(make_answers(Yes, Yes, Yes, Yes, Yes)) == ScenarioClass::ErrorProne);
}

TEST_CASE("classify agrees with the brute-force oracle on all 32 vectors") {
    for (unsigned bits = 0; bits < 32; ++bits) {
        AnswerVector v = vector_from_bits(bits);
        CAPTURE(bits);
        CHECK(classify(v) == classify_oracle(v));
    }
}

TEST_CASE("flipping one answer moves every class score by exactly one") {
    for (unsigned bits = 0; bits < 32; ++bits) {
        AnswerVector v = vector_from_bits(bits);
        for (std::size_t i = 0; i < 5; ++i) {
            AnswerVector flipped = v;
            flipped[i] = flipped[i] == Yes ? No : Yes;
            for (ScenarioClass c : kAllClasses) {
                int delta = match_count(flipped, c) - match_count(v, c);
                CHECK((delta == 1 || delta == -1));
            }
        }
    }
}

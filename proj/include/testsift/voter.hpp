#pragma once

#include "testsift/core.hpp"

namespace testsift {

/// The fixed expected-answer row for a class:
///   AlreadyTested: YES NO  NO  YES NO
///   NeedTest:      NO  YES NO  YES NO
///   ErrorProne:    NO  YES YES NO  YES
AnswerVector expected_answers(ScenarioClass c);

/// Number of positions where v agrees with the class row; in [0, 5].
int match_count(const AnswerVector& v, ScenarioClass c);

/// Class with the maximal match count; ties go to the higher-priority class
/// (ErrorProne > NeedTest > AlreadyTested). Total on all 32 vectors.
ScenarioClass classify(const AnswerVector& v);

}  // namespace testsift

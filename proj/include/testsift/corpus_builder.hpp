#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "testsift/core.hpp"
#include "testsift/source_model.hpp"

namespace testsift {

/// A reproduced bug: buggy and fixed variants of one method, an input known
/// to trigger the failure, and the method's test suite.
struct BugRecord {
    MethodDecl buggy_method;
    MethodDecl fixed_method;
    MethodInvocation trigger_input;
    std::vector<TestRef> suite;
    std::string provenance;
};

enum class PassFail { Pass, Fail };

/// Execution and coverage oracles used to validate scenario labels.
class ExecutionOracle {
public:
    virtual ~ExecutionOracle() = default;
    virtual PassFail passes(const MethodDecl& variant, const MethodInvocation& input) = 0;
    virtual bool branch_coverage_increases(std::span<const TestRef> suite,
                                           const MethodInvocation& input) = 0;
    /// The invocation a suite test executes, when known.
    virtual std::optional<MethodInvocation> suite_invocation(const TestRef& test) = 0;
};

/// Interprets a small integer subset of the brace language: parameters,
/// `if (cond) { ... }`, `return expr;`, `assert expr;`, arithmetic with
/// + - * / and comparisons. A run fails on division by zero or a false
/// assert. Branch coverage is the sequence of if-outcomes; an input
/// increases coverage when its branch signature differs from every bound
/// suite invocation's signature on the same method.
class MiniLangOracle final : public ExecutionOracle {
public:
    explicit MiniLangOracle(MethodDecl coverage_method);

    void bind_suite_invocation(const TestRef& test, MethodInvocation input);

    PassFail passes(const MethodDecl& variant, const MethodInvocation& input) override;
    bool branch_coverage_increases(std::span<const TestRef> suite,
                                   const MethodInvocation& input) override;
    std::optional<MethodInvocation> suite_invocation(const TestRef& test) override;

    /// Branch signature of running the coverage method under input
    /// ('1'/'0' per if evaluated, in order); "!" appended on failure.
    std::string branch_signature(const MethodInvocation& input);

private:
    MethodDecl coverage_method_;
    std::map<TestRef, MethodInvocation> suite_inputs_;
};

/// Scenario over the buggy method labeled error-prone. The trigger must fail
/// on the buggy method, or ValidationError is thrown. The scenario id is
/// `<provenance>#error-prone`.
ExecutionScenario make_error_prone(const BugRecord& rec, ExecutionOracle& oracle);

/// Scenario over the fixed method labeled need-test. The trigger must pass
/// on the fixed method.
ExecutionScenario make_need_test(const BugRecord& rec, ExecutionOracle& oracle);

/// Scenario over the buggy method labeled already-tested. new_input must (i)
/// differ textually from every suite invocation, (ii) pass on the buggy
/// method, and (iii) not increase the suite's branch coverage; the violated
/// clause is named in the ValidationError.
ExecutionScenario make_already_tested(const BugRecord& rec, const MethodInvocation& new_input,
                                      ExecutionOracle& oracle);

// Bug-record file: one JSON record per line, mirroring the corpus format
// plus the fixed method body.
struct BugRecordParseResult {
    std::vector<BugRecord> records;
    std::vector<CorpusDiagnostic> diagnostics;
};

BugRecordParseResult parse_bug_records(std::string_view text);
std::string serialize_bug_record(const BugRecord& rec);

}  // namespace testsift

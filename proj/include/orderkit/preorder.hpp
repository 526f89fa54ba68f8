#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "orderkit/treebank.hpp"
#include "orderkit/util.hpp"

namespace orderkit::preorder {

// One element of a child pattern: an exact label, a label class reference
// (@NAME in the rule file), or a wildcard matching any single child.
struct Matcher {
    enum class Kind { Label, Class, Any };
    Kind kind = Kind::Any;
    std::string name;  // label or class name; empty for Any
};

struct ReorderRule {
    std::string parent_label;      // empty when parent_any
    bool parent_any = false;       // parent written as `*`
    std::vector<Matcher> pattern;  // length >= 2
    std::vector<int> permutation;  // permutation of 0..len-1
    int line = 0;                  // rule-file line, for diagnostics
};

struct RuleSet {
    std::string name;  // rule-file stem, e.g. "generic" or "tuned"
    std::map<std::string, std::set<std::string>> label_classes;
    std::vector<ReorderRule> rules;  // file order; first match wins
};

struct RuleError : Error {
    enum class Kind { Syntax, NotAPermutation, UnknownClass };
    Kind kind;
    int line;
    std::string detail;  // offending class name for UnknownClass
    RuleError(Kind k, int ln, const std::string& msg, std::string det = "")
        : Error(msg), kind(k), line(ln), detail(std::move(det)) {}
};

// Loads and validates a rule file. Rejects non-permutations, one-element
// patterns and references to undefined classes.
RuleSet load_rules(const std::string& path);
RuleSet parse_rules(const std::string& text, const std::string& name);

// Applies the rule set to a tree: post-order traversal, at most one rule
// per node, first matching rule wins. A rule matches when its pattern
// covers the node's whole child list, either directly or after inlining
// one same-labeled child's children into its position (this lets a rule
// reach complements buried one level inside a nested phrase of the same
// category, e.g. an object raised past an auxiliary). Returns a new tree
// with an identical leaf multiset; nodes with no matching rule are kept
// unchanged. `fired`, when non-null, is set to the number of rule
// applications.
treebank::ParseTree apply_rules(const treebank::ParseTree& tree, const RuleSet& rules,
                                std::size_t* fired = nullptr);

enum class OnParseError { Fail, Passthrough };

struct CorpusSummary {
    std::size_t reordered = 0;  // lines where at least one rule fired
    std::size_t unchanged = 0;
    std::size_t skipped = 0;  // malformed lines passed through (Passthrough only)
};

struct ParseFailure : Error {
    std::size_t line;
    ParseFailure(std::size_t ln, const std::string& msg) : Error(msg), line(ln) {}
};

// Reorders a treebank file (one bracketed tree per line) into a sentence
// file (one whitespace-joined yield per line, order preserving). Malformed
// lines either abort with ParseFailure or, under Passthrough, are emitted
// as their raw token content (parentheses stripped) and counted as skipped.
CorpusSummary preorder_corpus(const std::vector<std::string>& tree_lines, const RuleSet& rules,
                              std::vector<std::string>& out_lines,
                              OnParseError policy = OnParseError::Fail);
CorpusSummary preorder_corpus_file(const std::string& input_path, const RuleSet& rules,
                                   const std::string& output_path,
                                   OnParseError policy = OnParseError::Fail);

}  // namespace orderkit::preorder

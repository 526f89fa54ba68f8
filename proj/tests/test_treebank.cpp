#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "orderkit/treebank.hpp"
#include "testutil.hpp"

using namespace orderkit;
using namespace orderkit::treebank;

namespace {
const std::string kAuxExample =
    "(S (NP (NNP Anurag)) (VP (MD will) (VP (VB meet) (NP (NNP Thakur)))))";
const std::string kAuxExampleReordered =
    "(S (NP (NNP Anurag)) (VP (NP (NNP Thakur)) (VP (MD will) (VP (VB meet)))))";
}  // namespace

TEST_CASE("parse yields the transitive-verb example sentence") {
    ParseTree t = parse_tree(kAuxExample);
    CHECK(tree_yield(t) == std::vector<std::string>{"Anurag", "will", "meet", "Thakur"});
    CHECK(t.label == "S");
    CHECK(t.children.size() == 2);
}

TEST_CASE("reordered tree yields object before the verb group") {
    ParseTree t = parse_tree(kAuxExampleReordered);
    CHECK(tree_yield(t) == std::vector<std::string>{"Anurag", "Thakur", "will", "meet"});
}

TEST_CASE("minimal tree") {
    ParseTree t = parse_tree("(X hello)");
    CHECK(t.label == "X");
    CHECK(t.children.size() == 1);
    CHECK(t.children[0].is_leaf());
    CHECK(t.children[0].token == "hello");
    CHECK(tree_yield(t) == std::vector<std::string>{"hello"});
    CHECK(serialize_tree(t) == "(X hello)");
}

TEST_CASE("unbalanced input is rejected with a position") {
    CHECK_THROWS_AS(parse_tree("(S (NP a) (VP b"), ParseError);
    try {
        parse_tree("(S (NP a) (VP b");
    } catch (const ParseError& e) {
        CHECK(e.kind == ParseError::Kind::UnbalancedParens);
        CHECK(e.position == 10);  // the unclosed "(VP"
    }
}

TEST_CASE("error taxonomy") {
    auto kind_of = [](const std::string& s) {
        try {
            parse_tree(s);
        } catch (const ParseError& e) {
            return e.kind;
        }
        return static_cast<ParseError::Kind>(-1);
    };
    CHECK(kind_of("()") == ParseError::Kind::EmptyNode);
    CHECK(kind_of("(S)") == ParseError::Kind::EmptyNode);
    CHECK(kind_of("((X a))") == ParseError::Kind::EmptyNode);
    CHECK(kind_of("") == ParseError::Kind::EmptyNode);
    CHECK(kind_of("   ") == ParseError::Kind::EmptyNode);
    CHECK(kind_of("(X a) (Y b)") == ParseError::Kind::TrailingInput);
    CHECK(kind_of("(X a))") == ParseError::Kind::TrailingInput);
    CHECK(kind_of("hello") == ParseError::Kind::UnbalancedParens);
    CHECK(kind_of("(S (NP a)") == ParseError::Kind::UnbalancedParens);
}

TEST_CASE("serialization is canonical for the example tree") {
    CHECK(serialize_tree(parse_tree(kAuxExample)) == kAuxExample);
    // extra whitespace parses to the same tree and canonicalizes
    ParseTree spaced = parse_tree("(X   hello  )");
    CHECK(serialize_tree(spaced) == "(X hello)");
}

TEST_CASE("randomized round-trip: parse(serialize(t)) == t") {
    Rng rng(42);
    for (int i = 0; i < 1000; ++i) {
        ParseTree t = testutil::random_tree(rng);
        validate_tree(t);
        std::string s = serialize_tree(t);
        ParseTree back = parse_tree(s);
        CHECK(back == t);
        CHECK(serialize_tree(back) == s);  // canonical strings round-trip
        CHECK(tree_yield(back).size() == tree_yield(t).size());
    }
}

TEST_CASE("validate_tree rejects invariant violations") {
    ParseTree bad_leaf = ParseTree::leaf("has space");
    bad_leaf.token = "has space";
    CHECK_THROWS_AS(validate_tree(bad_leaf), Error);

    ParseTree both = ParseTree::node("X", {ParseTree::leaf("a")});
    both.token = "oops";
    CHECK_THROWS_AS(validate_tree(both), Error);

    ParseTree paren_label = ParseTree::node("X(", {ParseTree::leaf("a")});
    CHECK_THROWS_AS(validate_tree(paren_label), Error);
}

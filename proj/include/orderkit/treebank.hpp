#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "orderkit/util.hpp"

namespace orderkit::treebank {

// Labeled ordered constituency tree. A node is either internal (non-empty
// label, >= 1 children, empty token) or a leaf (non-empty token, empty
// label, no children). POS tags are ordinary internal labels whose single
// child is the terminal, as in Penn Treebank bracketing.
struct ParseTree {
    std::string label;
    std::vector<ParseTree> children;
    std::string token;

    bool is_leaf() const { return children.empty(); }

    static ParseTree leaf(std::string tok) {
        ParseTree t;
        t.token = std::move(tok);
        return t;
    }
    static ParseTree node(std::string lbl, std::vector<ParseTree> kids) {
        ParseTree t;
        t.label = std::move(lbl);
        t.children = std::move(kids);
        return t;
    }

    bool operator==(const ParseTree& other) const = default;
};

struct ParseError : Error {
    enum class Kind { UnbalancedParens, EmptyNode, TrailingInput };
    Kind kind;
    std::size_t position;  // byte offset into the input string
    ParseError(Kind k, std::size_t pos, const std::string& msg)
        : Error(msg), kind(k), position(pos) {}
};

// Parses a single bracketed tree `(LABEL child ...)`. Children are nested
// expressions or bare terminal tokens. Rejects empty input, multi-root
// input and unbalanced parentheses, all with byte positions.
ParseTree parse_tree(const std::string& text);

// Canonical single-line form with single spaces; round-trips through
// parse_tree. Caller must pass a tree satisfying the invariants.
std::string serialize_tree(const ParseTree& tree);

// Left-to-right sequence of leaf tokens.
std::vector<std::string> tree_yield(const ParseTree& tree);

// Throws Error if the tree violates the structural invariants (useful when
// trees are built programmatically rather than parsed).
void validate_tree(const ParseTree& tree);

}  // namespace orderkit::treebank

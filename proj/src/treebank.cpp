#include "orderkit/treebank.hpp"

namespace orderkit::treebank {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }
bool is_atom_char(char c) { return !is_space(c) && c != '(' && c != ')'; }

struct Parser {
    const std::string& text;
    std::size_t pos = 0;

    void skip_ws() {
        while (pos < text.size() && is_space(text[pos])) ++pos;
    }

    std::string atom() {
        std::size_t start = pos;
        while (pos < text.size() && is_atom_char(text[pos])) ++pos;
        return text.substr(start, pos - start);
    }

    ParseTree node() {
        // caller guarantees text[pos] == '('
        std::size_t open = pos;
        ++pos;
        skip_ws();
        std::string label = atom();
        if (label.empty())
            throw ParseError(ParseError::Kind::EmptyNode, open,
                             "node without label at position " + std::to_string(open));
        std::vector<ParseTree> kids;
        for (;;) {
            skip_ws();
            if (pos >= text.size())
                throw ParseError(ParseError::Kind::UnbalancedParens, open,
                                 "unclosed '(' at position " + std::to_string(open));
            char c = text[pos];
            if (c == ')') {
                ++pos;
                break;
            }
            if (c == '(') {
                kids.push_back(node());
            } else {
                kids.push_back(ParseTree::leaf(atom()));
            }
        }
        if (kids.empty())
            throw ParseError(ParseError::Kind::EmptyNode, open,
                             "node without children at position " + std::to_string(open));
        return ParseTree::node(std::move(label), std::move(kids));
    }
};

}  // namespace

ParseTree parse_tree(const std::string& text) {
    Parser p{text};
    p.skip_ws();
    if (p.pos >= text.size())
        throw ParseError(ParseError::Kind::EmptyNode, 0, "empty input");
    if (text[p.pos] != '(')
        throw ParseError(ParseError::Kind::UnbalancedParens, p.pos,
                         "expected '(' at position " + std::to_string(p.pos));
    ParseTree root = p.node();
    p.skip_ws();
    if (p.pos < text.size())
        throw ParseError(ParseError::Kind::TrailingInput, p.pos,
                         "trailing input at position " + std::to_string(p.pos));
    return root;
}

namespace {

void serialize_into(const ParseTree& t, std::string& out) {
    if (t.is_leaf()) {
        out += t.token;
        return;
    }
    out += '(';
    out += t.label;
    for (const auto& child : t.children) {
        out += ' ';
        serialize_into(child, out);
    }
    out += ')';
}

void yield_into(const ParseTree& t, std::vector<std::string>& out) {
    if (t.is_leaf()) {
        out.push_back(t.token);
        return;
    }
    for (const auto& child : t.children) yield_into(child, out);
}

bool valid_atom(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s)
        if (!is_atom_char(c)) return false;
    return true;
}

}  // namespace

std::string serialize_tree(const ParseTree& tree) {
    std::string out;
    serialize_into(tree, out);
    return out;
}

std::vector<std::string> tree_yield(const ParseTree& tree) {
    std::vector<std::string> out;
    yield_into(tree, out);
    return out;
}

void validate_tree(const ParseTree& tree) {
    if (tree.is_leaf()) {
        if (!tree.label.empty())
            throw Error("leaf with label '" + tree.label + "'");
        if (!valid_atom(tree.token))
            throw Error("invalid leaf token '" + tree.token + "'");
        return;
    }
    if (!tree.token.empty())
        throw Error("internal node with token '" + tree.token + "'");
    if (!valid_atom(tree.label))
        throw Error("invalid node label '" + tree.label + "'");
    for (const auto& child : tree.children) validate_tree(child);
}

}  // namespace orderkit::treebank

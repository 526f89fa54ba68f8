#include "orderkit/preorder.hpp"

#include <algorithm>

namespace orderkit::preorder {

using treebank::ParseTree;

namespace {

std::string file_stem(const std::string& path) {
    std::size_t slash = path.find_last_of("/\\");
    std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
    std::size_t dot = base.find_last_of('.');
    return dot == std::string::npos || dot == 0 ? base : base.substr(0, dot);
}

Matcher parse_matcher(const std::string& tok, int line) {
    Matcher m;
    if (tok == "*") {
        m.kind = Matcher::Kind::Any;
    } else if (tok.size() >= 2 && tok[0] == '@') {
        m.kind = Matcher::Kind::Class;
        m.name = tok.substr(1);
    } else if (tok[0] == '@') {
        throw RuleError(RuleError::Kind::Syntax, line, "bare '@' in pattern on line " + std::to_string(line));
    } else {
        m.kind = Matcher::Kind::Label;
        m.name = tok;
    }
    return m;
}

}  // namespace

RuleSet parse_rules(const std::string& text, const std::string& name) {
    RuleSet rs;
    rs.name = name;
    int lineno = 0;
    std::string line;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string::npos) {
            line = text.substr(start);
            start = text.size() + 1;
        } else {
            line = text.substr(start, end - start);
            start = end + 1;
        }
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::vector<std::string> toks = split_ws(line);
        if (toks.empty()) continue;

        if (toks[0] == "class") {
            // class NAME = LABEL1 LABEL2 ...
            if (toks.size() < 4 || toks[2] != "=")
                throw RuleError(RuleError::Kind::Syntax, lineno,
                                "malformed class definition on line " + std::to_string(lineno));
            std::set<std::string>& labels = rs.label_classes[toks[1]];
            for (std::size_t i = 3; i < toks.size(); ++i) labels.insert(toks[i]);
            continue;
        }

        // PARENT : M1 M2 ... Mk -> p1 p2 ... pk
        auto colon = std::find(toks.begin(), toks.end(), ":");
        auto arrow = std::find(toks.begin(), toks.end(), "->");
        if (colon != toks.begin() + 1 || arrow == toks.end() || arrow < colon)
            throw RuleError(RuleError::Kind::Syntax, lineno,
                            "malformed rule on line " + std::to_string(lineno));
        ReorderRule rule;
        rule.line = lineno;
        if (toks[0] == "*")
            rule.parent_any = true;
        else
            rule.parent_label = toks[0];
        for (auto it = colon + 1; it != arrow; ++it)
            rule.pattern.push_back(parse_matcher(*it, lineno));
        if (rule.pattern.size() < 2)
            throw RuleError(RuleError::Kind::Syntax, lineno,
                            "pattern needs at least 2 elements on line " + std::to_string(lineno));
        for (auto it = arrow + 1; it != toks.end(); ++it) {
            try {
                std::size_t used = 0;
                int v = std::stoi(*it, &used);
                if (used != it->size()) throw std::invalid_argument("junk");
                rule.permutation.push_back(v);
            } catch (const std::exception&) {
                throw RuleError(RuleError::Kind::Syntax, lineno,
                                "bad permutation index '" + *it + "' on line " + std::to_string(lineno));
            }
        }
        // must be a true permutation of 0..k-1
        std::vector<int> sorted = rule.permutation;
        std::sort(sorted.begin(), sorted.end());
        bool ok = sorted.size() == rule.pattern.size();
        for (std::size_t i = 0; ok && i < sorted.size(); ++i) ok = sorted[i] == static_cast<int>(i);
        if (!ok)
            throw RuleError(RuleError::Kind::NotAPermutation, lineno,
                            "indices are not a permutation on line " + std::to_string(lineno));
        rs.rules.push_back(std::move(rule));
    }
    // classes may be defined anywhere in the file; validate references last
    for (const auto& rule : rs.rules)
        for (const auto& m : rule.pattern)
            if (m.kind == Matcher::Kind::Class && !rs.label_classes.count(m.name))
                throw RuleError(RuleError::Kind::UnknownClass, rule.line,
                                "unknown class '@" + m.name + "' on line " + std::to_string(rule.line),
                                m.name);
    return rs;
}

RuleSet load_rules(const std::string& path) {
    return parse_rules(read_file(path), file_stem(path));
}

namespace {

bool matcher_matches(const Matcher& m, const RuleSet& rs, const ParseTree& child) {
    switch (m.kind) {
        case Matcher::Kind::Any:
            return true;
        case Matcher::Kind::Label:
            return !child.is_leaf() && child.label == m.name;
        case Matcher::Kind::Class: {
            if (child.is_leaf()) return false;
            auto it = rs.label_classes.find(m.name);
            return it != rs.label_classes.end() && it->second.count(child.label) > 0;
        }
    }
    return false;
}

bool pattern_matches(const ReorderRule& rule, const RuleSet& rs,
                     const std::vector<ParseTree>& children) {
    if (children.size() != rule.pattern.size()) return false;
    for (std::size_t i = 0; i < children.size(); ++i)
        if (!matcher_matches(rule.pattern[i], rs, children[i])) return false;
    return true;
}

std::vector<ParseTree> permute(const std::vector<ParseTree>& children,
                               const std::vector<int>& perm) {
    std::vector<ParseTree> out;
    out.reserve(children.size());
    for (int idx : perm) out.push_back(children[static_cast<std::size_t>(idx)]);
    return out;
}

ParseTree apply_node(const ParseTree& tree, const RuleSet& rs, std::size_t& fired) {
    if (tree.is_leaf()) return tree;
    ParseTree out;
    out.label = tree.label;
    out.children.reserve(tree.children.size());
    for (const auto& child : tree.children) out.children.push_back(apply_node(child, rs, fired));

    for (const auto& rule : rs.rules) {
        if (!rule.parent_any && rule.parent_label != out.label) continue;
        if (pattern_matches(rule, rs, out.children)) {
            out.children = permute(out.children, rule.permutation);
            ++fired;
            return out;
        }
        // One child of the same category may be inlined so the pattern can
        // see one level deeper, e.g. VP(MD VP(NP VB)) matched as MD NP VB.
        for (std::size_t i = 0; i < out.children.size(); ++i) {
            const ParseTree& child = out.children[i];
            if (child.is_leaf() || child.label != out.label) continue;
            std::vector<ParseTree> view;
            view.reserve(out.children.size() + child.children.size() - 1);
            for (std::size_t j = 0; j < out.children.size(); ++j) {
                if (j == i)
                    view.insert(view.end(), child.children.begin(), child.children.end());
                else
                    view.push_back(out.children[j]);
            }
            if (pattern_matches(rule, rs, view)) {
                out.children = permute(view, rule.permutation);
                ++fired;
                return out;
            }
        }
    }
    return out;
}

std::string strip_parens_tokens(const std::string& line) {
    std::string cleaned = line;
    for (char& c : cleaned)
        if (c == '(' || c == ')') c = ' ';
    return join(split_ws(cleaned));
}

}  // namespace

ParseTree apply_rules(const ParseTree& tree, const RuleSet& rules, std::size_t* fired) {
    std::size_t count = 0;
    ParseTree out = apply_node(tree, rules, count);
    if (fired) *fired = count;
    return out;
}

CorpusSummary preorder_corpus(const std::vector<std::string>& tree_lines, const RuleSet& rules,
                              std::vector<std::string>& out_lines, OnParseError policy) {
    CorpusSummary summary;
    out_lines.clear();
    out_lines.reserve(tree_lines.size());
    for (std::size_t i = 0; i < tree_lines.size(); ++i) {
        ParseTree tree;
        try {
            tree = treebank::parse_tree(tree_lines[i]);
        } catch (const treebank::ParseError& e) {
            if (policy == OnParseError::Fail)
                throw ParseFailure(i + 1, "line " + std::to_string(i + 1) + ": " + e.what());
            out_lines.push_back(strip_parens_tokens(tree_lines[i]));
            ++summary.skipped;
            continue;
        }
        std::size_t fired = 0;
        ParseTree reordered = apply_rules(tree, rules, &fired);
        out_lines.push_back(join(treebank::tree_yield(reordered)));
        if (fired > 0)
            ++summary.reordered;
        else
            ++summary.unchanged;
    }
    return summary;
}

CorpusSummary preorder_corpus_file(const std::string& input_path, const RuleSet& rules,
                                   const std::string& output_path, OnParseError policy) {
    std::vector<std::string> out_lines;
    CorpusSummary summary = preorder_corpus(read_lines(input_path), rules, out_lines, policy);
    write_lines(output_path, out_lines);
    return summary;
}

}  // namespace orderkit::preorder

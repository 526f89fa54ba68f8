#include "orderkit/synthlang.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

namespace orderkit::synthlang {

using treebank::ParseTree;

const PosLexicon* Grammar::find_pos(const std::string& tag) const {
    for (const auto& pos : lexicon)
        if (pos.tag == tag) return &pos;
    return nullptr;
}

namespace {

WordOrder parse_order(const std::string& s, int line) {
    if (s == "SVO") return WordOrder::SVO;
    if (s == "SOV") return WordOrder::SOV;
    throw GrammarError("line " + std::to_string(line) + ": unknown word order '" + s + "'");
}

std::string wordform(const std::string& tag, std::size_t index, std::size_t count,
                     const std::string& suffix) {
    int width = count >= 100 ? 3 : 2;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%0*zu", width, index);
    return ascii_lower(tag) + buf + suffix;
}

}  // namespace

Grammar parse_grammar(const std::string& text) {
    Grammar g;
    int lineno = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        std::string line = end == std::string::npos ? text.substr(start) : text.substr(start, end - start);
        start = end == std::string::npos ? text.size() + 1 : end + 1;
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::vector<std::string> toks = split_ws(line);
        if (toks.empty()) continue;

        const std::string& kw = toks[0];
        if (kw == "order" && toks.size() == 3) {
            WordOrder order = parse_order(toks[2], lineno);
            if (toks[1] == "assisting")
                g.assisting_order = order;
            else if (toks[1] == "source")
                g.source_order = order;
            else if (toks[1] == "target")
                g.target_order = order;
            else
                throw GrammarError("line " + std::to_string(lineno) + ": unknown layer '" + toks[1] + "'");
        } else if (kw == "maxdepth" && toks.size() == 2) {
            g.max_depth = std::stoi(toks[1]);
        } else if (kw == "start" && toks.size() == 2) {
            g.start = toks[1];
        } else if (kw == "heads" && toks.size() >= 2) {
            for (std::size_t i = 1; i < toks.size(); ++i) g.head_labels.insert(toks[i]);
        } else if (kw == "prod" && toks.size() >= 5) {
            // prod LHS -> RHS... : PROB
            if (toks[2] != "->")
                throw GrammarError("line " + std::to_string(lineno) + ": expected '->'");
            Production p;
            p.lhs = toks[1];
            p.line = lineno;
            std::size_t i = 3;
            for (; i < toks.size() && toks[i] != ":"; ++i) p.rhs.push_back(toks[i]);
            if (i >= toks.size() || toks[i] != ":")
                throw GrammarError("line " + std::to_string(lineno) + ": expected ': PROB'");
            if (i + 2 != toks.size())
                throw GrammarError("line " + std::to_string(lineno) + ": expected single probability");
            p.prob = std::stod(toks[i + 1]);
            if (p.rhs.empty())
                throw GrammarError("line " + std::to_string(lineno) + ": empty production");
            g.productions.push_back(std::move(p));
        } else if (kw == "lex" && toks.size() == 3) {
            PosLexicon pos;
            pos.tag = toks[1];
            std::size_t count = static_cast<std::size_t>(std::stoul(toks[2]));
            if (count == 0)
                throw GrammarError("line " + std::to_string(lineno) + ": lexicon size must be > 0");
            for (std::size_t i = 0; i < count; ++i) {
                pos.assisting.push_back(wordform(pos.tag, i, count, ""));
                pos.source.push_back(wordform(pos.tag, i, count, "_s"));
                pos.target.push_back(wordform(pos.tag, i, count, "_t"));
            }
            g.lexicon.push_back(std::move(pos));
        } else {
            throw GrammarError("line " + std::to_string(lineno) + ": cannot parse directive '" + kw + "'");
        }
    }
    if (g.productions.empty()) throw GrammarError("grammar has no productions");
    if (g.lexicon.empty()) throw GrammarError("grammar has no lexicon");
    return g;
}

Grammar load_grammar(const std::string& path) { return parse_grammar(read_file(path)); }

namespace {

std::set<std::string> nonterminals(const Grammar& g) {
    std::set<std::string> nts;
    for (const auto& p : g.productions) nts.insert(p.lhs);
    return nts;
}

// Minimum derivation depth per symbol; POS tags have depth 1 (tag node over
// a leaf). Unset entries mean the symbol cannot terminate.
std::map<std::string, int> min_depths(const Grammar& g) {
    std::map<std::string, int> depth;
    for (const auto& pos : g.lexicon) depth[pos.tag] = 1;
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& p : g.productions) {
            int worst = 0;
            bool all_known = true;
            for (const auto& sym : p.rhs) {
                auto it = depth.find(sym);
                if (it == depth.end()) {
                    all_known = false;
                    break;
                }
                worst = std::max(worst, it->second);
            }
            if (!all_known) continue;
            int candidate = worst + 1;
            auto it = depth.find(p.lhs);
            if (it == depth.end() || candidate < it->second) {
                depth[p.lhs] = candidate;
                changed = true;
            }
        }
    }
    return depth;
}

}  // namespace

std::vector<Diagnostic> validate_grammar(const Grammar& g) {
    std::vector<Diagnostic> diags;

    // probability sums per nonterminal
    std::map<std::string, double> sums;
    for (const auto& p : g.productions) sums[p.lhs] += p.prob;
    for (const auto& [lhs, sum] : sums)
        if (std::abs(sum - 1.0) > 1e-9)
            diags.push_back({"production probabilities for " + lhs + " sum to " +
                             format_double(sum, 6) + ", expected 1"});

    // lexicon layer alignment
    for (const auto& pos : g.lexicon)
        if (pos.assisting.size() != pos.source.size() || pos.assisting.size() != pos.target.size())
            diags.push_back({"lexicon layers for " + pos.tag + " are misaligned (" +
                             std::to_string(pos.assisting.size()) + "/" +
                             std::to_string(pos.source.size()) + "/" +
                             std::to_string(pos.target.size()) + ")"});

    // reachability from the start symbol
    std::set<std::string> nts = nonterminals(g);
    if (!nts.count(g.start)) diags.push_back({"start symbol " + g.start + " has no productions"});
    std::set<std::string> reached{g.start};
    bool grew = true;
    while (grew) {
        grew = false;
        for (const auto& p : g.productions) {
            if (!reached.count(p.lhs)) continue;
            for (const auto& sym : p.rhs)
                if (nts.count(sym) && reached.insert(sym).second) grew = true;
        }
    }
    for (const auto& nt : nts)
        if (!reached.count(nt)) diags.push_back({"nonterminal " + nt + " is unreachable"});

    // every symbol on a RHS must be a nonterminal or a POS tag
    for (const auto& p : g.productions)
        for (const auto& sym : p.rhs)
            if (!nts.count(sym) && !g.is_pos(sym))
                diags.push_back({"symbol " + sym + " in production for " + p.lhs +
                                 " is neither a nonterminal nor a POS tag"});

    // termination within max_depth
    std::map<std::string, int> depth = min_depths(g);
    for (const auto& nt : nts) {
        auto it = depth.find(nt);
        if (it == depth.end())
            diags.push_back({"nonterminal " + nt + " cannot derive a finite sentence"});
        else if (nt == g.start && it->second > g.max_depth)
            diags.push_back({"start symbol needs depth " + std::to_string(it->second) +
                             " > maxdepth " + std::to_string(g.max_depth)});
    }
    return diags;
}

namespace {

struct Sampler {
    const Grammar& g;
    std::map<std::string, int> depth;  // min completion depth per symbol

    // Expands `sym` into a tree of assisting-layer words, recording the
    // chosen lexicon slot on each preterminal via slot_of.
    ParseTree expand(const std::string& sym, int remaining, Rng& rng,
                     std::vector<std::pair<const PosLexicon*, std::size_t>>& slots) const {
        const PosLexicon* pos = g.find_pos(sym);
        if (pos) {
            std::size_t idx = static_cast<std::size_t>(rng.next_below(pos->assisting.size()));
            slots.push_back({pos, idx});
            return ParseTree::node(sym, {ParseTree::leaf(pos->assisting[idx])});
        }
        // choose among productions that can still finish in the remaining
        // depth, renormalizing their probabilities
        std::vector<const Production*> options;
        double mass = 0.0;
        for (const auto& p : g.productions) {
            if (p.lhs != sym) continue;
            int need = 0;
            for (const auto& s : p.rhs) need = std::max(need, depth.at(s));
            if (need + 1 <= remaining) {
                options.push_back(&p);
                mass += p.prob;
            }
        }
        if (options.empty() || mass <= 0.0)
            throw GrammarError("no expandable production for " + sym + " within depth budget");
        double pick = rng.uniform() * mass;
        const Production* chosen = options.back();
        double acc = 0.0;
        for (const Production* p : options) {
            acc += p->prob;
            if (pick < acc) {
                chosen = p;
                break;
            }
        }
        std::vector<ParseTree> kids;
        kids.reserve(chosen->rhs.size());
        for (const auto& s : chosen->rhs) kids.push_back(expand(s, remaining - 1, rng, slots));
        return ParseTree::node(sym, std::move(kids));
    }
};

// SOV realization: heads go after the other children, both groups keeping
// their relative order. Runs on the derivation tree independently of the
// reordering-rule engine.
void sov_yield(const Grammar& g, const ParseTree& node,
               std::vector<const ParseTree*>& preterminals) {
    if (node.children.size() == 1 && node.children[0].is_leaf()) {
        preterminals.push_back(&node);
        return;
    }
    std::vector<const ParseTree*> tail;
    for (const auto& child : node.children) {
        if (g.head_labels.count(child.label))
            tail.push_back(&child);
        else
            sov_yield(g, child, preterminals);
    }
    for (const ParseTree* h : tail) sov_yield(g, *h, preterminals);
}

}  // namespace

GeneratedCorpus generate_corpus(const Grammar& g, std::size_t n, std::uint64_t seed,
                                double noise_prob) {
    if (n == 0) throw GrammarError("corpus size must be >= 1");
    std::vector<Diagnostic> diags = validate_grammar(g);
    if (!diags.empty()) throw GrammarError("grammar invalid: " + diags.front().message);

    GeneratedCorpus corpus;
    for (const auto& pos : g.lexicon)
        for (std::size_t i = 0; i < pos.source.size(); ++i)
            corpus.dictionary.push_back({pos.source[i], pos.assisting[i]});

    std::map<std::string, std::string> dict(corpus.dictionary.begin(), corpus.dictionary.end());

    Sampler sampler{g, min_depths(g)};
    corpus.examples.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng(mix_seed(seed, i));
        ParallelExample ex;
        std::vector<std::pair<const PosLexicon*, std::size_t>> slots;
        ex.assisting_tree = sampler.expand(g.start, g.max_depth, rng, slots);
        ex.assisting = treebank::tree_yield(ex.assisting_tree);

        // SOV-side preterminal order (assisting-layer tree carries the
        // lexicon slot through its leaf form)
        std::vector<const ParseTree*> order;
        sov_yield(g, ex.assisting_tree, order);

        auto layer_word = [&](const ParseTree* preterm, bool target_layer) -> std::string {
            const PosLexicon* pos = g.find_pos(preterm->label);
            const std::string& assist_form = preterm->children[0].token;
            for (std::size_t k = 0; k < pos->assisting.size(); ++k)
                if (pos->assisting[k] == assist_form)
                    return target_layer ? pos->target[k] : pos->source[k];
            throw GrammarError("internal: leaf form not in lexicon");
        };

        const bool src_sov = g.source_order == WordOrder::SOV;
        const bool tgt_sov = g.target_order == WordOrder::SOV;
        std::vector<const ParseTree*> svo_order;
        if (!src_sov || !tgt_sov) {
            // SVO order = plain left-to-right preterminals
            struct Collect {
                static void run(const ParseTree& nd, std::vector<const ParseTree*>& out) {
                    if (nd.children.size() == 1 && nd.children[0].is_leaf()) {
                        out.push_back(&nd);
                        return;
                    }
                    for (const auto& c : nd.children) run(c, out);
                }
            };
            Collect::run(ex.assisting_tree, svo_order);
        }

        for (const ParseTree* pt : (src_sov ? order : svo_order))
            ex.source.push_back(layer_word(pt, false));
        for (const ParseTree* pt : (tgt_sov ? order : svo_order))
            ex.target.push_back(layer_word(pt, true));

        // out-of-dictionary noise on the source side
        for (std::string& tok : ex.source) {
            if (noise_prob > 0.0 && rng.uniform() < noise_prob) {
                tok += "~" + std::to_string(rng.next_below(10));
                ++ex.noised;
            }
        }

        // dictionary pivot, copy-through for OOV forms
        ex.pivoted.reserve(ex.source.size());
        for (const std::string& tok : ex.source) {
            auto it = dict.find(tok);
            ex.pivoted.push_back(it == dict.end() ? tok : it->second);
        }

        corpus.examples.push_back(std::move(ex));
    }
    return corpus;
}

void write_corpus_files(const GeneratedCorpus& corpus, const std::string& dir) {
    std::filesystem::create_directories(dir);
    std::vector<std::string> trees, assist, source, target;
    trees.reserve(corpus.examples.size());
    for (const auto& ex : corpus.examples) {
        trees.push_back(treebank::serialize_tree(ex.assisting_tree));
        assist.push_back(join(ex.assisting));
        source.push_back(join(ex.source));
        target.push_back(join(ex.target));
    }
    write_lines(dir + "/trees.asst", trees);
    write_lines(dir + "/assist.snt", assist);
    write_lines(dir + "/source.snt", source);
    write_lines(dir + "/target.snt", target);
    std::vector<std::string> dict_lines;
    dict_lines.reserve(corpus.dictionary.size());
    for (const auto& [src, asst] : corpus.dictionary) dict_lines.push_back(src + "\t" + asst);
    write_lines(dir + "/dict.tsv", dict_lines);
}

Splits split_corpus(std::size_t n_examples, const SplitSizes& sizes, std::uint64_t seed) {
    std::size_t need = sizes.parent_train + sizes.child_train_max + sizes.dev + sizes.test;
    if (need > n_examples)
        throw Error("insufficient data: need " + std::to_string(need) + " examples, have " +
                    std::to_string(n_examples));
    std::vector<std::size_t> idx(n_examples);
    for (std::size_t i = 0; i < n_examples; ++i) idx[i] = i;
    Rng rng(mix_seed(seed, 0x51717));
    for (std::size_t i = n_examples; i > 1; --i)
        std::swap(idx[i - 1], idx[rng.next_below(i)]);

    Splits out;
    std::size_t at = 0;
    auto take = [&](std::size_t count) {
        std::vector<std::size_t> part(idx.begin() + at, idx.begin() + at + count);
        at += count;
        return part;
    };
    out.parent = take(sizes.parent_train);
    out.child_pool = take(sizes.child_train_max);
    out.dev = take(sizes.dev);
    out.test = take(sizes.test);
    return out;
}

std::string default_grammar_text() {
    return R"(# Desk-scale grammar: SVO assisting layer with aligned SOV source and
# target layers. Heads (verbs, auxiliaries, adpositions) move after their
# siblings in the SOV layers.
order assisting SVO
order source SOV
order target SOV
maxdepth 8
start S
heads V AUX P
prod S -> NP VP : 1.0
prod VP -> V NP : 0.5
prod VP -> V NP PP : 0.3
prod VP -> AUX V NP : 0.2
prod PP -> P NP : 1.0
prod NP -> Det N : 0.7
prod NP -> Det Adj N : 0.3
lex N 40
lex V 15
lex Adj 10
lex Det 3
lex P 5
lex AUX 2
)";
}

}  // namespace orderkit::synthlang

#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "orderkit/treebank.hpp"
#include "orderkit/util.hpp"

namespace orderkit::synthlang {

enum class WordOrder { SVO, SOV };

struct Production {
    std::string lhs;
    std::vector<std::string> rhs;  // nonterminals or POS tags
    double prob = 1.0;
    int line = 0;
};

// Aligned word lists: index i of each layer forms a translation triple.
struct PosLexicon {
    std::string tag;
    std::vector<std::string> assisting;
    std::vector<std::string> source;
    std::vector<std::string> target;
};

// PCFG over aligned three-layer lexica. The assisting layer is realized in
// derivation order (SVO); SOV layers realize each node with head-labeled
// children moved after the others, relative order preserved on both sides.
struct Grammar {
    std::string start = "S";
    std::vector<Production> productions;
    std::vector<PosLexicon> lexicon;  // POS order as listed in the file
    std::set<std::string> head_labels;
    WordOrder assisting_order = WordOrder::SVO;
    WordOrder source_order = WordOrder::SOV;
    WordOrder target_order = WordOrder::SOV;
    int max_depth = 8;

    const PosLexicon* find_pos(const std::string& tag) const;
    bool is_pos(const std::string& tag) const { return find_pos(tag) != nullptr; }
};

struct GrammarError : Error {
    using Error::Error;
};

// Parses the declarative grammar format:
//   order assisting|source|target SVO|SOV
//   maxdepth N
//   start S
//   heads LABEL...
//   prod LHS -> RHS... : PROB
//   lex TAG COUNT            (auto-generates aligned wordforms)
Grammar load_grammar(const std::string& path);
Grammar parse_grammar(const std::string& text);

struct Diagnostic {
    std::string message;
};

// Reports probability-sum violations, unreachable nonterminals, misaligned
// lexicon layers and unbounded-recursion risk. Empty result = clean.
std::vector<Diagnostic> validate_grammar(const Grammar& g);

struct ParallelExample {
    treebank::ParseTree assisting_tree;  // SVO, assisting-layer words
    std::vector<std::string> assisting;  // yield of assisting_tree
    std::vector<std::string> source;     // SOV order, source-layer words, may be noised
    std::vector<std::string> target;     // target-layer words in target order
    std::vector<std::string> pivoted;    // source mapped through the dictionary, order kept
    std::size_t noised = 0;              // source positions replaced by out-of-dictionary forms
};

struct GeneratedCorpus {
    std::vector<ParallelExample> examples;
    // source form -> assisting form over the whole lexicon
    std::vector<std::pair<std::string, std::string>> dictionary;
};

// Samples n examples i.i.d.; example i uses an RNG seeded with
// mix_seed(seed, i), so results do not depend on generation order.
// noise_prob is the probability of replacing a source token with an
// out-of-dictionary form (the pivot then copies it through unchanged).
GeneratedCorpus generate_corpus(const Grammar& g, std::size_t n, std::uint64_t seed,
                                double noise_prob = 0.0);

// Emits trees.asst, assist.snt, source.snt, target.snt and dict.tsv.
void write_corpus_files(const GeneratedCorpus& corpus, const std::string& dir);

struct SplitSizes {
    std::size_t parent_train = 0;
    std::size_t child_train_max = 0;
    std::size_t dev = 0;
    std::size_t test = 0;
};

struct Splits {
    std::vector<std::size_t> parent, child_pool, dev, test;  // example indices
};

// Disjoint parent/dev/test plus a child pool whose prefixes form the
// nested child-train subsets. Throws on insufficient data.
Splits split_corpus(std::size_t n_examples, const SplitSizes& sizes, std::uint64_t seed);

// The built-in desk-scale grammar (also shipped as configs/default.grammar).
std::string default_grammar_text();

}  // namespace orderkit::synthlang

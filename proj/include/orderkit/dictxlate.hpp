#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include "orderkit/util.hpp"

namespace orderkit::dictxlate {

struct DictError : Error {
    enum class Kind { MalformedLine, EmptyFile };
    Kind kind;
    std::size_t line;
    DictError(Kind k, std::size_t ln, const std::string& msg) : Error(msg), kind(k), line(ln) {}
};

enum class OovPolicy { Copy, Unk };

// Exact-match source->assisting token map. Keys are normalized at load
// (ASCII lowercasing when enabled); lookups normalize the same way.
struct BilingualDictionary {
    std::unordered_map<std::string, std::string> entries;
    OovPolicy oov_policy = OovPolicy::Copy;
    std::string unk_token = "<unk>";
    bool lowercase = true;
    std::size_t duplicates = 0;  // duplicate keys seen at load (first wins)

    std::size_t size() const { return entries.size(); }
};

// Loads a TSV file of `source<TAB>assisting` lines. Duplicate keys resolve
// first-occurrence-wins. Blank lines are skipped; a non-blank line without
// a TAB, or with whitespace inside either field, is malformed.
BilingualDictionary load_dictionary(const std::string& path, bool lowercase = true);
BilingualDictionary parse_dictionary(const std::vector<std::string>& lines, bool lowercase = true);

struct TranslationResult {
    std::vector<std::string> tokens;
    std::size_t oov_count = 0;
    double oov_rate = 0.0;  // oov_count / max(1, input length)
};

// Position-preserving word-by-word translation; OOV tokens follow the
// dictionary's policy (copy through or replace with the unk token).
TranslationResult translate_word_by_word(const std::vector<std::string>& sentence,
                                         const BilingualDictionary& dict);

}  // namespace orderkit::dictxlate

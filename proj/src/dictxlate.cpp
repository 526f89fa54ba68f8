#include "orderkit/dictxlate.hpp"

namespace orderkit::dictxlate {

namespace {

bool has_ws(const std::string& s) {
    for (char c : s)
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') return true;
    return false;
}

}  // namespace

BilingualDictionary parse_dictionary(const std::vector<std::string>& lines, bool lowercase) {
    BilingualDictionary dict;
    dict.lowercase = lowercase;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string& line = lines[i];
        if (line.empty()) continue;
        std::size_t tab = line.find('\t');
        if (tab == std::string::npos)
            throw DictError(DictError::Kind::MalformedLine, i + 1,
                            "line " + std::to_string(i + 1) + ": no TAB separator");
        std::string key = line.substr(0, tab);
        std::string value = line.substr(tab + 1);
        if (key.empty() || value.empty() || has_ws(key) || has_ws(value))
            throw DictError(DictError::Kind::MalformedLine, i + 1,
                            "line " + std::to_string(i + 1) + ": fields must be single non-empty tokens");
        if (lowercase) key = ascii_lower(key);
        auto [it, inserted] = dict.entries.emplace(std::move(key), std::move(value));
        if (!inserted) ++dict.duplicates;
    }
    if (dict.entries.empty())
        throw DictError(DictError::Kind::EmptyFile, 0, "dictionary has no entries");
    return dict;
}

BilingualDictionary load_dictionary(const std::string& path, bool lowercase) {
    return parse_dictionary(read_lines(path), lowercase);
}

TranslationResult translate_word_by_word(const std::vector<std::string>& sentence,
                                         const BilingualDictionary& dict) {
    TranslationResult result;
    result.tokens.reserve(sentence.size());
    for (const std::string& tok : sentence) {
        std::string key = dict.lowercase ? ascii_lower(tok) : tok;
        auto it = dict.entries.find(key);
        if (it != dict.entries.end()) {
            result.tokens.push_back(it->second);
        } else {
            ++result.oov_count;
            result.tokens.push_back(dict.oov_policy == OovPolicy::Copy ? tok : dict.unk_token);
        }
    }
    result.oov_rate = sentence.empty()
                          ? 0.0
                          : static_cast<double>(result.oov_count) / static_cast<double>(sentence.size());
    return result;
}

}  // namespace orderkit::dictxlate

#include "orderkit/nmt/vocab.hpp"

#include <algorithm>
#include <map>

namespace orderkit::nmt {

Vocabulary::Vocabulary() {
    push("<pad>", 0);
    push("<s>", 0);
    push("</s>", 0);
    push("<unk>", 0);
}

void Vocabulary::push(const std::string& token, long long freq) {
    ids_[token] = static_cast<int>(tokens_.size());
    tokens_.push_back(token);
    freqs_.push_back(freq);
}

Vocabulary Vocabulary::build(const std::vector<std::vector<std::string>>& corpus,
                             int min_frequency) {
    if (corpus.empty()) throw NmtError("cannot build vocabulary from an empty corpus");
    std::map<std::string, long long> counts;
    for (const auto& sent : corpus)
        for (const auto& tok : sent) ++counts[tok];

    std::vector<std::pair<std::string, long long>> kept;
    for (const auto& [tok, c] : counts)
        if (c >= min_frequency) kept.push_back({tok, c});
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    Vocabulary v;
    v.min_frequency_ = min_frequency;
    for (const auto& [tok, c] : kept) v.push(tok, c);
    return v;
}

int Vocabulary::id(const std::string& token) const {
    auto it = ids_.find(token);
    return it == ids_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int id) const {
    if (id < 0 || id >= size()) throw NmtError("token id out of range: " + std::to_string(id));
    return tokens_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocabulary::encode(const std::vector<std::string>& tokens) const {
    std::vector<int> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(id(t));
    return out;
}

std::vector<std::string> Vocabulary::decode(const std::vector<int>& ids) const {
    std::vector<std::string> out;
    out.reserve(ids.size());
    for (int i : ids) out.push_back(token(i));
    return out;
}

void Vocabulary::save(const std::string& path) const {
    std::vector<std::string> lines;
    lines.reserve(tokens_.size());
    for (std::size_t i = 0; i < tokens_.size(); ++i)
        lines.push_back(tokens_[i] + "\t" + std::to_string(freqs_[i]));
    write_lines(path, lines);
}

Vocabulary Vocabulary::load(const std::string& path) {
    std::vector<std::string> lines = read_lines(path);
    if (lines.size() < 4) throw NmtError("vocabulary file too short: " + path);
    Vocabulary v;
    v.tokens_.clear();
    v.freqs_.clear();
    v.ids_.clear();
    for (const auto& line : lines) {
        if (line.empty()) continue;
        std::size_t tab = line.find('\t');
        if (tab == std::string::npos) throw NmtError("malformed vocabulary line: " + line);
        v.push(line.substr(0, tab), std::stoll(line.substr(tab + 1)));
    }
    return v;
}

Vocabulary Vocabulary::from_entries(
    const std::vector<std::pair<std::string, long long>>& entries, int min_frequency) {
    if (entries.size() < 4) throw NmtError("vocabulary entry list too short");
    Vocabulary v;
    v.tokens_.clear();
    v.freqs_.clear();
    v.ids_.clear();
    v.min_frequency_ = min_frequency;
    for (const auto& [tok, freq] : entries) v.push(tok, freq);
    return v;
}

std::string Vocabulary::hash() const {
    std::string blob;
    for (const auto& t : tokens_) {
        blob += t;
        blob += '\n';
    }
    return fnv1a64_hex(blob);
}

}  // namespace orderkit::nmt

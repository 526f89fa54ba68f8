#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "orderkit/util.hpp"

namespace orderkit::nmt {

struct NmtError : Error {
    using Error::Error;
};

// Token/id bijection with fixed special ids.
class Vocabulary {
  public:
    static constexpr int kPad = 0;
    static constexpr int kBos = 1;
    static constexpr int kEos = 2;
    static constexpr int kUnk = 3;

    Vocabulary();

    // Builds from a tokenized corpus: tokens occurring >= min_frequency
    // times, ordered by descending frequency then lexicographically.
    static Vocabulary build(const std::vector<std::vector<std::string>>& corpus, int min_frequency);

    int id(const std::string& token) const;  // kUnk for unknown tokens
    const std::string& token(int id) const;
    int size() const { return static_cast<int>(tokens_.size()); }
    int min_frequency() const { return min_frequency_; }
    long long frequency(int id) const { return freqs_[static_cast<std::size_t>(id)]; }

    std::vector<int> encode(const std::vector<std::string>& tokens) const;
    std::vector<std::string> decode(const std::vector<int>& ids) const;

    // token-per-line with frequency, specials included
    void save(const std::string& path) const;
    static Vocabulary load(const std::string& path);
    // rebuild from an ordered (token, frequency) list that includes the
    // four specials in front, e.g. from a checkpoint manifest
    static Vocabulary from_entries(const std::vector<std::pair<std::string, long long>>& entries,
                                   int min_frequency);

    // content hash over the token list, recorded in checkpoints
    std::string hash() const;

    bool operator==(const Vocabulary& o) const { return tokens_ == o.tokens_; }

  private:
    std::vector<std::string> tokens_;
    std::vector<long long> freqs_;
    std::unordered_map<std::string, int> ids_;
    int min_frequency_ = 1;

    void push(const std::string& token, long long freq);
};

}  // namespace orderkit::nmt

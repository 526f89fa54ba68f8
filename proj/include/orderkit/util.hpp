#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace orderkit {

// Library version, recorded in checkpoints, reports and stage manifests.
inline constexpr const char* kVersion = "0.1.0";

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// SplitMix64 step; used for seed derivation so that per-item streams are
// independent of processing order.
std::uint64_t splitmix64(std::uint64_t x);

// Derive a child seed from (seed, index). mix_seed(s, i) != mix_seed(s, j)
// for i != j in practice; collisions are as likely as any 64-bit hash.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index);

// Deterministic RNG wrapper. std::mt19937_64 output is pinned by the
// standard; the distributions here are hand-rolled because the standard
// library ones are implementation-defined and would break cross-toolchain
// reproducibility.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). n must be > 0.
    std::uint64_t next_below(std::uint64_t n) {
        // Rejection sampling to avoid modulo bias.
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    std::uint64_t raw() { return engine_(); }

  private:
    std::mt19937_64 engine_;
};

// FNV-1a over bytes; stable across platforms.
std::uint64_t fnv1a64(const std::string& bytes);
std::string fnv1a64_hex(const std::string& bytes);
// Hash of a file's contents. Throws Error if unreadable.
std::string file_hash_hex(const std::string& path);

// Whitespace tokenization (space, tab, CR); never returns empty tokens.
std::vector<std::string> split_ws(const std::string& line);
std::string join(const std::vector<std::string>& tokens, const std::string& sep = " ");

// Reads a whole file as lines (LF endings, trailing CR stripped).
// Throws Error if the file cannot be opened.
std::vector<std::string> read_lines(const std::string& path);
std::string read_file(const std::string& path);
// Writes lines with LF endings. Throws Error on I/O failure.
void write_lines(const std::string& path, const std::vector<std::string>& lines);
void write_file(const std::string& path, const std::string& content);

// ASCII lowercase; bytes outside A-Z are left untouched, which keeps
// UTF-8 sequences intact.
std::string ascii_lower(const std::string& s);

// Fixed-precision formatting helpers for byte-stable reports.
std::string format_double(double v, int digits);

}  // namespace orderkit

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace netqos {

/// Round to 6 fractional digits, the precision used by all CSV outputs.
/// Generated telemetry is quantized at emission so CSV round-trips are lossless.
inline double quantize6(double x) {
    return std::llround(x * 1e6) / 1e6;
}

/// Serialize a real with up to 6 fractional digits, trailing zeros trimmed,
/// always keeping at least one fractional digit ("40.0", "0.123456").
std::string format_real(double x);

/// Locale-independent parse of a decimal real. Throws std::invalid_argument on junk.
double parse_real(const std::string& s);

/// FNV-1a 64-bit, used for config/content hashing in manifests and model headers.
inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v);

/// Run fn(i) for i in [0, n) on up to `threads` workers. Tasks must write to
/// disjoint slots; results are then independent of scheduling order.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

/// Split [0, n) into fixed-size chunks and run fn(chunk_index, begin, end).
/// Chunk boundaries depend only on n, so reductions that combine per-chunk
/// partials in chunk order are bit-identical for any thread count.
void parallel_chunks(std::size_t n, std::size_t chunk_size, int threads,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

inline bool is_weekend(int day_of_week) {
    return day_of_week >= 5; // 0 = Monday
}

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

std::vector<std::string> split_string(const std::string& s, char sep);
std::string trim(const std::string& s);

} // namespace netqos

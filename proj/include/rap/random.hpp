#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace rap {

/// Philox4x64-10 counter-based generator.
///
/// Each (key, counter) pair maps to four 64-bit words through a keyed
/// bijection, so distinct keys give statistically independent streams and a
/// stream can be positioned anywhere in O(1). The key is (seed, stream).
/// Satisfies UniformRandomBitGenerator.
class Philox4x64 {
  public:
    using result_type = std::uint64_t;
    using Counter = std::array<std::uint64_t, 4>;
    using Key = std::array<std::uint64_t, 2>;

    explicit Philox4x64(std::uint64_t seed, std::uint64_t stream = 0) : key_{seed, stream} {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        if (pos_ == 4) {
            block_ = bijection(counter_, key_);
            increment();
            pos_ = 0;
        }
        return block_[pos_++];
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Applies the ten-round keyed bijection to one counter block.
    static Counter bijection(Counter ctr, Key key) {
        ctr = round(ctr, key);
        for (int i = 1; i < 10; ++i) {
            key[0] += 0x9E3779B97F4A7C15ULL;
            key[1] += 0xBB67AE8584CAA73BULL;
            ctr = round(ctr, key);
        }
        return ctr;
    }

  private:
    __extension__ using u128 = unsigned __int128;

    static Counter round(const Counter& c, const Key& k) {
        const u128 p0 = static_cast<u128>(0xD2E7470EE14C6C93ULL) * c[0];
        const u128 p1 = static_cast<u128>(0xCA5A826395121157ULL) * c[2];
        const auto hi0 = static_cast<std::uint64_t>(p0 >> 64);
        const auto lo0 = static_cast<std::uint64_t>(p0);
        const auto hi1 = static_cast<std::uint64_t>(p1 >> 64);
        const auto lo1 = static_cast<std::uint64_t>(p1);
        return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }

    void increment() {
        for (auto& word : counter_) {
            if (++word != 0) break;
        }
    }

    Key key_;
    Counter counter_{};
    Counter block_{};
    int pos_ = 4;
};

}  // namespace rap

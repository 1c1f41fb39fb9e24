#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace storesim {

// Philox4x64-10 counter-based generator (Salmon et al., SC'11). A (seed, stream)
// pair selects the key; the counter advances one block of four words at a time,
// so any position of any stream can be reached directly.
class Philox4x64 {
public:
    using result_type = std::uint64_t;
    using Block = std::array<std::uint64_t, 4>;
    using Key = std::array<std::uint64_t, 2>;

    Philox4x64() : Philox4x64(0, 0) {}
    Philox4x64(std::uint64_t seed, std::uint64_t stream) : key_{seed, stream} {}

    // The raw bijection: ten rounds of the block cipher on (counter, key).
    static Block encrypt(Block counter, Key key);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        if (used_ == 4) refill();
        return buf_[used_++];
    }

    // Jump to the start of block `block`.
    void seek(std::uint64_t block) {
        ctr_ = {block, 0, 0, 0};
        used_ = 4;
    }

    // Skip n outputs.
    void discard(std::uint64_t n);

private:
    void refill() {
        buf_ = encrypt(ctr_, key_);
        used_ = 0;
        for (auto& w : ctr_)
            if (++w != 0) break;
    }

    Key key_;
    Block ctr_{0, 0, 0, 0};
    Block buf_{};
    int used_ = 4;
};

// Uniform on the open interval (0, 1) from the top 52 bits; with 53 bits the
// largest midpoint rounds up to 1.
inline double to_unit_open(std::uint64_t x) {
    return (static_cast<double>(x >> 12) + 0.5) * 0x1.0p-52;
}

}  // namespace storesim

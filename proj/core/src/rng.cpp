#include "storesim/rng.hpp"

namespace storesim {

namespace {

constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ULL;
constexpr std::uint64_t kMul1 = 0xCA5A826395121157ULL;
constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;

__extension__ using u128 = unsigned __int128;

inline void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi, std::uint64_t& lo) {
    u128 p = static_cast<u128>(a) * b;
    hi = static_cast<std::uint64_t>(p >> 64);
    lo = static_cast<std::uint64_t>(p);
}

}  // namespace

Philox4x64::Block Philox4x64::encrypt(Block ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        std::uint64_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, ctr[0], hi0, lo0);
        mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

void Philox4x64::discard(std::uint64_t n) {
    while (n > 0 && used_ < 4) {
        ++used_;
        --n;
    }
    if (n == 0) return;
    std::uint64_t blocks = n / 4;
    // 256-bit counter add of `blocks`.
    std::uint64_t carry = blocks;
    for (auto& w : ctr_) {
        std::uint64_t before = w;
        w += carry;
        carry = (w < before) ? 1 : 0;
        if (carry == 0) break;
    }
    refill();
    used_ = static_cast<int>(n % 4);
}

}  // namespace storesim

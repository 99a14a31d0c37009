#include "skillr1/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace skillr1
{
namespace
{
constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a,
                    std::uint32_t b,
                    std::uint32_t& hi,
                    std::uint32_t& lo)
{
    std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}
}  // namespace

std::array<std::uint32_t, 4>
Philox::block(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key)
{
    for (int round = 0; round < 10; ++round)
    {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, ctr[0], hi0, lo0);
        mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

Philox::Philox(std::uint64_t key, std::uint64_t stream)
    : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)}
    , ctr_{0, 0, static_cast<std::uint32_t>(stream),
           static_cast<std::uint32_t>(stream >> 32)}
{
}

void Philox::refill()
{
    buf_ = block(ctr_, key_);
    buf_pos_ = 0;
    if (++ctr_[0] == 0)
    {
        ++ctr_[1];
    }
}

Philox::result_type Philox::operator()()
{
    if (buf_pos_ > 2)
    {
        refill();
    }
    std::uint64_t lo = buf_[static_cast<std::size_t>(buf_pos_)];
    std::uint64_t hi = buf_[static_cast<std::size_t>(buf_pos_ + 1)];
    buf_pos_ += 2;
    return (hi << 32) | lo;
}

double Philox::uniform()
{
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

double Philox::normal()
{
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1))
           * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Philox::below(std::uint64_t n)
{
    if (n == 0)
        throw std::invalid_argument("Philox::below: n must be positive");
    // Rejection sampling keeps the result exactly uniform
    std::uint64_t limit = max() - max() % n;
    std::uint64_t x;
    do
    {
        x = (*this)();
    } while (x >= limit);
    return x % n;
}

std::uint64_t mix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts)
{
    std::uint64_t h = 0x5EED5EED5EED5EEDull;
    for (auto p : parts)
    {
        h = mix64(h ^ mix64(p));
    }
    return h;
}

}  // namespace skillr1

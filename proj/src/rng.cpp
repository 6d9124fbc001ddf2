#include "nbsde/rng.hpp"

#include <cmath>
#include <numbers>

namespace nbsde
{
namespace
{
constexpr std::uint64_t golden_gamma = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t mix64(std::uint64_t z)
{
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index)
{
    return mix64(mix64(master) ^ mix64(index * golden_gamma + 0x632BE59BD9B4E019ULL));
}

CounterRng::CounterRng(std::uint64_t key, std::uint64_t counter)
    : key_(key), hashed_key_(mix64(key ^ 0xD1B54A32D192ED03ULL)), counter_(counter)
{
}

std::uint64_t CounterRng::next_u64()
{
    ++counter_;
    return mix64(hashed_key_ + counter_ * golden_gamma);
}

double CounterRng::uniform()
{
    // 53 random bits mapped to (0, 1)
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::normal()
{
    if (has_cached_)
    {
        has_cached_ = false;
        return cached_normal_;
    }
    double const u1 = uniform();
    double const u2 = uniform();
    double const r = std::sqrt(-2.0 * std::log(u1));
    double const theta = 2.0 * std::numbers::pi * u2;
    cached_normal_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
}

CounterRng CounterRng::split(std::uint64_t stream) const
{
    return CounterRng(derive_seed(key_, stream));
}

}  // namespace nbsde

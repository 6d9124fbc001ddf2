#pragma once

#include <cstdint>

namespace nbsde
{
//---------------------------------------------------------------------------//
/*!
 * Counter-based splittable 64-bit generator.
 *
 * Output i of a stream is mix64(hashed_key + (i + 1) * golden), so a stream is
 * fully determined by its key and a position counter. Child streams are
 * derived by hashing (key, stream index); path i of a Monte Carlo batch uses
 * split(i) and is therefore independent of batch size and thread layout.
 */
class CounterRng
{
  public:
    explicit CounterRng(std::uint64_t key, std::uint64_t counter = 0);

    std::uint64_t next_u64();

    //! Uniform double in the open interval (0, 1).
    double uniform();

    //! Standard normal variate (Box-Muller, second value cached).
    double normal();

    //! Independent child stream.
    CounterRng split(std::uint64_t stream) const;

    std::uint64_t key() const { return key_; }
    std::uint64_t counter() const { return counter_; }

  private:
    std::uint64_t key_;
    std::uint64_t hashed_key_;
    std::uint64_t counter_;
    double cached_normal_ = 0;
    bool has_cached_ = false;
};

//! SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t z);

//! Seed of child stream `index` under a master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

}  // namespace nbsde

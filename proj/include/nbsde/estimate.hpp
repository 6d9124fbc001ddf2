#pragma once

#include <cstddef>
#include <span>

#include <json.hpp>

namespace nbsde
{
//---------------------------------------------------------------------------//
/*!
 * Monte Carlo estimate: running mean and centered sum of squares.
 *
 * Merging uses the pairwise (Chan et al.) update, so pooling partial batches
 * reproduces the single-batch mean and variance up to rounding.
 */
class Estimate
{
  public:
    Estimate() = default;

    static Estimate from_samples(std::span<double const> samples);
    //! Deterministic value with zero spread (n counts as one sample).
    static Estimate exact(double value);

    void add(double sample);
    Estimate merged(Estimate const& other) const;

    double mean() const { return mean_; }
    //! Unbiased sample variance (0 when fewer than two samples).
    double variance() const;
    double standard_error() const;
    std::size_t n_samples() const { return n_; }
    double sum_sq_dev() const { return m2_; }

  private:
    std::size_t n_ = 0;
    double mean_ = 0;
    double m2_ = 0;
};

nlohmann::json to_json(Estimate const& e);

//! Sample variance of `samples` together with its standard error.
struct VarianceEstimate
{
    double variance = 0;
    double standard_error = 0;
};
VarianceEstimate estimate_variance(std::span<double const> samples);

}  // namespace nbsde

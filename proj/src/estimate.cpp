#include "nbsde/estimate.hpp"

#include <algorithm>
#include <cmath>

namespace nbsde
{
Estimate Estimate::from_samples(std::span<double const> samples)
{
    Estimate e;
    for (double s : samples)
        e.add(s);
    return e;
}

Estimate Estimate::exact(double value)
{
    Estimate e;
    e.add(value);
    return e;
}

void Estimate::add(double sample)
{
    ++n_;
    double const delta = sample - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (sample - mean_);
}

Estimate Estimate::merged(Estimate const& other) const
{
    if (other.n_ == 0)
        return *this;
    if (n_ == 0)
        return other;
    Estimate result;
    auto const na = static_cast<double>(n_);
    auto const nb = static_cast<double>(other.n_);
    double const n = na + nb;
    double const delta = other.mean_ - mean_;
    result.n_ = n_ + other.n_;
    result.mean_ = (na * mean_ + nb * other.mean_) / n;
    result.m2_ = m2_ + other.m2_ + delta * delta * na * nb / n;
    return result;
}

double Estimate::variance() const
{
    return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0;
}

double Estimate::standard_error() const
{
    return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
}

nlohmann::json to_json(Estimate const& e)
{
    return {{"mean", e.mean()},
            {"standard_error", e.standard_error()},
            {"n_samples", e.n_samples()}};
}

VarianceEstimate estimate_variance(std::span<double const> samples)
{
    VarianceEstimate out;
    auto const n = static_cast<double>(samples.size());
    if (samples.size() < 2)
        return out;
    double mean = 0;
    for (double s : samples)
        mean += s;
    mean /= n;
    double m2 = 0, m4 = 0;
    for (double s : samples)
    {
        double const d2 = (s - mean) * (s - mean);
        m2 += d2;
        m4 += d2 * d2;
    }
    out.variance = m2 / (n - 1);
    double const mu2 = m2 / n;
    double const mu4 = m4 / n;
    // Asymptotic SE of the sample variance: sqrt((mu4 - mu2^2) / n)
    out.standard_error = std::sqrt(std::max(0.0, mu4 - mu2 * mu2) / n);
    return out;
}

}  // namespace nbsde

#pragma once

#include <functional>
#include <utility>
#include <vector>

// Weighted sample clouds: time-occupation measures of a path or ensemble,
// with moment, mass, histogram, CDF and Kolmogorov-Smirnov queries.

namespace selfdiff {

class EmpiricalMeasure {
  public:
    void reserve(std::size_t n) { samples_.reserve(n); }

    void add(double value, double weight = 1.0);
    void merge(const EmpiricalMeasure& other);

    std::size_t size() const { return samples_.size(); }
    double total_weight() const {
        ensure_sorted();
        return total_;
    }

    double mean() const;
    double variance() const;
    // Normalized mass of {|v - center| <= radius}.
    double mass_within(double center, double radius) const;
    // Normalized empirical CDF, right-continuous.
    double cdf(double x) const;
    // Normalized masses for the bins [edges[i], edges[i+1]).
    std::vector<double> histogram(const std::vector<double>& edges) const;
    // sup_x |F_n(x) - F(x)| over the sample points.
    double ks_distance(const std::function<double(double)>& cdf) const;

    const std::vector<std::pair<double, double>>& samples() const { return samples_; }

  private:
    void ensure_sorted() const;
    mutable std::vector<std::pair<double, double>> samples_;  // (value, weight)
    mutable bool sorted_ = true;
    mutable double total_ = 0.0;
};

// Standard normal CDF helper for the Gaussian-limit comparisons.
double normal_cdf(double x, double mean = 0.0, double variance = 1.0);

}  // namespace selfdiff

#include "selfdiff/empirical.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace selfdiff {

void EmpiricalMeasure::add(double value, double weight) {
    if (weight < 0.0) throw std::invalid_argument("EmpiricalMeasure: negative weight");
    if (weight == 0.0) return;
    samples_.emplace_back(value, weight);
    total_ += weight;
    sorted_ = false;
}

void EmpiricalMeasure::merge(const EmpiricalMeasure& other) {
    samples_.insert(samples_.end(), other.samples_.begin(), other.samples_.end());
    total_ += other.total_;
    sorted_ = false;
}

void EmpiricalMeasure::ensure_sorted() const {
    if (!sorted_) {
        std::sort(samples_.begin(), samples_.end());
        // Re-sum the total in sorted order so normalizations do not depend
        // on the order partial measures were merged in.
        double t = 0.0;
        for (const auto& [v, w] : samples_) t += w;
        total_ = t;
        sorted_ = true;
    }
}

double EmpiricalMeasure::mean() const {
    if (total_ <= 0.0) throw std::runtime_error("EmpiricalMeasure: empty measure");
    ensure_sorted();  // summation order independent of how partials merged
    double s = 0.0;
    for (const auto& [v, w] : samples_) s += v * w;
    return s / total_;
}

double EmpiricalMeasure::variance() const {
    const double m = mean();
    ensure_sorted();
    double s = 0.0;
    for (const auto& [v, w] : samples_) s += w * (v - m) * (v - m);
    return s / total_;
}

double EmpiricalMeasure::mass_within(double center, double radius) const {
    if (total_ <= 0.0) throw std::runtime_error("EmpiricalMeasure: empty measure");
    ensure_sorted();
    double s = 0.0;
    for (const auto& [v, w] : samples_)
        if (std::fabs(v - center) <= radius) s += w;
    return s / total_;
}

double EmpiricalMeasure::cdf(double x) const {
    if (total_ <= 0.0) throw std::runtime_error("EmpiricalMeasure: empty measure");
    ensure_sorted();
    double s = 0.0;
    for (const auto& [v, w] : samples_) {
        if (v > x) break;
        s += w;
    }
    return s / total_;
}

std::vector<double> EmpiricalMeasure::histogram(const std::vector<double>& edges) const {
    if (edges.size() < 2) throw std::invalid_argument("histogram needs at least two edges");
    ensure_sorted();
    std::vector<double> mass(edges.size() - 1, 0.0);
    for (const auto& [v, w] : samples_) {
        const auto it = std::upper_bound(edges.begin(), edges.end(), v);
        if (it == edges.begin() || it == edges.end()) continue;
        mass[static_cast<std::size_t>(it - edges.begin()) - 1] += w;
    }
    if (total_ > 0.0)
        for (double& m : mass) m /= total_;
    return mass;
}

double EmpiricalMeasure::ks_distance(const std::function<double(double)>& cdf_fn) const {
    if (total_ <= 0.0) throw std::runtime_error("EmpiricalMeasure: empty measure");
    ensure_sorted();
    double acc = 0.0, d = 0.0;
    for (const auto& [v, w] : samples_) {
        const double f = cdf_fn(v);
        d = std::max(d, std::fabs(acc / total_ - f));  // left limit
        acc += w;
        d = std::max(d, std::fabs(acc / total_ - f));
    }
    return d;
}

double normal_cdf(double x, double mean, double variance) {
    return 0.5 * std::erfc(-(x - mean) / std::sqrt(2.0 * variance));
}

}  // namespace selfdiff

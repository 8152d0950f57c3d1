#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "lastream/error.hpp"
#include "lastream/math.hpp"

namespace lastream {

enum class Aggregation { median, mean, mean_of_means };

/// Independent copies of one estimator (different seeds) combined at query
/// time. mean_of_means averages `groups` blocks of `per_group` copies each and
/// then averages the block means.
template <class E>
class Ensemble {
public:
    Ensemble(std::size_t copies, const std::function<E(std::size_t)>& make, Aggregation agg,
             std::size_t groups = 1)
        : agg_(agg), groups_(groups) {
        detail::require(copies >= 1, "ensemble needs at least one copy");
        detail::require(groups >= 1 && copies % groups == 0, "copies must split evenly into groups");
        members_.reserve(copies);
        for (std::size_t j = 0; j < copies; ++j) members_.push_back(make(j));
    }

    void update(std::uint64_t item, double weight = 1.0) {
        for (auto& m : members_) m.update(item, weight);
    }

    double estimate() const {
        std::vector<double> est;
        est.reserve(members_.size());
        for (const auto& m : members_) est.push_back(m.estimate());
        switch (agg_) {
            case Aggregation::median: return median(std::move(est));
            case Aggregation::mean: return mean(est);
            case Aggregation::mean_of_means: {
                const std::size_t per = est.size() / groups_;
                std::vector<double> block_means;
                for (std::size_t g = 0; g < groups_; ++g) {
                    double s = 0.0;
                    for (std::size_t k = 0; k < per; ++k) s += est[g * per + k];
                    block_means.push_back(s / static_cast<double>(per));
                }
                return mean(block_means);
            }
        }
        return 0.0;
    }

    std::size_t counters() const {
        std::size_t c = 0;
        for (const auto& m : members_) c += m.counters();
        return c;
    }

    std::size_t size() const noexcept { return members_.size(); }
    const E& operator[](std::size_t j) const { return members_.at(j); }
    E& operator[](std::size_t j) { return members_.at(j); }

private:
    std::vector<E> members_;
    Aggregation agg_;
    std::size_t groups_;
};

}  // namespace lastream

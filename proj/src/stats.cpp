#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include "dynprec/bench.hpp"

namespace dynprec::bench {

double median(std::span<const double> samples) {
    if (samples.empty()) throw std::invalid_argument("median of an empty sample");
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t mid = sorted.size() / 2;
    return sorted.size() % 2 == 1 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
}

double mean(std::span<const double> samples) {
    if (samples.empty()) throw std::invalid_argument("mean of an empty sample");
    return std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(samples.size());
}

double sample_stddev(std::span<const double> samples) {
    if (samples.size() < 2) throw std::invalid_argument("stddev needs at least two samples");
    const double m = mean(samples);
    double ss = 0.0;
    for (double s : samples) ss += (s - m) * (s - m);
    return std::sqrt(ss / static_cast<double>(samples.size() - 1));
}

double determinism_score(std::span<const double> samples) {
    if (samples.size() < 2) throw std::invalid_argument("determinism score needs at least two samples");
    for (double s : samples) {
        if (!(s > 0.0)) throw std::invalid_argument("determinism score needs positive samples");
    }
    return std::max(0.0, 1.0 - sample_stddev(samples) / mean(samples));
}

std::size_t count_outliers(std::span<const double> samples) {
    if (samples.size() < 2) return 0;
    const double m = mean(samples);
    const double sd = sample_stddev(samples);
    if (sd == 0.0) return 0;
    return static_cast<std::size_t>(
        std::count_if(samples.begin(), samples.end(), [&](double s) { return std::abs(s - m) > 3.0 * sd; }));
}

namespace {

VariantStats variant_stats(const std::vector<const BenchRecord*>& records) {
    VariantStats stats;
    stats.count = records.size();
    if (records.empty()) return stats;

    std::vector<double> latencies;
    std::vector<double> errors;
    for (const BenchRecord* r : records) {
        latencies.push_back(r->latency_ns);
        if (r->abs_error) errors.push_back(*r->abs_error);
    }
    stats.median_ns = median(latencies);
    stats.mean_ns = mean(latencies);
    stats.determinism = latencies.size() >= 2 ? determinism_score(latencies) : 1.0;
    stats.outliers = count_outliers(latencies);
    if (!errors.empty()) stats.mean_abs_error = mean(errors);
    return stats;
}

}  // namespace

Summary summarize(std::span<const BenchRecord> records) {
    struct Pairing {
        std::vector<const BenchRecord*> fast;
        std::vector<const BenchRecord*> precise;
        std::map<std::uint64_t, std::pair<const BenchRecord*, const BenchRecord*>> by_input;
    };
    std::map<Category, Pairing> grouped;
    std::vector<Category> order;

    for (const BenchRecord& r : records) {
        auto [it, inserted] = grouped.try_emplace(r.op);
        if (inserted) order.push_back(r.op);
        Pairing& p = it->second;
        auto& slot = p.by_input[r.input_id];
        if (r.variant == Variant::fast) {
            p.fast.push_back(&r);
            slot.first = &r;
        } else {
            p.precise.push_back(&r);
            slot.second = &r;
        }
    }

    Summary summary;
    for (Category c : order) {
        const Pairing& p = grouped.at(c);
        CategorySummary cs;
        cs.op = c;
        cs.fast = variant_stats(p.fast);
        cs.precise = variant_stats(p.precise);

        std::vector<double> ratios;
        for (const auto& [id, pair] : p.by_input) {
            if (pair.first != nullptr && pair.second != nullptr) {
                ratios.push_back(pair.second->latency_ns / pair.first->latency_ns);
            }
        }
        if (!ratios.empty()) cs.mean_speedup = mean(ratios);
        summary.categories.push_back(cs);
    }
    return summary;
}

}  // namespace dynprec::bench

#pragma once

// =============================================================================
// Paired fast/precise benchmark harness
// =============================================================================
//
// Every category draws its inputs from an LcgStream seeded with the suite seed,
// so both variants see bit-identical inputs and the accuracy columns depend
// only on the seed. Latencies come from std::chrono::steady_clock; each timed
// region repeats the operation until it spans at least 100 clock ticks.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "dynprec/engine.hpp"
#include "dynprec/matq.hpp"

namespace dynprec::bench {

// x' = 1664525 x + 1013904223 (mod 2^32). next() advances, then returns the
// new state.
class LcgStream {
public:
    static constexpr std::uint32_t kMultiplier = 1664525u;
    static constexpr std::uint32_t kIncrement = 1013904223u;
    static constexpr std::uint32_t kDefaultSeed = 42u;

    explicit LcgStream(std::uint32_t seed = kDefaultSeed) noexcept : state_(seed) {}

    std::uint32_t next() noexcept {
        state_ = kMultiplier * state_ + kIncrement;
        return state_;
    }

    // lo + (hi - lo) * next() / 2^32, so the result lies in [lo, hi).
    double uniform(double lo, double hi) noexcept {
        return lo + (hi - lo) * (static_cast<double>(next()) / 4294967296.0);
    }

    std::uint32_t state() const noexcept { return state_; }

private:
    std::uint32_t state_;
};

enum class Category : std::uint8_t { sin, cos, mul, matmul, mode_switch };
enum class Variant : std::uint8_t { fast, precise };

inline constexpr Category kAllCategories[] = {Category::sin, Category::cos, Category::mul, Category::matmul,
                                              Category::mode_switch};

std::string_view to_string(Category c) noexcept;
std::string_view to_string(Variant v) noexcept;
std::optional<Category> parse_category(std::string_view name) noexcept;

struct BenchRecord {
    Category op = Category::mul;
    Variant variant = Variant::fast;
    std::uint64_t input_id = 0;
    double latency_ns = 0.0;  // per operation
    std::uint64_t repeats = 0;
    std::optional<double> abs_error;  // absent for mode_switch
    std::optional<std::size_t> dim;   // matmul only
    std::uint64_t input_digest = 0;   // FNV-1a over the input bits
};

struct SuiteConfig {
    std::vector<Category> categories{std::begin(kAllCategories), std::end(kAllCategories)};
    std::size_t samples = 50;
    std::uint32_t seed = LcgStream::kDefaultSeed;
    std::vector<std::size_t> dims{4, 8, 16};
    std::size_t tile = 32;
    engine::MulVariant mul_variant = engine::MulVariant::floor;
};

// Throws std::invalid_argument describing the first problem found.
void validate(const SuiteConfig& config);

// =============================================================================
// Statistics
// =============================================================================

double median(std::span<const double> samples);
double mean(std::span<const double> samples);
double sample_stddev(std::span<const double> samples);

// max(0, 1 - stddev/mean) with the n-1 stddev. Identical samples score 1.0.
// Throws std::invalid_argument for fewer than two samples or any sample <= 0.
double determinism_score(std::span<const double> samples);

// Samples farther than 3 standard deviations from the mean. Never removed.
std::size_t count_outliers(std::span<const double> samples);

struct VariantStats {
    std::size_t count = 0;
    double median_ns = 0.0;
    double mean_ns = 0.0;
    double determinism = 0.0;
    std::size_t outliers = 0;
    std::optional<double> mean_abs_error;
};

struct CategorySummary {
    Category op = Category::mul;
    VariantStats fast;
    VariantStats precise;
    double mean_speedup = 0.0;  // mean over pairs of precise / fast
};

struct MulQuantization {
    std::size_t pairs = 0;
    matq::KernelError floor;
    matq::KernelError rounded;
};

struct MaeGrowthRow {
    std::size_t n = 0;
    matq::ErrorSummary error;
};

struct Summary {
    std::vector<CategorySummary> categories;
    std::optional<MulQuantization> mul_quantization;
    std::vector<MaeGrowthRow> mae_growth;
    double clock_resolution_ns = 0.0;
};

// Builds the per-category summary from paired records.
Summary summarize(std::span<const BenchRecord> records);

struct SuiteResult {
    std::vector<BenchRecord> records;
    Summary summary;
};

SuiteResult run_suite(const SuiteConfig& config);

// =============================================================================
// Crossover sweep
// =============================================================================

struct CrossoverCell {
    std::size_t n = 0;
    std::size_t tile = 0;
    double fast_median_ns = 0.0;     // matmul_tiled
    double precise_median_ns = 0.0;  // matmul_float
    double speedup = 0.0;            // precise / fast
    bool sub_tile = false;           // n <= tile: a single block covers the matrix
};

struct CrossoverReport {
    std::size_t repetitions = 0;
    std::vector<CrossoverCell> cells;
    // Per tile, the smallest n with speedup >= 1, if any.
    std::vector<std::pair<std::size_t, std::optional<std::size_t>>> crossover;
};

CrossoverReport crossover_sweep(std::span<const std::size_t> dims, std::span<const std::size_t> tiles,
                                std::size_t repetitions = 20, std::uint32_t seed = LcgStream::kDefaultSeed);

// =============================================================================
// Output
// =============================================================================

enum class Format : std::uint8_t { csv, json, both };

inline constexpr std::string_view kCsvHeader = "op,variant,input_id,latency_ns,repeats,abs_error,dim";

void write_csv(std::ostream& out, std::span<const BenchRecord> records);
nlohmann::json to_json(const Summary& summary, const SuiteConfig& config);
nlohmann::json to_json(const CrossoverReport& report);
void write_crossover_csv(std::ostream& out, const CrossoverReport& report);

struct EmittedFiles {
    std::vector<std::filesystem::path> paths;
};

// Writes records.csv and/or summary.json under out_dir, creating it if
// needed. Throws std::invalid_argument on empty records and
// std::runtime_error naming the path on I/O failure.
EmittedFiles emit(std::span<const BenchRecord> records, const Summary& summary, const SuiteConfig& config,
                  Format format, const std::filesystem::path& out_dir);

EmittedFiles emit_crossover(const CrossoverReport& report, Format format, const std::filesystem::path& out_dir);

}  // namespace dynprec::bench

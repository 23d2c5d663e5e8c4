#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "dynprec/bench.hpp"
#include "oracles.hpp"

namespace dynprec::bench {
namespace {

SuiteConfig small_config() {
    SuiteConfig c;
    c.samples = 6;
    c.dims = {4, 8};
    return c;
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) lines.push_back(line);
    return lines;
}

std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("dynprec_test_" + name);
    std::filesystem::remove_all(dir);
    return dir;
}

// =============================================================================
// LCG
// =============================================================================

TEST(BenchLcg, MatchesReferenceRecurrence) {
    LcgStream rng;
    std::uint32_t state = 42;
    for (int i = 0; i < 1000; ++i) {
        state = oracle::lcg_step(state);
        ASSERT_EQ(rng.next(), state);
    }
    EXPECT_EQ(LcgStream(42).next(), 1083814273u);
}

TEST(BenchLcg, UniformStaysInHalfOpenRange) {
    LcgStream rng(7);
    for (int i = 0; i < 100000; ++i) {
        const double v = rng.uniform(-3.0, 5.0);
        ASSERT_GE(v, -3.0);
        ASSERT_LT(v, 5.0);
    }
    LcgStream a(1);
    LcgStream b(1);
    const std::uint32_t raw = b.next();
    EXPECT_EQ(a.uniform(0.0, 1.0), raw / 4294967296.0);
}

// =============================================================================
// Statistics
// =============================================================================

TEST(BenchStats, DeterminismScoreExamples) {
    const std::vector<double> equal(10, 123.0);
    EXPECT_EQ(determinism_score(equal), 1.0);

    const std::vector<double> two{100.0, 200.0};
    EXPECT_NEAR(determinism_score(two), 1.0 - (50.0 * std::sqrt(2.0)) / 150.0, 1e-12);
    EXPECT_NEAR(determinism_score(two), 0.5285954792, 1e-9);

    const std::vector<double> wild{1.0, 1.0, 1.0, 1000.0};
    EXPECT_EQ(determinism_score(wild), 0.0);
}

TEST(BenchStats, DeterminismScoreRejectsBadInput) {
    EXPECT_THROW(determinism_score(std::vector<double>{5.0}), std::invalid_argument);
    EXPECT_THROW(determinism_score(std::vector<double>{}), std::invalid_argument);
    EXPECT_THROW(determinism_score(std::vector<double>{1.0, 0.0}), std::invalid_argument);
    EXPECT_THROW(determinism_score(std::vector<double>{1.0, -2.0}), std::invalid_argument);
}

TEST(BenchStats, MedianMeanStddev) {
    EXPECT_EQ(median(std::vector<double>{3.0, 1.0, 2.0}), 2.0);
    EXPECT_EQ(median(std::vector<double>{4.0, 1.0, 2.0, 3.0}), 2.5);
    EXPECT_EQ(mean(std::vector<double>{1.0, 2.0, 6.0}), 3.0);
    EXPECT_NEAR(sample_stddev(std::vector<double>{2, 4, 4, 4, 5, 5, 7, 9}), std::sqrt(32.0 / 7.0), 1e-12);
    EXPECT_THROW(median(std::vector<double>{}), std::invalid_argument);
}

TEST(BenchStats, OutliersCountedBeyondThreeSigma) {
    std::vector<double> s(30, 10.0);
    EXPECT_EQ(count_outliers(s), 0u);
    s.push_back(1000.0);
    EXPECT_EQ(count_outliers(s), 1u);
    EXPECT_EQ(s.size(), 31u);
}

TEST(BenchStats, SummarizeSpeedupIsMeanOfPairRatios) {
    std::vector<BenchRecord> records;
    const double fast[] = {10.0, 20.0, 40.0};
    const double precise[] = {20.0, 20.0, 20.0};
    for (std::uint64_t i = 0; i < 3; ++i) {
        records.push_back(BenchRecord{Category::mul, Variant::fast, i, fast[i], 1, 0.0, std::nullopt, i});
        records.push_back(BenchRecord{Category::mul, Variant::precise, i, precise[i], 1, 0.0, std::nullopt, i});
    }
    const Summary s = summarize(records);
    ASSERT_EQ(s.categories.size(), 1u);
    // (2 + 1 + 0.5) / 3, not the ratio of means.
    EXPECT_NEAR(s.categories[0].mean_speedup, 3.5 / 3.0, 1e-12);
    EXPECT_EQ(s.categories[0].fast.median_ns, 20.0);
    EXPECT_EQ(s.categories[0].precise.determinism, 1.0);
}

// =============================================================================
// Suite runs
// =============================================================================

TEST(BenchSuite, RejectsInvalidConfig) {
    SuiteConfig c = small_config();
    c.samples = 1;
    EXPECT_THROW(run_suite(c), std::invalid_argument);
    c = small_config();
    c.categories.clear();
    EXPECT_THROW(run_suite(c), std::invalid_argument);
    c = small_config();
    c.dims = {0};
    EXPECT_THROW(run_suite(c), std::invalid_argument);
    c = small_config();
    c.tile = 0;
    EXPECT_THROW(run_suite(c), std::invalid_argument);
}

TEST(BenchSuite, ParseCategory) {
    EXPECT_EQ(parse_category("sin"), Category::sin);
    EXPECT_EQ(parse_category("switch"), Category::mode_switch);
    EXPECT_EQ(parse_category("tan"), std::nullopt);
}

TEST(BenchSuite, RecordsArePairedAndWellFormed) {
    const SuiteResult r = run_suite(small_config());
    std::map<std::pair<Category, std::uint64_t>, std::vector<const BenchRecord*>> pairs;
    for (const BenchRecord& rec : r.records) {
        EXPECT_GT(rec.latency_ns, 0.0);
        EXPECT_GE(rec.repeats, 1u);
        EXPECT_EQ(rec.abs_error.has_value(), rec.op != Category::mode_switch);
        EXPECT_EQ(rec.dim.has_value(), rec.op == Category::matmul);
        pairs[{rec.op, rec.input_id}].push_back(&rec);
    }
    EXPECT_EQ(r.records.size(), 5u * 6u * 2u);
    for (const auto& [key, recs] : pairs) {
        ASSERT_EQ(recs.size(), 2u);
        EXPECT_NE(recs[0]->variant, recs[1]->variant);
        EXPECT_EQ(recs[0]->input_digest, recs[1]->input_digest);
        EXPECT_EQ(recs[0]->dim, recs[1]->dim);
    }
    ASSERT_EQ(r.summary.categories.size(), 5u);
    for (const CategorySummary& c : r.summary.categories) {
        EXPECT_EQ(c.fast.count, 6u);
        EXPECT_EQ(c.precise.count, 6u);
        EXPECT_GT(c.mean_speedup, 0.0);
    }
    EXPECT_GT(r.summary.clock_resolution_ns, 0.0);
}

TEST(BenchSuite, PreciseErrorsBelowFastErrors) {
    const SuiteResult r = run_suite(small_config());
    for (const CategorySummary& c : r.summary.categories) {
        if (c.op == Category::mode_switch) {
            EXPECT_FALSE(c.fast.mean_abs_error.has_value());
            continue;
        }
        ASSERT_TRUE(c.fast.mean_abs_error && c.precise.mean_abs_error);
        EXPECT_LE(*c.precise.mean_abs_error, *c.fast.mean_abs_error) << to_string(c.op);
    }
}

TEST(BenchSuite, MatmulDimsCycleThroughConfig) {
    SuiteConfig c = small_config();
    c.categories = {Category::matmul};
    c.dims = {2, 3, 5};
    const SuiteResult r = run_suite(c);
    for (const BenchRecord& rec : r.records) EXPECT_EQ(*rec.dim, c.dims[rec.input_id % 3]);
    EXPECT_EQ(r.summary.mae_growth.size(), 4u);
    for (const MaeGrowthRow& row : r.summary.mae_growth) {
        EXPECT_LE(row.error.tiled.mean_abs, row.error.naive.mean_abs);
    }
}

TEST(BenchSuite, SameSeedReproducesInputsAndAccuracy) {
    SuiteConfig c = small_config();
    c.seed = 42;
    const SuiteResult a = run_suite(c);
    const SuiteResult b = run_suite(c);
    ASSERT_EQ(a.records.size(), b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        EXPECT_EQ(a.records[i].op, b.records[i].op);
        EXPECT_EQ(a.records[i].variant, b.records[i].variant);
        EXPECT_EQ(a.records[i].input_id, b.records[i].input_id);
        EXPECT_EQ(a.records[i].input_digest, b.records[i].input_digest);
        EXPECT_EQ(a.records[i].abs_error, b.records[i].abs_error);
    }
}

TEST(BenchSuite, DifferentSeedChangesInputs) {
    SuiteConfig c = small_config();
    c.categories = {Category::mul};
    const SuiteResult a = run_suite(c);
    c.seed = 43;
    const SuiteResult b = run_suite(c);
    ASSERT_EQ(a.records.size(), b.records.size());
    EXPECT_NE(a.records[0].input_digest, b.records[0].input_digest);
}

TEST(BenchSuite, MulQuantizationCoversEverySample) {
    SuiteConfig c;
    c.categories = {Category::mul};
    c.samples = 1000;
    const SuiteResult r = run_suite(c);
    ASSERT_TRUE(r.summary.mul_quantization.has_value());
    const MulQuantization& mq = *r.summary.mul_quantization;
    EXPECT_EQ(mq.pairs, 1000u);
    EXPECT_LE(mq.floor.max_abs, std::ldexp(1.0, -16));
    EXPECT_LE(mq.rounded.max_abs, std::ldexp(1.0, -17));
    EXPECT_LE(mq.rounded.mean_abs, mq.floor.mean_abs);
}

// =============================================================================
// Output
// =============================================================================

TEST(BenchEmit, CsvHasHeaderAndOneLinePerRecord) {
    const SuiteResult r = run_suite(small_config());
    std::ostringstream out;
    write_csv(out, r.records);
    const auto lines = lines_of(out.str());
    ASSERT_EQ(lines.size(), r.records.size() + 1);
    EXPECT_EQ(lines[0], "op,variant,input_id,latency_ns,repeats,abs_error,dim");
    for (std::size_t i = 1; i < lines.size(); ++i) {
        EXPECT_EQ(std::count(lines[i].begin(), lines[i].end(), ','), 6) << lines[i];
    }
}

TEST(BenchEmit, CsvLeavesAbsentFieldsEmpty) {
    const std::vector<BenchRecord> recs{
        BenchRecord{Category::mode_switch, Variant::fast, 3, 12.5, 100, std::nullopt, std::nullopt, 0},
        BenchRecord{Category::matmul, Variant::precise, 4, 1.0, 7, 0.25, 16, 0},
    };
    std::ostringstream out;
    write_csv(out, recs);
    const auto lines = lines_of(out.str());
    ASSERT_EQ(lines.size(), 3u);
    EXPECT_EQ(lines[1], "switch,fast,3,12.5000,100,,");
    EXPECT_EQ(lines[2], "matmul,precise,4,1.0000,7,0.25,16");
}

TEST(BenchEmit, FilesRoundTrip) {
    const SuiteConfig config = small_config();
    const SuiteResult r = run_suite(config);
    const auto dir = scratch_dir("emit");
    const EmittedFiles files = emit(r.records, r.summary, config, Format::both, dir);
    ASSERT_EQ(files.paths.size(), 2u);

    std::ifstream csv(dir / "records.csv");
    std::size_t lines = 0;
    for (std::string line; std::getline(csv, line);) ++lines;
    EXPECT_EQ(lines, r.records.size() + 1);

    std::ifstream js(dir / "summary.json");
    const nlohmann::json j = nlohmann::json::parse(js);
    EXPECT_EQ(j.at("seed"), 42);
    EXPECT_EQ(j.at("config").at("samples"), 6);
    EXPECT_TRUE(j.at("timestamp").is_string());
    for (const char* cat : {"sin", "cos", "mul", "matmul", "switch"}) {
        const auto& c = j.at("categories").at(cat);
        EXPECT_TRUE(c.at("mean_speedup").is_number()) << cat;
        EXPECT_TRUE(c.at("fast").at("determinism_score").is_number()) << cat;
    }
    EXPECT_EQ(j.at("mae_growth").size(), 4u);
    std::filesystem::remove_all(dir);
}

TEST(BenchEmit, FormatSelectsFiles) {
    const SuiteResult r = run_suite(small_config());
    const auto dir = scratch_dir("format");
    EXPECT_EQ(emit(r.records, r.summary, small_config(), Format::csv, dir).paths.size(), 1u);
    EXPECT_TRUE(std::filesystem::exists(dir / "records.csv"));
    EXPECT_FALSE(std::filesystem::exists(dir / "summary.json"));
    std::filesystem::remove_all(dir);
}

TEST(BenchEmit, ErrorsAreReported) {
    const SuiteResult r = run_suite(small_config());
    EXPECT_THROW(emit({}, r.summary, small_config(), Format::both, scratch_dir("empty")), std::invalid_argument);

    const auto blocker = scratch_dir("blocker");
    std::ofstream(blocker) << "not a directory";
    try {
        emit(r.records, r.summary, small_config(), Format::both, blocker / "sub");
        FAIL() << "expected runtime_error";
    } catch (const std::runtime_error& e) {
        EXPECT_NE(std::string(e.what()).find("blocker"), std::string::npos) << e.what();
    }
    std::filesystem::remove_all(blocker);
}

// =============================================================================
// Crossover sweep
// =============================================================================

TEST(BenchCrossover, GridIsCompleteAndMarksSubTile) {
    const std::vector<std::size_t> dims{4, 8, 16, 40};
    const std::vector<std::size_t> tiles{8, 32};
    const CrossoverReport rep = crossover_sweep(dims, tiles, 20);
    ASSERT_EQ(rep.cells.size(), dims.size() * tiles.size());
    EXPECT_EQ(rep.repetitions, 20u);
    for (const CrossoverCell& c : rep.cells) {
        EXPECT_GT(c.fast_median_ns, 0.0);
        EXPECT_GT(c.precise_median_ns, 0.0);
        EXPECT_NEAR(c.speedup, c.precise_median_ns / c.fast_median_ns, 1e-12);
        EXPECT_EQ(c.sub_tile, c.n <= c.tile);
    }
    ASSERT_EQ(rep.crossover.size(), tiles.size());

    const nlohmann::json j = to_json(rep);
    EXPECT_TRUE(j.is_object());
    std::ostringstream out;
    write_crossover_csv(out, rep);
    EXPECT_EQ(lines_of(out.str()).size(), rep.cells.size() + 1);
}

TEST(BenchCrossover, SingleElementMatrixIsValid) {
    const std::vector<std::size_t> dims{1};
    const std::vector<std::size_t> tiles{8};
    const CrossoverReport rep = crossover_sweep(dims, tiles, 20);
    ASSERT_EQ(rep.cells.size(), 1u);
    EXPECT_TRUE(rep.cells[0].sub_tile);
}

TEST(BenchCrossover, RejectsInvalidArguments) {
    const std::vector<std::size_t> ok{8};
    const std::vector<std::size_t> zero{0};
    const std::vector<std::size_t> none;
    EXPECT_THROW(crossover_sweep(ok, ok, 19), std::invalid_argument);
    EXPECT_THROW(crossover_sweep(zero, ok), std::invalid_argument);
    EXPECT_THROW(crossover_sweep(ok, zero), std::invalid_argument);
    EXPECT_THROW(crossover_sweep(none, ok), std::invalid_argument);
}

}  // namespace
}  // namespace dynprec::bench

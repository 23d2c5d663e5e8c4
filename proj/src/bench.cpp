#include "dynprec/bench.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "dynprec/cordic.hpp"
#include "dynprec/qcore.hpp"

namespace dynprec::bench {

namespace {

using Clock = std::chrono::steady_clock;

constexpr double kTimerFloorTicks = 100.0;

// Opaque sinks so the optimizer cannot hoist or drop timed work.
template <typename T>
inline void keep(const T& value) {
    asm volatile("" : : "r,m"(value) : "memory");
}

template <typename T>
inline void clobber(T& value) {
    asm volatile("" : "+r,m"(value) : : "memory");
}

double elapsed_ns(Clock::time_point from, Clock::time_point to) {
    return std::chrono::duration<double, std::nano>(to - from).count();
}

double measure_clock_resolution_ns() {
    double best = std::numeric_limits<double>::infinity();
    for (int trial = 0; trial < 256; ++trial) {
        const auto t0 = Clock::now();
        auto t1 = Clock::now();
        while (t1 == t0) t1 = Clock::now();
        best = std::min(best, elapsed_ns(t0, t1));
    }
    return best;
}

struct Timing {
    double per_op_ns = 0.0;
    std::uint64_t repeats = 0;
};

// Repeats `body` until one timed region spans at least min_region_ns.
template <typename Body>
Timing time_region(Body&& body, double min_region_ns) {
    std::uint64_t repeats = 1;
    for (;;) {
        const auto t0 = Clock::now();
        for (std::uint64_t r = 0; r < repeats; ++r) body();
        const double elapsed = elapsed_ns(t0, Clock::now());
        if (elapsed >= min_region_ns && elapsed > 0.0) {
            return Timing{elapsed / static_cast<double>(repeats), repeats};
        }
        const double wanted = elapsed > 0.0 ? 1.25 * min_region_ns / elapsed : 16.0;
        repeats = static_cast<std::uint64_t>(static_cast<double>(repeats) * std::clamp(wanted, 2.0, 1024.0));
    }
}

class Fnv1a {
public:
    void add(double v) noexcept { add(std::bit_cast<std::uint64_t>(v)); }
    void add(std::uint64_t v) noexcept {
        for (int i = 0; i < 8; ++i) {
            hash_ ^= (v >> (8 * i)) & 0xFFu;
            hash_ *= 0x100000001b3ull;
        }
    }
    std::uint64_t value() const noexcept { return hash_; }

private:
    std::uint64_t hash_ = 0xcbf29ce484222325ull;
};

BenchRecord make_record(Category op, Variant v, std::uint64_t id, Timing t, std::uint64_t digest) {
    BenchRecord r;
    r.op = op;
    r.variant = v;
    r.input_id = id;
    r.latency_ns = t.per_op_ns;
    r.repeats = t.repeats;
    r.input_digest = digest;
    return r;
}

std::vector<double> random_entries(LcgStream& rng, std::size_t count, double lo, double hi) {
    std::vector<double> v(count);
    for (double& x : v) x = rng.uniform(lo, hi);
    return v;
}

matq::QMatrix to_qmatrix(std::size_t rows, std::size_t cols, const std::vector<double>& values) {
    std::vector<q::QWord> data;
    data.reserve(values.size());
    for (double v : values) data.push_back(q::from_real(v));
    return matq::QMatrix(rows, cols, std::move(data));
}

matq::FMatrix to_fmatrix(std::size_t rows, std::size_t cols, const std::vector<double>& values) {
    return matq::FMatrix(rows, cols, std::vector<float>(values.begin(), values.end()));
}

// Error of a wide product after the shift, exact in 128-bit arithmetic.
double mul_error(q::QWord a, q::QWord b, q::QWord result) {
    __int128 diff = static_cast<__int128>(result.raw) * 65536 - static_cast<__int128>(q::wide_mul(a, b).raw);
    if (diff < 0) diff = -diff;
    return static_cast<double>(diff) / 4294967296.0;
}

// =============================================================================
// Categories
// =============================================================================

void run_trig(Category op, const SuiteConfig& config, double min_region, std::vector<BenchRecord>& out) {
    LcgStream rng(config.seed);
    const bool want_sin = op == Category::sin;
    for (std::size_t i = 0; i < config.samples; ++i) {
        const double x = rng.uniform(-std::numbers::pi, std::numbers::pi);
        Fnv1a digest;
        digest.add(x);

        const double exact = want_sin ? std::sin(x) : std::cos(x);

        cordic::AngleQ angle{q::from_real(x)};
        const cordic::SinCos sc = cordic::sincos(angle);
        const Timing fast = time_region(
            [&] {
                clobber(angle.value.raw);
                const cordic::SinCos r = cordic::sincos(angle);
                keep(r.sin.raw);
                keep(r.cos.raw);
            },
            min_region);
        BenchRecord rf = make_record(op, Variant::fast, i, fast, digest.value());
        rf.abs_error = std::abs(q::to_real(want_sin ? sc.sin : sc.cos) - exact);
        out.push_back(rf);

        float xf = static_cast<float>(x);
        const float pf = want_sin ? std::sin(xf) : std::cos(xf);
        const Timing precise = time_region(
            [&] {
                clobber(xf);
                keep(want_sin ? std::sin(xf) : std::cos(xf));
            },
            min_region);
        BenchRecord rp = make_record(op, Variant::precise, i, precise, digest.value());
        rp.abs_error = std::abs(static_cast<double>(pf) - exact);
        out.push_back(rp);
    }
}

MulQuantization run_mul(const SuiteConfig& config, double min_region, std::vector<BenchRecord>& out) {
    LcgStream rng(config.seed);
    const bool rounded = config.mul_variant == engine::MulVariant::rounded;
    MulQuantization quant;
    double floor_total = 0.0;
    double rounded_total = 0.0;

    for (std::size_t i = 0; i < config.samples; ++i) {
        const double a = rng.uniform(-100.0, 100.0);
        const double b = rng.uniform(-100.0, 100.0);
        Fnv1a digest;
        digest.add(a);
        digest.add(b);
        const double exact = a * b;

        q::QWord qa = q::from_real(a);
        q::QWord qb = q::from_real(b);
        const q::QWord floor_result = q::mul(qa, qb);
        const q::QWord rounded_result = q::mul_rounded(qa, qb);

        const double fe = mul_error(qa, qb, floor_result);
        const double re = mul_error(qa, qb, rounded_result);
        floor_total += fe;
        rounded_total += re;
        quant.floor.max_abs = std::max(quant.floor.max_abs, fe);
        quant.rounded.max_abs = std::max(quant.rounded.max_abs, re);

        Timing fast;
        if (rounded) {
            fast = time_region(
                [&] {
                    clobber(qa.raw);
                    clobber(qb.raw);
                    keep(q::mul_rounded(qa, qb).raw);
                },
                min_region);
        } else {
            fast = time_region(
                [&] {
                    clobber(qa.raw);
                    clobber(qb.raw);
                    keep(q::mul(qa, qb).raw);
                },
                min_region);
        }
        BenchRecord rf = make_record(Category::mul, Variant::fast, i, fast, digest.value());
        rf.abs_error = std::abs(q::to_real(rounded ? rounded_result : floor_result) - exact);
        out.push_back(rf);

        float af = static_cast<float>(a);
        float bf = static_cast<float>(b);
        const Timing precise = time_region(
            [&] {
                clobber(af);
                clobber(bf);
                keep(af * bf);
            },
            min_region);
        BenchRecord rp = make_record(Category::mul, Variant::precise, i, precise, digest.value());
        rp.abs_error = std::abs(static_cast<double>(af * bf) - exact);
        out.push_back(rp);
    }

    quant.pairs = config.samples;
    quant.floor.mean_abs = floor_total / static_cast<double>(config.samples);
    quant.rounded.mean_abs = rounded_total / static_cast<double>(config.samples);
    return quant;
}

double mean_abs_diff(std::span<const double> exact, const auto& computed) {
    double total = 0.0;
    for (std::size_t i = 0; i < exact.size(); ++i) total += std::abs(static_cast<double>(computed[i]) - exact[i]);
    return total / static_cast<double>(exact.size());
}

void run_matmul(const SuiteConfig& config, double min_region, std::vector<BenchRecord>& out) {
    LcgStream rng(config.seed);
    const matq::TileConfig tile{config.tile};
    for (std::size_t i = 0; i < config.samples; ++i) {
        const std::size_t n = config.dims[i % config.dims.size()];
        const std::vector<double> a = random_entries(rng, n * n, -1.0, 1.0);
        const std::vector<double> b = random_entries(rng, n * n, -1.0, 1.0);
        Fnv1a digest;
        for (double v : a) digest.add(v);
        for (double v : b) digest.add(v);

        std::vector<double> exact(n * n, 0.0);
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < n; ++c)
                for (std::size_t k = 0; k < n; ++k) exact[r * n + c] += a[r * n + k] * b[k * n + c];

        const matq::QMatrix qa = to_qmatrix(n, n, a);
        const matq::QMatrix qb = to_qmatrix(n, n, b);
        const matq::QMatrix qc = matq::matmul_tiled(qa, qb, tile);
        const Timing fast = time_region([&] { keep(matq::matmul_tiled(qa, qb, tile).data().data()); }, min_region);
        std::vector<double> fast_values;
        for (q::QWord w : qc.data()) fast_values.push_back(q::to_real(w));
        BenchRecord rf = make_record(Category::matmul, Variant::fast, i, fast, digest.value());
        rf.abs_error = mean_abs_diff(exact, fast_values);
        rf.dim = n;
        out.push_back(rf);

        const matq::FMatrix fa = to_fmatrix(n, n, a);
        const matq::FMatrix fb = to_fmatrix(n, n, b);
        const matq::FMatrix fc = matq::matmul_float(fa, fb);
        const Timing precise = time_region([&] { keep(matq::matmul_float(fa, fb).data().data()); }, min_region);
        BenchRecord rp = make_record(Category::matmul, Variant::precise, i, precise, digest.value());
        rp.abs_error = mean_abs_diff(exact, fc.data());
        rp.dim = n;
        out.push_back(rp);
    }
}

void run_switch(const SuiteConfig& config, double min_region, std::vector<BenchRecord>& out) {
    engine::Engine eng(engine::EngineOptions{64, config.mul_variant});
    eng.init(engine::Mode::fast);
    engine::Mode next = engine::Mode::precise;

    const engine::DispatchTable* const fast_table = &engine::table_for(engine::Mode::fast, config.mul_variant);
    const engine::DispatchTable* const precise_table = &engine::table_for(engine::Mode::precise);
    const engine::DispatchTable* binding = fast_table;
    double x = 1.5;

    for (std::size_t i = 0; i < config.samples; ++i) {
        Fnv1a digest;
        digest.add(static_cast<std::uint64_t>(i));

        const Timing fast = time_region(
            [&] {
                eng.set_mode(next);
                next = next == engine::Mode::fast ? engine::Mode::precise : engine::Mode::fast;
            },
            min_region);
        out.push_back(make_record(Category::mode_switch, Variant::fast, i, fast, digest.value()));

        // Baseline: rebind a table pointer and dispatch one call through it.
        const Timing precise = time_region(
            [&] {
                binding = binding == fast_table ? precise_table : fast_table;
                clobber(binding);
                clobber(x);
                engine::ExecContext ctx;
                keep(binding->mul(x, x, ctx));
            },
            min_region);
        out.push_back(make_record(Category::mode_switch, Variant::precise, i, precise, digest.value()));
    }
    eng.stop();
}

std::vector<MaeGrowthRow> mae_growth(const SuiteConfig& config) {
    std::vector<MaeGrowthRow> rows;
    for (std::size_t n : {8u, 16u, 32u, 64u}) {
        LcgStream rng(config.seed);
        const matq::QMatrix a = to_qmatrix(n, n, random_entries(rng, n * n, -1.0, 1.0));
        const matq::QMatrix b = to_qmatrix(n, n, random_entries(rng, n * n, -1.0, 1.0));
        rows.push_back(MaeGrowthRow{n, matq::mae_report(a, b, matq::TileConfig{config.tile})});
    }
    return rows;
}

}  // namespace

std::string_view to_string(Category c) noexcept {
    switch (c) {
        case Category::sin: return "sin";
        case Category::cos: return "cos";
        case Category::mul: return "mul";
        case Category::matmul: return "matmul";
        case Category::mode_switch: return "switch";
    }
    return "unknown";
}

std::string_view to_string(Variant v) noexcept {
    return v == Variant::fast ? "fast" : "precise";
}

std::optional<Category> parse_category(std::string_view name) noexcept {
    for (Category c : kAllCategories) {
        if (to_string(c) == name) return c;
    }
    return std::nullopt;
}

void validate(const SuiteConfig& config) {
    if (config.categories.empty()) throw std::invalid_argument("no categories selected");
    if (config.samples < 2) throw std::invalid_argument("samples must be >= 2");
    if (config.dims.empty()) throw std::invalid_argument("dims must be nonempty");
    for (std::size_t d : config.dims) {
        if (d == 0) throw std::invalid_argument("dims must be >= 1");
    }
    if (config.tile == 0) throw std::invalid_argument("tile must be >= 1");
}

SuiteResult run_suite(const SuiteConfig& config) {
    validate(config);

    SuiteResult result;
    const double resolution = measure_clock_resolution_ns();
    const double min_region = kTimerFloorTicks * resolution;
    std::optional<MulQuantization> quant;
    bool matmul_ran = false;

    for (Category c : config.categories) {
        switch (c) {
            case Category::sin:
            case Category::cos: run_trig(c, config, min_region, result.records); break;
            case Category::mul: quant = run_mul(config, min_region, result.records); break;
            case Category::matmul:
                run_matmul(config, min_region, result.records);
                matmul_ran = true;
                break;
            case Category::mode_switch: run_switch(config, min_region, result.records); break;
        }
    }

    result.summary = summarize(result.records);
    result.summary.clock_resolution_ns = resolution;
    result.summary.mul_quantization = quant;
    if (matmul_ran) result.summary.mae_growth = mae_growth(config);
    return result;
}

CrossoverReport crossover_sweep(std::span<const std::size_t> dims, std::span<const std::size_t> tiles,
                                std::size_t repetitions, std::uint32_t seed) {
    if (dims.empty()) throw std::invalid_argument("crossover sweep needs at least one dimension");
    if (tiles.empty()) throw std::invalid_argument("crossover sweep needs at least one tile size");
    if (std::find(dims.begin(), dims.end(), 0u) != dims.end()) throw std::invalid_argument("dims must be >= 1");
    if (std::find(tiles.begin(), tiles.end(), 0u) != tiles.end()) throw std::invalid_argument("tiles must be >= 1");
    if (repetitions < 20) throw std::invalid_argument("crossover sweep needs >= 20 repetitions");

    const double min_region = kTimerFloorTicks * measure_clock_resolution_ns();

    std::vector<std::size_t> sorted_dims(dims.begin(), dims.end());
    std::sort(sorted_dims.begin(), sorted_dims.end());
    sorted_dims.erase(std::unique(sorted_dims.begin(), sorted_dims.end()), sorted_dims.end());

    CrossoverReport report;
    report.repetitions = repetitions;
    for (std::size_t tile : tiles) {
        std::optional<std::size_t> crossover;
        for (std::size_t n : sorted_dims) {
            LcgStream rng(seed);
            const std::vector<double> a = random_entries(rng, n * n, -1.0, 1.0);
            const std::vector<double> b = random_entries(rng, n * n, -1.0, 1.0);
            const matq::QMatrix qa = to_qmatrix(n, n, a);
            const matq::QMatrix qb = to_qmatrix(n, n, b);
            const matq::FMatrix fa = to_fmatrix(n, n, a);
            const matq::FMatrix fb = to_fmatrix(n, n, b);

            std::vector<double> fast_samples;
            std::vector<double> precise_samples;
            for (std::size_t rep = 0; rep < repetitions; ++rep) {
                fast_samples.push_back(
                    time_region([&] { keep(matq::matmul_tiled(qa, qb, {tile}).data().data()); }, min_region)
                        .per_op_ns);
                precise_samples.push_back(
                    time_region([&] { keep(matq::matmul_float(fa, fb).data().data()); }, min_region).per_op_ns);
            }

            CrossoverCell cell;
            cell.n = n;
            cell.tile = tile;
            cell.fast_median_ns = median(fast_samples);
            cell.precise_median_ns = median(precise_samples);
            cell.speedup = cell.precise_median_ns / cell.fast_median_ns;
            cell.sub_tile = n <= tile;
            if (!crossover && cell.speedup >= 1.0) crossover = n;
            report.cells.push_back(cell);
        }
        report.crossover.emplace_back(tile, crossover);
    }
    return report;
}

}  // namespace dynprec::bench

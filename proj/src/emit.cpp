#include <cerrno>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <system_error>

#include "dynprec/bench.hpp"

namespace dynprec::bench {

namespace {

std::string format_double(const char* fmt, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, v);
    return buf;
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

nlohmann::json to_json(const VariantStats& s) {
    nlohmann::json j{
        {"count", s.count},
        {"median_latency_ns", s.median_ns},
        {"mean_latency_ns", s.mean_ns},
        {"determinism_score", s.determinism},
        {"outliers", s.outliers},
    };
    if (s.mean_abs_error) j["mean_abs_error"] = *s.mean_abs_error;
    return j;
}

nlohmann::json to_json(const matq::KernelError& e) {
    return nlohmann::json{{"mean_abs", e.mean_abs}, {"max_abs", e.max_abs}};
}

void prepare_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());
}

template <typename Writer>
std::filesystem::path write_file(const std::filesystem::path& path, Writer&& writer) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing: " + std::strerror(errno));
    writer(out);
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + path.string());
    return path;
}

}  // namespace

void write_csv(std::ostream& out, std::span<const BenchRecord> records) {
    out << kCsvHeader << '\n';
    for (const BenchRecord& r : records) {
        out << to_string(r.op) << ',' << to_string(r.variant) << ',' << r.input_id << ','
            << format_double("%.4f", r.latency_ns) << ',' << r.repeats << ',';
        if (r.abs_error) out << format_double("%.17g", *r.abs_error);
        out << ',';
        if (r.dim) out << *r.dim;
        out << '\n';
    }
}

nlohmann::json to_json(const Summary& summary, const SuiteConfig& config) {
    nlohmann::json categories = nlohmann::json::object();
    for (const CategorySummary& c : summary.categories) {
        categories[std::string(to_string(c.op))] = nlohmann::json{
            {"fast", to_json(c.fast)},
            {"precise", to_json(c.precise)},
            {"mean_speedup", c.mean_speedup},
        };
    }

    nlohmann::json config_json{
        {"samples", config.samples},
        {"seed", config.seed},
        {"dims", config.dims},
        {"tile", config.tile},
        {"mul_variant", config.mul_variant == engine::MulVariant::rounded ? "rounded" : "floor"},
    };
    nlohmann::json names = nlohmann::json::array();
    for (Category c : config.categories) names.push_back(std::string(to_string(c)));
    config_json["categories"] = names;

    nlohmann::json j{
        {"config", config_json},
        {"seed", config.seed},
        {"timestamp", utc_timestamp()},
        {"clock_resolution_ns", summary.clock_resolution_ns},
        {"categories", categories},
    };
    if (summary.mul_quantization) {
        j["mul_quantization"] = nlohmann::json{
            {"pairs", summary.mul_quantization->pairs},
            {"floor", to_json(summary.mul_quantization->floor)},
            {"rounded", to_json(summary.mul_quantization->rounded)},
        };
    }
    if (!summary.mae_growth.empty()) {
        nlohmann::json rows = nlohmann::json::array();
        for (const MaeGrowthRow& row : summary.mae_growth) {
            rows.push_back(nlohmann::json{
                {"n", row.n}, {"tiled", to_json(row.error.tiled)}, {"naive", to_json(row.error.naive)}});
        }
        j["mae_growth"] = rows;
    }
    return j;
}

nlohmann::json to_json(const CrossoverReport& report) {
    nlohmann::json cells = nlohmann::json::array();
    for (const CrossoverCell& c : report.cells) {
        cells.push_back(nlohmann::json{
            {"n", c.n},
            {"tile", c.tile},
            {"fast_median_ns", c.fast_median_ns},
            {"precise_median_ns", c.precise_median_ns},
            {"speedup", c.speedup},
            {"sub_tile", c.sub_tile},
        });
    }
    nlohmann::json crossover = nlohmann::json::array();
    for (const auto& [tile, n] : report.crossover) {
        const nlohmann::json at = n ? nlohmann::json(*n) : nlohmann::json(nullptr);
        crossover.push_back(nlohmann::json{{"tile", tile}, {"crossover_n", at}});
    }
    return nlohmann::json{{"repetitions", report.repetitions}, {"cells", cells}, {"crossover", crossover}};
}

void write_crossover_csv(std::ostream& out, const CrossoverReport& report) {
    out << "n,tile,fast_median_ns,precise_median_ns,speedup,sub_tile\n";
    for (const CrossoverCell& c : report.cells) {
        out << c.n << ',' << c.tile << ',' << format_double("%.4f", c.fast_median_ns) << ','
            << format_double("%.4f", c.precise_median_ns) << ',' << format_double("%.6f", c.speedup) << ','
            << (c.sub_tile ? "true" : "false") << '\n';
    }
}

EmittedFiles emit(std::span<const BenchRecord> records, const Summary& summary, const SuiteConfig& config,
                  Format format, const std::filesystem::path& out_dir) {
    if (records.empty()) throw std::invalid_argument("no records to emit");
    prepare_dir(out_dir);
    EmittedFiles files;
    if (format != Format::json) {
        files.paths.push_back(write_file(out_dir / "records.csv", [&](std::ostream& o) { write_csv(o, records); }));
    }
    if (format != Format::csv) {
        files.paths.push_back(write_file(out_dir / "summary.json",
                                         [&](std::ostream& o) { o << to_json(summary, config).dump(2) << '\n'; }));
    }
    return files;
}

EmittedFiles emit_crossover(const CrossoverReport& report, Format format, const std::filesystem::path& out_dir) {
    prepare_dir(out_dir);
    EmittedFiles files;
    if (format != Format::json) {
        files.paths.push_back(
            write_file(out_dir / "crossover.csv", [&](std::ostream& o) { write_crossover_csv(o, report); }));
    }
    if (format != Format::csv) {
        files.paths.push_back(
            write_file(out_dir / "crossover.json", [&](std::ostream& o) { o << to_json(report).dump(2) << '\n'; }));
    }
    return files;
}

}  // namespace dynprec::bench

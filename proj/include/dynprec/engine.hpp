#pragma once

// =============================================================================
// Runtime precision engine
// =============================================================================
//
// Six operations (mul, add, sub, sin, cos, matmul) are bound through a
// DispatchTable to either the Q16.16 fast path or the single-precision
// precise path. One worker thread drains a bounded job queue. set_mode runs a
// two-phase barrier:
//
//   1. suspension: the worker finishes its current job and parks;
//   2. transition: the controller rebinds the whole table and releases it.
//
// The worker binds the table once per job, so no job ever observes two modes.
// Values cross the API as doubles; the fast path converts at entry and exit.

#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <future>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <variant>
#include <vector>

#include "dynprec/qcore.hpp"

namespace dynprec::engine {

enum class Mode : std::uint8_t { fast, precise };
enum class Op : std::uint8_t { mul, add, sub, sin, cos, matmul };
enum class MulVariant : std::uint8_t { floor, rounded };

inline constexpr std::size_t kOpCount = 6;

std::string_view to_string(Mode m) noexcept;
std::string_view to_string(Op op) noexcept;

struct RealMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // row-major

    friend bool operator==(const RealMatrix&, const RealMatrix&) = default;
};

struct ScalarArgs {
    double a = 0.0;
    double b = 0.0;  // ignored by sin/cos
};

struct MatrixArgs {
    RealMatrix a;
    RealMatrix b;
};

using Operands = std::variant<ScalarArgs, MatrixArgs>;
using Value = std::variant<double, RealMatrix>;

struct Job {
    Op op = Op::mul;
    Operands operands;
    std::uint64_t id = 0;
};

// Bit set of the modes whose kernels ran during one job.
struct Witness {
    std::uint8_t modes = 0;

    void stamp(Mode m) noexcept { modes |= static_cast<std::uint8_t>(1u << static_cast<unsigned>(m)); }
    bool uniform(Mode m) const noexcept { return modes == (1u << static_cast<unsigned>(m)); }
};

struct ExecContext {
    Witness witness;
    q::Flags flags;
};

using BinaryFn = double (*)(double, double, ExecContext&);
using UnaryFn = double (*)(double, ExecContext&);
using MatmulFn = RealMatrix (*)(const RealMatrix&, const RealMatrix&, ExecContext&);

struct DispatchTable {
    BinaryFn mul;
    BinaryFn add;
    BinaryFn sub;
    UnaryFn sin;
    UnaryFn cos;
    MatmulFn matmul;
};

static_assert(sizeof(DispatchTable) == kOpCount * sizeof(void*));

const DispatchTable& table_for(Mode mode, MulVariant fast_mul = MulVariant::floor) noexcept;

struct JobResult {
    std::uint64_t id = 0;
    Value value = 0.0;
    Mode mode = Mode::fast;      // binding in force when the job started
    q::Flags flags;
    Witness witness;
    std::uint64_t exec_seq = 0;  // position in the worker's execution order
    std::int64_t exec_ns = 0;
    std::string error;           // empty on success

    bool ok() const noexcept { return error.empty(); }
};

// Runs one job against a table outside the worker. The worker uses the same
// path.
JobResult execute(const Job& job, const DispatchTable& table, Mode mode);

struct Transition {
    std::uint64_t at_seq = 0;  // first exec_seq executed under `to`
    Mode from = Mode::fast;
    Mode to = Mode::fast;

    friend bool operator==(const Transition&, const Transition&) = default;
};

struct EngineOptions {
    std::size_t queue_depth = 64;
    MulVariant fast_mul = MulVariant::floor;
};

class Engine {
public:
    explicit Engine(EngineOptions options = {});
    ~Engine();

    Engine(const Engine&) = delete;
    Engine& operator=(const Engine&) = delete;

    // Starts the worker with the table bound to `mode`. Throws
    // std::logic_error if already initialized.
    void init(Mode mode);

    // Blocks until the transition is complete. Setting the current mode
    // returns immediately. Concurrent callers are serialized.
    void set_mode(Mode mode);

    Mode mode() const;

    // Blocks while the queue is full. Throws std::logic_error before init or
    // after stop.
    std::future<JobResult> submit(Job job);

    // Drains the queue and joins the worker. Idempotent.
    void stop();

    const DispatchTable& ctx() const;
    std::vector<Transition> transition_history() const;
    std::uint64_t executed_count() const;
    bool busy() const;  // a job is executing right now

private:
    struct Pending {
        Job job;
        std::promise<JobResult> promise;
    };

    void worker_loop();

    EngineOptions options_;

    mutable std::mutex mu_;
    std::condition_variable work_cv_;
    std::condition_variable space_cv_;
    std::condition_variable parked_cv_;
    std::mutex control_mu_;

    std::deque<Pending> queue_;
    const DispatchTable* table_ = nullptr;
    Mode mode_ = Mode::fast;
    bool running_ = false;
    bool stopping_ = false;
    bool suspend_requested_ = false;
    bool parked_ = false;
    bool executing_ = false;
    std::uint64_t next_seq_ = 0;
    std::uint64_t executed_ = 0;
    std::vector<Transition> history_;

    std::thread worker_;
};

// Static storage owned by the engine: one word per dispatch slot plus the
// CORDIC arctangent table.
struct Footprint {
    std::size_t slot_count = 0;
    std::size_t word_bytes = 0;
    std::size_t table_bytes = 0;
    std::size_t cordic_table_bytes = 0;
    std::size_t total_bytes = 0;
    std::size_t word32_total_bytes = 0;  // same accounting at 4-byte words
};

Footprint static_footprint(std::size_t word_bytes = sizeof(void*)) noexcept;

}  // namespace dynprec::engine

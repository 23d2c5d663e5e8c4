#include "dynprec/engine.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "dynprec/cordic.hpp"
#include "dynprec/matq.hpp"

namespace dynprec::engine {

namespace {

// =============================================================================
// Fast path (Q16.16)
// =============================================================================

double fast_mul_floor(double a, double b, ExecContext& ctx) {
    ctx.witness.stamp(Mode::fast);
    const q::QWord qa = q::from_real(a, ctx.flags);
    const q::QWord qb = q::from_real(b, ctx.flags);
    if (!q::detail::fits32(q::wide_mul(qa, qb).raw >> q::kFracBits)) ctx.flags.raise(q::Flag::overflow);
    return q::to_real(q::mul(qa, qb));
}

double fast_mul_rounded(double a, double b, ExecContext& ctx) {
    ctx.witness.stamp(Mode::fast);
    const q::QWord qa = q::from_real(a, ctx.flags);
    const q::QWord qb = q::from_real(b, ctx.flags);
    if (!q::detail::fits32((q::wide_mul(qa, qb).raw + (q::kOne >> 1)) >> q::kFracBits)) {
        ctx.flags.raise(q::Flag::overflow);
    }
    return q::to_real(q::mul_rounded(qa, qb));
}

double fast_add(double a, double b, ExecContext& ctx) {
    ctx.witness.stamp(Mode::fast);
    return q::to_real(q::add(q::from_real(a, ctx.flags), q::from_real(b, ctx.flags), ctx.flags));
}

double fast_sub(double a, double b, ExecContext& ctx) {
    ctx.witness.stamp(Mode::fast);
    return q::to_real(q::sub(q::from_real(a, ctx.flags), q::from_real(b, ctx.flags), ctx.flags));
}

double fast_sin(double theta, ExecContext& ctx) {
    ctx.witness.stamp(Mode::fast);
    return q::to_real(cordic::sincos(cordic::AngleQ{q::from_real(theta, ctx.flags)}).sin);
}

double fast_cos(double theta, ExecContext& ctx) {
    ctx.witness.stamp(Mode::fast);
    return q::to_real(cordic::sincos(cordic::AngleQ{q::from_real(theta, ctx.flags)}).cos);
}

matq::QMatrix to_qmatrix(const RealMatrix& m, q::Flags& flags) {
    std::vector<q::QWord> data;
    data.reserve(m.data.size());
    for (double v : m.data) data.push_back(q::from_real(v, flags));
    return matq::QMatrix(m.rows, m.cols, std::move(data));
}

RealMatrix fast_matmul(const RealMatrix& a, const RealMatrix& b, ExecContext& ctx) {
    ctx.witness.stamp(Mode::fast);
    matq::MatmulStats stats;
    const matq::QMatrix c = matq::matmul_tiled(to_qmatrix(a, ctx.flags), to_qmatrix(b, ctx.flags), {}, &stats);
    if (stats.overflow) ctx.flags.raise(q::Flag::overflow);
    RealMatrix out{c.rows(), c.cols(), {}};
    out.data.reserve(c.data().size());
    for (q::QWord w : c.data()) out.data.push_back(q::to_real(w));
    return out;
}

// =============================================================================
// Precise path (single precision)
// =============================================================================

double precise_mul(double a, double b, ExecContext& ctx) {
    ctx.witness.stamp(Mode::precise);
    return static_cast<double>(static_cast<float>(a) * static_cast<float>(b));
}

double precise_add(double a, double b, ExecContext& ctx) {
    ctx.witness.stamp(Mode::precise);
    return static_cast<double>(static_cast<float>(a) + static_cast<float>(b));
}

double precise_sub(double a, double b, ExecContext& ctx) {
    ctx.witness.stamp(Mode::precise);
    return static_cast<double>(static_cast<float>(a) - static_cast<float>(b));
}

double precise_sin(double theta, ExecContext& ctx) {
    ctx.witness.stamp(Mode::precise);
    return static_cast<double>(std::sin(static_cast<float>(theta)));
}

double precise_cos(double theta, ExecContext& ctx) {
    ctx.witness.stamp(Mode::precise);
    return static_cast<double>(std::cos(static_cast<float>(theta)));
}

matq::FMatrix to_fmatrix(const RealMatrix& m) {
    std::vector<float> data(m.data.begin(), m.data.end());
    return matq::FMatrix(m.rows, m.cols, std::move(data));
}

RealMatrix precise_matmul(const RealMatrix& a, const RealMatrix& b, ExecContext& ctx) {
    ctx.witness.stamp(Mode::precise);
    const matq::FMatrix c = matq::matmul_float(to_fmatrix(a), to_fmatrix(b));
    return RealMatrix{c.rows(), c.cols(), std::vector<double>(c.data().begin(), c.data().end())};
}

constexpr DispatchTable kFastFloor{fast_mul_floor, fast_add, fast_sub, fast_sin, fast_cos, fast_matmul};
constexpr DispatchTable kFastRounded{fast_mul_rounded, fast_add, fast_sub, fast_sin, fast_cos, fast_matmul};
constexpr DispatchTable kPrecise{precise_mul, precise_add, precise_sub, precise_sin, precise_cos, precise_matmul};

// =============================================================================
// Job validation and execution
// =============================================================================

std::string validate_matrix(const RealMatrix& m, const char* name) {
    if (m.rows == 0 || m.cols == 0) return std::string(name) + ": empty matrix";
    if (m.data.size() != m.rows * m.cols) {
        return std::string(name) + ": data length " + std::to_string(m.data.size()) + " does not match " +
               std::to_string(m.rows) + "x" + std::to_string(m.cols);
    }
    return {};
}

std::string validate(const Job& job) {
    const bool wants_matrix = job.op == Op::matmul;
    if (wants_matrix != std::holds_alternative<MatrixArgs>(job.operands)) {
        return std::string(to_string(job.op)) + ": expected " + (wants_matrix ? "matrix" : "scalar") + " operands";
    }
    if (!wants_matrix) return {};
    const auto& args = std::get<MatrixArgs>(job.operands);
    if (auto e = validate_matrix(args.a, "matmul lhs"); !e.empty()) return e;
    if (auto e = validate_matrix(args.b, "matmul rhs"); !e.empty()) return e;
    if (args.a.cols != args.b.rows) {
        return "matmul: dimension mismatch " + std::to_string(args.a.rows) + "x" + std::to_string(args.a.cols) +
               " times " + std::to_string(args.b.rows) + "x" + std::to_string(args.b.cols);
    }
    return {};
}

}  // namespace

std::string_view to_string(Mode m) noexcept {
    return m == Mode::fast ? "fast" : "precise";
}

std::string_view to_string(Op op) noexcept {
    switch (op) {
        case Op::mul: return "mul";
        case Op::add: return "add";
        case Op::sub: return "sub";
        case Op::sin: return "sin";
        case Op::cos: return "cos";
        case Op::matmul: return "matmul";
    }
    return "unknown";
}

const DispatchTable& table_for(Mode mode, MulVariant fast_mul) noexcept {
    if (mode == Mode::precise) return kPrecise;
    return fast_mul == MulVariant::rounded ? kFastRounded : kFastFloor;
}

namespace {

Value dispatch(const Job& job, const DispatchTable& table, ExecContext& ctx) {
    if (job.op == Op::matmul) {
        const auto& args = std::get<MatrixArgs>(job.operands);
        return table.matmul(args.a, args.b, ctx);
    }
    const auto& args = std::get<ScalarArgs>(job.operands);
    switch (job.op) {
        case Op::mul: return table.mul(args.a, args.b, ctx);
        case Op::add: return table.add(args.a, args.b, ctx);
        case Op::sub: return table.sub(args.a, args.b, ctx);
        case Op::sin: return table.sin(args.a, ctx);
        case Op::cos: return table.cos(args.a, ctx);
        case Op::matmul: break;
    }
    throw std::logic_error("unreachable op");
}

}  // namespace

JobResult execute(const Job& job, const DispatchTable& table, Mode mode) {
    JobResult result;
    result.id = job.id;
    result.mode = mode;

    const auto start = std::chrono::steady_clock::now();
    result.error = validate(job);
    if (result.ok()) {
        try {
            ExecContext ctx;
            result.value = dispatch(job, table, ctx);
            result.flags = ctx.flags;
            result.witness = ctx.witness;
        } catch (const std::exception& e) {
            result.error = std::string(to_string(job.op)) + ": " + e.what();
        }
    }
    result.exec_ns =
        std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - start).count();
    return result;
}

// =============================================================================
// Engine
// =============================================================================

Engine::Engine(EngineOptions options) : options_(options) {
    if (options_.queue_depth == 0) throw std::invalid_argument("queue depth must be >= 1");
}

Engine::~Engine() {
    stop();
}

void Engine::init(Mode mode) {
    std::lock_guard control(control_mu_);
    std::lock_guard lock(mu_);
    if (running_ || stopping_) throw std::logic_error("engine already initialized");
    table_ = &table_for(mode, options_.fast_mul);
    mode_ = mode;
    running_ = true;
    worker_ = std::thread([this] { worker_loop(); });
}

void Engine::set_mode(Mode mode) {
    std::lock_guard control(control_mu_);
    std::unique_lock lock(mu_);
    if (!running_) throw std::logic_error("set_mode on an engine that is not running");
    if (mode == mode_) return;

    // Suspension phase.
    suspend_requested_ = true;
    work_cv_.notify_all();
    parked_cv_.wait(lock, [this] { return parked_; });

    // Transition phase: the worker is parked, rebind every slot at once.
    history_.push_back(Transition{next_seq_, mode_, mode});
    table_ = &table_for(mode, options_.fast_mul);
    mode_ = mode;
    suspend_requested_ = false;
    work_cv_.notify_all();
}

Mode Engine::mode() const {
    std::lock_guard lock(mu_);
    return mode_;
}

std::future<JobResult> Engine::submit(Job job) {
    std::unique_lock lock(mu_);
    if (!running_) throw std::logic_error("submit on an engine that is not running");
    space_cv_.wait(lock, [this] { return queue_.size() < options_.queue_depth || !running_; });
    if (!running_) throw std::logic_error("engine stopped while waiting for queue space");
    Pending& pending = queue_.emplace_back(Pending{std::move(job), {}});
    std::future<JobResult> future = pending.promise.get_future();
    work_cv_.notify_all();
    return future;
}

void Engine::stop() {
    std::lock_guard control(control_mu_);
    {
        std::lock_guard lock(mu_);
        if (!running_) return;
        running_ = false;
        stopping_ = true;
    }
    work_cv_.notify_all();
    space_cv_.notify_all();
    if (worker_.joinable()) worker_.join();
}

const DispatchTable& Engine::ctx() const {
    std::lock_guard lock(mu_);
    if (table_ == nullptr) throw std::logic_error("engine not initialized");
    return *table_;
}

std::vector<Transition> Engine::transition_history() const {
    std::lock_guard lock(mu_);
    return history_;
}

std::uint64_t Engine::executed_count() const {
    std::lock_guard lock(mu_);
    return executed_;
}

bool Engine::busy() const {
    std::lock_guard lock(mu_);
    return executing_;
}

void Engine::worker_loop() {
    std::unique_lock lock(mu_);
    for (;;) {
        work_cv_.wait(lock, [this] { return suspend_requested_ || !queue_.empty() || stopping_; });

        if (suspend_requested_) {
            parked_ = true;
            parked_cv_.notify_all();
            work_cv_.wait(lock, [this] { return !suspend_requested_; });
            parked_ = false;
            continue;
        }
        if (queue_.empty()) break;  // stopping and drained

        Pending pending = std::move(queue_.front());
        queue_.pop_front();
        const DispatchTable& table = *table_;
        const Mode mode = mode_;
        const std::uint64_t seq = next_seq_++;
        executing_ = true;
        space_cv_.notify_one();
        lock.unlock();

        JobResult result = execute(pending.job, table, mode);
        result.exec_seq = seq;
        pending.promise.set_value(std::move(result));

        lock.lock();
        executing_ = false;
        ++executed_;
    }
}

Footprint static_footprint(std::size_t word_bytes) noexcept {
    Footprint f;
    f.slot_count = kOpCount;
    f.word_bytes = word_bytes;
    f.table_bytes = kOpCount * word_bytes;
    f.cordic_table_bytes = cordic::kAtanTableBytes;
    f.total_bytes = f.table_bytes + f.cordic_table_bytes;
    f.word32_total_bytes = kOpCount * 4 + cordic::kAtanTableBytes;
    return f;
}

}  // namespace dynprec::engine

#include "dynprec/matq.hpp"

#include <algorithm>
#include <cassert>
#include <cstdlib>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace dynprec::matq {

namespace {

void check_shape(std::size_t rows, std::size_t cols) {
    if (rows == 0 || cols == 0) {
        throw std::invalid_argument("matrix dimensions must be >= 1, got " + std::to_string(rows) + "x" +
                                    std::to_string(cols));
    }
}

template <typename M>
void check_conformable(const M& a, const M& b) {
    if (a.cols() != b.rows()) {
        throw std::invalid_argument("dimension mismatch: " + std::to_string(a.rows()) + "x" +
                                    std::to_string(a.cols()) + " times " + std::to_string(b.rows()) + "x" +
                                    std::to_string(b.cols()));
    }
}

void check_tile(TileConfig tile) {
    if (tile.b == 0) throw std::invalid_argument("tile dimension must be >= 1");
}

std::int64_t max_abs_raw(const QMatrix& m) {
    std::int64_t best = 0;
    for (q::QWord w : m.data()) best = std::max(best, std::abs(std::int64_t{w.raw}));
    return best;
}

[[maybe_unused]] bool accumulator_safe(const QMatrix& a, const QMatrix& b, std::size_t block) {
    const auto limit = static_cast<__int128>(std::numeric_limits<std::int64_t>::max());
    return static_cast<__int128>(max_abs_raw(a)) * max_abs_raw(b) * static_cast<__int128>(block) <= limit;
}

// Adds a shifted block sum into an output word with 32-bit wrap.
inline std::int32_t accumulate_out(std::int32_t c, std::int64_t shifted, bool& overflow) noexcept {
    const std::int64_t sum = std::int64_t{c} + shifted;
    if (!q::detail::fits32(shifted) || !q::detail::fits32(sum)) overflow = true;
    return q::detail::wrap32(sum);
}

template <bool Instrumented>
QMatrix tiled_kernel(const QMatrix& a, const QMatrix& b, std::size_t tile, MatmulStats* stats) {
    const std::size_t n_rows = a.rows();
    const std::size_t n_inner = a.cols();
    const std::size_t n_cols = b.cols();

    QMatrix c(n_rows, n_cols);  // zero-initialized
    const std::span<const q::QWord> ad = a.data();
    const std::span<const q::QWord> bd = b.data();
    const std::span<q::QWord> cd = c.data();

    bool overflow = false;
    std::uint64_t shifts = 0;
    std::int64_t max_acc = 0;

    for (std::size_t bi = 0; bi < n_rows; bi += tile) {
        const std::size_t i_max = std::min(bi + tile, n_rows);
        for (std::size_t bj = 0; bj < n_cols; bj += tile) {
            const std::size_t j_max = std::min(bj + tile, n_cols);
            for (std::size_t bk = 0; bk < n_inner; bk += tile) {
                const std::size_t k_max = std::min(bk + tile, n_inner);
                for (std::size_t i = bi; i < i_max; ++i) {
                    for (std::size_t j = bj; j < j_max; ++j) {
                        Accumulator64 acc;
                        for (std::size_t k = bk; k < k_max; ++k) {
                            acc.raw += std::int64_t{ad[i * n_inner + k].raw} * std::int64_t{bd[k * n_cols + j].raw};
                        }
                        if constexpr (Instrumented) {
                            ++shifts;
                            max_acc = std::max(max_acc, acc.raw < 0 ? -acc.raw : acc.raw);
                        }
                        q::QWord& out = cd[i * n_cols + j];
                        out.raw = accumulate_out(out.raw, acc.raw >> q::kFracBits, overflow);
                    }
                }
            }
        }
    }

    if (stats != nullptr) {
        stats->overflow = overflow;
        if constexpr (Instrumented) {
            stats->shifts = shifts;
            stats->max_abs_accumulator = max_acc;
        }
    }
    return c;
}

__int128 floor_div_2_16(__int128 v) {
    __int128 quotient = v / 65536;
    if (v % 65536 != 0 && v < 0) --quotient;
    return quotient;
}

}  // namespace

// =============================================================================
// QMatrix / FMatrix
// =============================================================================

QMatrix::QMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {
    check_shape(rows, cols);
    data_.assign(rows * cols, q::QWord{});
}

QMatrix::QMatrix(std::size_t rows, std::size_t cols, std::vector<q::QWord> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    check_shape(rows, cols);
    if (data_.size() != rows * cols) {
        throw std::invalid_argument("matrix data length " + std::to_string(data_.size()) + " does not match " +
                                    std::to_string(rows) + "x" + std::to_string(cols));
    }
}

QMatrix QMatrix::identity(std::size_t n) {
    QMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = q::QWord{static_cast<std::int32_t>(q::kOne)};
    return m;
}

FMatrix::FMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {
    check_shape(rows, cols);
    data_.assign(rows * cols, 0.0f);
}

FMatrix::FMatrix(std::size_t rows, std::size_t cols, std::vector<float> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    check_shape(rows, cols);
    if (data_.size() != rows * cols) {
        throw std::invalid_argument("matrix data length " + std::to_string(data_.size()) + " does not match " +
                                    std::to_string(rows) + "x" + std::to_string(cols));
    }
}

FMatrix FMatrix::identity(std::size_t n) {
    FMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0f;
    return m;
}

// =============================================================================
// Kernels
// =============================================================================

QMatrix matmul_tiled(const QMatrix& a, const QMatrix& b, TileConfig tile, MatmulStats* stats) {
    check_conformable(a, b);
    check_tile(tile);
    assert(accumulator_safe(a, b, std::min(tile.b, a.cols())));
    if (stats != nullptr) return tiled_kernel<true>(a, b, tile.b, stats);
    return tiled_kernel<false>(a, b, tile.b, nullptr);
}

QMatrix matmul_naive_q(const QMatrix& a, const QMatrix& b, MatmulStats* stats) {
    check_conformable(a, b);
    QMatrix c(a.rows(), b.cols());
    bool overflow = false;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < b.cols(); ++j) {
            std::int32_t sum = 0;
            for (std::size_t k = 0; k < a.cols(); ++k) {
                const std::int64_t shifted = q::wide_mul(a(i, k), b(k, j)).raw >> q::kFracBits;
                sum = accumulate_out(sum, shifted, overflow);
            }
            c(i, j) = q::QWord{sum};
        }
    }
    if (stats != nullptr) {
        stats->overflow = overflow;
        stats->shifts = static_cast<std::uint64_t>(a.rows()) * b.cols() * a.cols();
    }
    return c;
}

FMatrix matmul_float(const FMatrix& a, const FMatrix& b) {
    check_conformable(a, b);
    FMatrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < b.cols(); ++j) {
            float sum = 0.0f;
            for (std::size_t k = 0; k < a.cols(); ++k) sum += a(i, k) * b(k, j);
            c(i, j) = sum;
        }
    }
    return c;
}

QMatrix matmul_oracle(const QMatrix& a, const QMatrix& b, TileConfig tile) {
    check_conformable(a, b);
    check_tile(tile);
    const std::size_t inner = a.cols();
    const std::size_t blocks = (inner + tile.b - 1) / tile.b;
    QMatrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < b.cols(); ++j) {
            __int128 total = 0;
            for (std::size_t block = 0; block < blocks; ++block) {
                __int128 block_sum = 0;
                for (std::size_t k = block * tile.b; k < std::min((block + 1) * tile.b, inner); ++k) {
                    block_sum += static_cast<__int128>(a(i, k).raw) * b(k, j).raw;
                }
                total += floor_div_2_16(block_sum);
            }
            c(i, j) = q::QWord{static_cast<std::int32_t>(static_cast<std::uint32_t>(total & 0xFFFFFFFF))};
        }
    }
    return c;
}

// =============================================================================
// Error characterization
// =============================================================================

namespace {

KernelError kernel_error(const QMatrix& a, const QMatrix& b, const QMatrix& c) {
    KernelError e;
    double total = 0.0;
    for (std::size_t i = 0; i < c.rows(); ++i) {
        for (std::size_t j = 0; j < c.cols(); ++j) {
            __int128 exact = 0;  // scale 2^32
            for (std::size_t k = 0; k < a.cols(); ++k) exact += static_cast<__int128>(a(i, k).raw) * b(k, j).raw;
            __int128 diff = static_cast<__int128>(c(i, j).raw) * 65536 - exact;
            if (diff < 0) diff = -diff;
            const double err = static_cast<double>(diff) / 4294967296.0;
            total += err;
            e.max_abs = std::max(e.max_abs, err);
        }
    }
    e.mean_abs = total / static_cast<double>(c.rows() * c.cols());
    return e;
}

}  // namespace

ErrorSummary mae_report(const QMatrix& a, const QMatrix& b, TileConfig tile) {
    check_conformable(a, b);
    return ErrorSummary{kernel_error(a, b, matmul_tiled(a, b, tile)), kernel_error(a, b, matmul_naive_q(a, b))};
}

// =============================================================================
// Conversions and text I/O
// =============================================================================

QMatrix to_q(const FMatrix& m, q::Flags* flags) {
    q::Flags local;
    std::vector<q::QWord> data;
    data.reserve(m.data().size());
    for (float v : m.data()) data.push_back(q::from_real(v, local));
    if (flags != nullptr) *flags |= local;
    return QMatrix(m.rows(), m.cols(), std::move(data));
}

FMatrix to_float(const QMatrix& m) {
    std::vector<float> data;
    data.reserve(m.data().size());
    for (q::QWord w : m.data()) data.push_back(static_cast<float>(q::to_real(w)));
    return FMatrix(m.rows(), m.cols(), std::move(data));
}

QMatrix read_matrix(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("matrix: missing header line");
    std::istringstream header(line);
    long long rows = 0;
    long long cols = 0;
    if (!(header >> rows >> cols) || rows < 1 || cols < 1) {
        throw std::runtime_error("matrix: bad header '" + line + "'");
    }
    std::string trailing;
    if (header >> trailing) throw std::runtime_error("matrix: trailing data in header '" + line + "'");

    std::vector<q::QWord> data;
    data.reserve(static_cast<std::size_t>(rows * cols));
    for (long long r = 0; r < rows; ++r) {
        if (!std::getline(in, line)) throw std::runtime_error("matrix: missing row " + std::to_string(r));
        std::istringstream row(line);
        long long value = 0;
        long long count = 0;
        while (row >> value) {
            if (value < q::kRawMin || value > q::kRawMax) {
                throw std::runtime_error("matrix: raw value out of range in row " + std::to_string(r));
            }
            data.push_back(q::QWord{static_cast<std::int32_t>(value)});
            ++count;
        }
        if (!row.eof()) throw std::runtime_error("matrix: non-integer token in row " + std::to_string(r));
        if (count != cols) {
            throw std::runtime_error("matrix: row " + std::to_string(r) + " has " + std::to_string(count) +
                                     " values, expected " + std::to_string(cols));
        }
    }
    return QMatrix(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols), std::move(data));
}

void write_matrix(std::ostream& out, const QMatrix& m) {
    out << m.rows() << ' ' << m.cols() << '\n';
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j != 0) out << ' ';
            out << m(i, j).raw;
        }
        out << '\n';
    }
}

}  // namespace dynprec::matq

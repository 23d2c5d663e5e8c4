#pragma once

// =============================================================================
// Q16.16 dense matrices and multiplication kernels
// =============================================================================
//
// matmul_tiled    blocked I/J/K loops; each K-block accumulates raw products in
//                 a 64-bit accumulator at scale 2^32 and shifts once (>> 16)
//                 before adding into C.
// matmul_naive_q  one floor shift per product; the higher-rounding baseline.
// matmul_float    single-precision triple loop, no tiling.
// matmul_oracle   same arithmetic as matmul_tiled, computed per K-block with
//                 128-bit sums and an explicit floor division.
//
// Output accumulation is wrapping 32-bit addition; any wrap raises
// MatmulStats::overflow. Dimension mismatches throw std::invalid_argument
// before any work is done.
//
// Accumulator contract: operands should be normalized to [-1, 1]. Each raw
// product is then at most 2^32 in magnitude and any K-block shorter than 2^31
// products fits the 64-bit accumulator. Debug builds assert
// max|a| * max|b| * b < 2^63 on entry.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "dynprec/qcore.hpp"

namespace dynprec::matq {

class QMatrix {
public:
    QMatrix(std::size_t rows, std::size_t cols);
    QMatrix(std::size_t rows, std::size_t cols, std::vector<q::QWord> data);

    static QMatrix identity(std::size_t n);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    q::QWord operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }
    q::QWord& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }

    std::span<const q::QWord> data() const noexcept { return data_; }
    std::span<q::QWord> data() noexcept { return data_; }

    friend bool operator==(const QMatrix&, const QMatrix&) = default;

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<q::QWord> data_;
};

class FMatrix {
public:
    FMatrix(std::size_t rows, std::size_t cols);
    FMatrix(std::size_t rows, std::size_t cols, std::vector<float> data);

    static FMatrix identity(std::size_t n);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    float operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }
    float& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }

    std::span<const float> data() const noexcept { return data_; }
    std::span<float> data() noexcept { return data_; }

    friend bool operator==(const FMatrix&, const FMatrix&) = default;

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<float> data_;
};

// Tile edge length b. The default keeps a b x b block of 4-byte words within
// 8 KiB (4b^2 <= 8192).
struct TileConfig {
    std::size_t b = 32;
};

// 64-bit deferred accumulator at scale 2^32.
struct Accumulator64 {
    std::int64_t raw = 0;
};

struct MatmulStats {
    std::uint64_t shifts = 0;          // >> 16 corrections applied
    std::int64_t max_abs_accumulator = 0;
    bool overflow = false;             // 32-bit output add wrapped
};

QMatrix matmul_tiled(const QMatrix& a, const QMatrix& b, TileConfig tile = {}, MatmulStats* stats = nullptr);
QMatrix matmul_naive_q(const QMatrix& a, const QMatrix& b, MatmulStats* stats = nullptr);
FMatrix matmul_float(const FMatrix& a, const FMatrix& b);
QMatrix matmul_oracle(const QMatrix& a, const QMatrix& b, TileConfig tile = {});

struct KernelError {
    double mean_abs = 0.0;
    double max_abs = 0.0;
};

struct ErrorSummary {
    KernelError tiled;
    KernelError naive;
};

// Error of matmul_tiled (default tile) and matmul_naive_q against the exact
// product of the represented values.
ErrorSummary mae_report(const QMatrix& a, const QMatrix& b, TileConfig tile = {});

QMatrix to_q(const FMatrix& m, q::Flags* flags = nullptr);
FMatrix to_float(const QMatrix& m);

// Text fixtures: "rows cols" on the first line, then one line of decimal raw
// words per row. Parse failures throw std::runtime_error.
QMatrix read_matrix(std::istream& in);
void write_matrix(std::ostream& out, const QMatrix& m);

}  // namespace dynprec::matq

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gbcdc/linalg.hpp"

namespace gbcdc {

/// Dense regression sample: design matrix x (n rows, p columns) and
/// response vector y (length n). Immutable after construction; construction
/// rejects shape mismatches and any non-finite entry.
class RegressionDataset {
public:
    RegressionDataset(Matrix x, Vector y);

    const Matrix& x() const { return x_; }
    const Vector& y() const { return y_; }
    int n() const { return static_cast<int>(x_.rows()); }
    int p() const { return static_cast<int>(x_.cols()); }

    /// Copy of the rows selected by `idx` (0-based), in the given order.
    RegressionDataset rows(const std::vector<int>& idx) const;

    /// Reads a CSV file with a header row; the first p columns are
    /// covariates and the last column is the response. Parsing is
    /// locale-independent; malformed rows raise ParseError with the
    /// offending line number.
    static RegressionDataset from_csv(const std::string& path);

    void to_csv(const std::string& path) const;

private:
    Matrix x_;
    Vector y_;
};

/// Disjoint index blocks covering {0..n-1}. Blocks are ordered; in strict
/// equal-size partitions every block has size m = n / N.
class BatchPartition {
public:
    BatchPartition(std::vector<std::vector<int>> blocks, int n);

    const std::vector<std::vector<int>>& blocks() const { return blocks_; }
    const std::vector<int>& block(int j) const { return blocks_.at(static_cast<std::size_t>(j)); }
    int n() const { return n_; }
    int n_batches() const { return static_cast<int>(blocks_.size()); }
    int batch_size(int j) const { return static_cast<int>(block(j).size()); }

private:
    std::vector<std::vector<int>> blocks_;
    int n_;
};

/// N contiguous blocks [0..m), [m..2m), ... In strict mode N must divide n
/// (IndivisibleError otherwise); in lenient mode the remainder rows are
/// appended to the final block. DomainError when N > n or N < 1.
BatchPartition partition_contiguous(int n, int n_batches, bool strict = true);

/// A seeded pseudo-random permutation of {0..n-1} split into N equal blocks.
/// Deterministic given the seed. N must divide n.
BatchPartition partition_shuffled(int n, int n_batches, std::uint64_t seed);

}  // namespace gbcdc

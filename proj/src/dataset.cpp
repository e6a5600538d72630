#include "gbcdc/dataset.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "gbcdc/errors.hpp"
#include "gbcdc/rng.hpp"

namespace gbcdc {

RegressionDataset::RegressionDataset(Matrix x, Vector y) : x_(std::move(x)), y_(std::move(y)) {
    if (x_.rows() != y_.size()) {
        throw DimensionMismatchError("dataset: x has " + std::to_string(x_.rows()) + " rows but y has length " +
                                     std::to_string(y_.size()));
    }
    if (x_.rows() < 1 || x_.cols() < 1) {
        throw DomainError("dataset: need n >= 1 and p >= 1");
    }
    if (!x_.allFinite() || !y_.allFinite()) {
        throw DomainError("dataset: non-finite entry (NaN/Inf) rejected");
    }
}

RegressionDataset RegressionDataset::rows(const std::vector<int>& idx) const {
    Matrix xs(static_cast<Eigen::Index>(idx.size()), x_.cols());
    Vector ys(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const int r = idx[i];
        if (r < 0 || r >= n()) throw DomainError("dataset: row index out of range");
        xs.row(static_cast<Eigen::Index>(i)) = x_.row(r);
        ys(static_cast<Eigen::Index>(i)) = y_(r);
    }
    return RegressionDataset(std::move(xs), std::move(ys));
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

double parse_double(const std::string& field, const std::string& path, int line_no) {
    const char* begin = field.data();
    const char* end = begin + field.size();
    while (begin != end && (*begin == ' ' || *begin == '\t')) ++begin;
    while (end != begin && (*(end - 1) == ' ' || *(end - 1) == '\t')) --end;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end || begin == end) {
        throw ParseError(path + ":" + std::to_string(line_no) + ": cannot parse numeric field '" + field + "'");
    }
    if (!std::isfinite(value)) {
        throw ParseError(path + ":" + std::to_string(line_no) + ": non-finite value '" + field + "'");
    }
    return value;
}

}  // namespace

RegressionDataset RegressionDataset::from_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open file");
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ":1: missing header row");
    const std::size_t n_cols = split_csv_line(line).size();
    if (n_cols < 2) throw ParseError(path + ":1: need at least one covariate column and a response column");

    std::vector<double> values;
    int n_rows = 0;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != n_cols) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": expected " + std::to_string(n_cols) +
                             " fields, got " + std::to_string(fields.size()));
        }
        for (const auto& f : fields) values.push_back(parse_double(f, path, line_no));
        ++n_rows;
    }
    if (n_rows == 0) throw ParseError(path + ": no data rows");

    const int p = static_cast<int>(n_cols) - 1;
    Matrix x(n_rows, p);
    Vector y(n_rows);
    for (int i = 0; i < n_rows; ++i) {
        for (int k = 0; k < p; ++k) x(i, k) = values[static_cast<std::size_t>(i) * n_cols + k];
        y(i) = values[static_cast<std::size_t>(i) * n_cols + p];
    }
    return RegressionDataset(std::move(x), std::move(y));
}

void RegressionDataset::to_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw ParseError(path + ": cannot open file for writing");
    for (int k = 0; k < p(); ++k) out << "x" << (k + 1) << ",";
    out << "y\n";
    char buf[40];
    for (int i = 0; i < n(); ++i) {
        for (int k = 0; k < p(); ++k) {
            std::snprintf(buf, sizeof buf, "%.17g", x_(i, k));
            out << buf << ",";
        }
        std::snprintf(buf, sizeof buf, "%.17g", y_(i));
        out << buf << "\n";
    }
}

BatchPartition::BatchPartition(std::vector<std::vector<int>> blocks, int n) : blocks_(std::move(blocks)), n_(n) {
    if (blocks_.empty()) throw DomainError("partition: need at least one block");
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::size_t total = 0;
    for (const auto& b : blocks_) {
        total += b.size();
        for (int i : b) {
            if (i < 0 || i >= n) throw DomainError("partition: index out of range");
            if (seen[static_cast<std::size_t>(i)]) throw DomainError("partition: blocks overlap at index " + std::to_string(i));
            seen[static_cast<std::size_t>(i)] = 1;
        }
    }
    if (total != static_cast<std::size_t>(n)) {
        throw DomainError("partition: blocks cover " + std::to_string(total) + " of " + std::to_string(n) + " indices");
    }
}

BatchPartition partition_contiguous(int n, int n_batches, bool strict) {
    if (n_batches < 1) throw DomainError("partition: N must be >= 1");
    if (n_batches > n) throw DomainError("partition: N = " + std::to_string(n_batches) + " exceeds n = " + std::to_string(n));
    if (strict && n % n_batches != 0) {
        throw IndivisibleError("partition: N = " + std::to_string(n_batches) + " does not divide n = " + std::to_string(n));
    }
    const int m = n / n_batches;
    std::vector<std::vector<int>> blocks(static_cast<std::size_t>(n_batches));
    int next = 0;
    for (int j = 0; j < n_batches; ++j) {
        const int size = (j == n_batches - 1) ? n - next : m;
        blocks[static_cast<std::size_t>(j)].resize(static_cast<std::size_t>(size));
        std::iota(blocks[static_cast<std::size_t>(j)].begin(), blocks[static_cast<std::size_t>(j)].end(), next);
        next += size;
    }
    return BatchPartition(std::move(blocks), n);
}

BatchPartition partition_shuffled(int n, int n_batches, std::uint64_t seed) {
    if (n_batches < 1) throw DomainError("partition: N must be >= 1");
    if (n_batches > n) throw DomainError("partition: N = " + std::to_string(n_batches) + " exceeds n = " + std::to_string(n));
    if (n % n_batches != 0) {
        throw IndivisibleError("partition: N = " + std::to_string(n_batches) + " does not divide n = " + std::to_string(n));
    }
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(seed);
    rng.shuffle(perm);
    const int m = n / n_batches;
    std::vector<std::vector<int>> blocks(static_cast<std::size_t>(n_batches));
    for (int j = 0; j < n_batches; ++j) {
        blocks[static_cast<std::size_t>(j)].assign(perm.begin() + static_cast<std::ptrdiff_t>(j) * m,
                                                   perm.begin() + static_cast<std::ptrdiff_t>(j + 1) * m);
    }
    return BatchPartition(std::move(blocks), n);
}

}  // namespace gbcdc

#include "gbcdc/kernel.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "gbcdc/compose.hpp"
#include "gbcdc/errors.hpp"

namespace gbcdc {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014327;

double kernel_value(KernelType type, double u) {
    switch (type) {
        case KernelType::gaussian:
            return kInvSqrt2Pi * std::exp(-0.5 * u * u);
        case KernelType::epanechnikov:
            return std::abs(u) < 1.0 ? 0.75 * (1.0 - u * u) : 0.0;
    }
    return 0.0;
}

}  // namespace

KernelType kernel_type_from_string(const std::string& s) {
    if (s == "gaussian") return KernelType::gaussian;
    if (s == "epanechnikov") return KernelType::epanechnikov;
    throw DomainError("unknown kernel '" + s + "' (expected gaussian or epanechnikov)");
}

double KernelSpec::bandwidth(int m) const {
    if (m < 1) throw DomainError("kernel: batch size must be >= 1");
    return c * std::pow(static_cast<double>(m), -varsigma);
}

void validate(const KernelSpec& spec) {
    if (!(spec.c > 0.0)) throw DomainError("kernel: bandwidth constant must be positive");
    if (!(spec.varsigma > 0.0) || !(spec.varsigma < 1.0)) {
        throw DomainError("kernel: bandwidth exponent must lie in (0, 1)");
    }
    for (Eigen::Index i = 0; i < spec.grid.size(); ++i) {
        if (spec.grid(i) < 0.0 || spec.grid(i) > 1.0) throw DomainError("kernel: grid points must lie in [0, 1]");
        if (i > 0 && spec.grid(i) < spec.grid(i - 1)) throw DomainError("kernel: grid must be sorted");
    }
}

Vector default_grid(int points) {
    if (points < 2) throw DomainError("kernel: grid needs at least 2 points");
    return Vector::LinSpaced(points, 0.0, 1.0);
}

double nw_estimate(const RegressionDataset& batch, double x, const KernelSpec& spec) {
    if (batch.p() != 1) throw DimensionMismatchError("nw_estimate: batch must have a single covariate column");
    const double h = spec.bandwidth(batch.n());
    double weight_sum = 0.0;
    double value_sum = 0.0;
    for (int i = 0; i < batch.n(); ++i) {
        const double w = kernel_value(spec.kernel, (batch.x()(i, 0) - x) / h) / h;
        weight_sum += w;
        value_sum += w * batch.y()(i);
    }
    if (weight_sum <= 0.0) {
        throw EmptyWindowError("nw_estimate: no observation with positive kernel weight at x = " + std::to_string(x));
    }
    return value_sum / weight_sum;
}

double phi_covariate(const RegressionDataset& batch, double x, const KernelSpec& spec, double center) {
    if (batch.p() != 1) throw DimensionMismatchError("phi_covariate: batch must have a single covariate column");
    const double m = static_cast<double>(batch.n());
    const double h = spec.bandwidth(batch.n());
    double sum = 0.0;
    for (int i = 0; i < batch.n(); ++i) {
        const double w = kernel_value(spec.kernel, (batch.x()(i, 0) - x) / h) / h;
        sum += w * (batch.y()(i) - center);
    }
    return std::sqrt(h / m) * sum;
}

KernelSums kernel_sums(const RegressionDataset& batch, double x, KernelType kernel, double bandwidth) {
    if (batch.p() != 1) throw DimensionMismatchError("kernel_sums: batch must have a single covariate column");
    KernelSums sums;
    for (int i = 0; i < batch.n(); ++i) {
        const double w = kernel_value(kernel, (batch.x()(i, 0) - x) / bandwidth) / bandwidth;
        sums.weight += w;
        sums.weighted_y += w * batch.y()(i);
    }
    return sums;
}

Vector pilot_curve(const std::vector<RegressionDataset>& batches, const KernelSpec& spec) {
    if (batches.empty()) throw DomainError("pilot_curve: no batches");
    long long n = 0;
    for (const auto& b : batches) n += b.n();
    const double h = spec.c * std::pow(static_cast<double>(n), -spec.varsigma);
    Vector pilot(spec.grid.size());
    for (Eigen::Index i = 0; i < spec.grid.size(); ++i) {
        double num = 0.0, den = 0.0;
        for (const auto& b : batches) {
            const KernelSums sums = kernel_sums(b, spec.grid(i), spec.kernel, h);
            num += sums.weighted_y;
            den += sums.weight;
        }
        if (den <= 0.0) {
            throw EmptyWindowError("pilot_curve: no observation with positive weight at x = " +
                                   std::to_string(spec.grid(i)));
        }
        pilot(i) = num / den;
    }
    return pilot;
}

std::vector<CurvePoint> bc_ge_curve(const Matrix& curve_values, const Matrix& covariates, const Vector& grid) {
    const auto n = curve_values.rows();
    const auto g = curve_values.cols();
    if (covariates.rows() != n || covariates.cols() != g) {
        throw DimensionMismatchError("bc_ge_curve: curve values and covariates must have matching N x G shapes");
    }
    if (grid.size() != g) throw DimensionMismatchError("bc_ge_curve: grid length differs from curve columns");
    if (n < 3) throw InsufficientBatchesError("bc_ge_curve: need at least 3 batches");

    std::vector<CurvePoint> out(static_cast<std::size_t>(g));
    for (Eigen::Index i = 0; i < g; ++i) {
        CurvePoint& pt = out[static_cast<std::size_t>(i)];
        pt.x = grid(i);
        pt.naive = curve_values.col(i).mean();
        pt.n_batches = static_cast<int>(n);
        ComponentRegression reg;
        reg.component_index = static_cast<int>(i);
        reg.responses = curve_values.col(i);
        reg.covariates = covariates.col(i);
        try {
            const ComponentEstimate est = bc_ge_component(reg);
            pt.r_tilde = est.theta;
            pt.alpha_tilde = est.xi(0);
            pt.ok = true;
        } catch (const RankDeficientError&) {
            pt.ok = false;  // flagged; neighbors unaffected
        }
    }
    return out;
}

void write_curve_csv(const std::vector<CurvePoint>& curve, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError(path + ": cannot open file for writing");
    out << "x,r_tilde,alpha_tilde,naive_avg,n_batches_used\n";
    char buf[40];
    const auto fmt = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    for (const auto& pt : curve) {
        out << fmt(pt.x) << ",";
        if (pt.ok) {
            out << fmt(pt.r_tilde) << "," << fmt(pt.alpha_tilde) << ",";
        } else {
            out << ",,";
        }
        out << fmt(pt.naive) << "," << pt.n_batches << "\n";
    }
}

}  // namespace gbcdc

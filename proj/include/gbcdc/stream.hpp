#pragma once

#include <string>
#include <vector>

#include "gbcdc/compose.hpp"
#include "gbcdc/local_fit.hpp"

namespace gbcdc {

/// Kahan-compensated accumulator; keeps long streams of rank-1 updates from
/// drifting away from the batch computation.
struct CompensatedSum {
    double value = 0.0;
    double compensation = 0.0;

    void add(double x) {
        const double y = x - compensation;
        const double t = value + y;
        compensation = (t - value) - y;
        value = t;
    }
};

/// Running sufficient statistics of the composite regression, one set per
/// component: sums of v, v v', theta, v theta and theta^2. Size depends only
/// on (p, q), never on the number of batches; each update costs O(p q^2).
class StreamState {
public:
    StreamState(int p, int q);

    /// Folds one batch fit into the sums. The fit's support must have length
    /// p and its covariate matrix must be p x q.
    void update(const LocalFit& fit);

    /// Recomputes the composite estimate from the sums; identical (to
    /// floating-point roundoff) to the batch computation over the same
    /// fits. InsufficientBatchesError when N <= q + 1.
    CompositionResult finalize() const;

    /// Component-wise sum of two states (associative and commutative), for
    /// concurrent shards.
    void merge(const StreamState& other);

    int n_batches() const { return n_batches_; }
    int p() const { return p_; }
    int q() const { return q_; }

    /// Versioned snapshot; the decimal round trip is exact.
    std::string to_json() const;
    static StreamState from_json(const std::string& text);

private:
    struct ComponentSums {
        std::vector<CompensatedSum> sum_v;       // q
        std::vector<CompensatedSum> sum_vv;      // q*q, row major
        CompensatedSum sum_theta;
        std::vector<CompensatedSum> sum_vtheta;  // q
        CompensatedSum sum_theta2;
    };

    int p_;
    int q_;
    int n_batches_ = 0;
    std::vector<ComponentSums> components_;
};

StreamState stream_init(int p, int q);
void stream_update(StreamState& state, const LocalFit& fit);
CompositionResult stream_finalize(const StreamState& state);

}  // namespace gbcdc

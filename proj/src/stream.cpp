#include "gbcdc/stream.hpp"

#include <json.hpp>

#include "gbcdc/errors.hpp"

namespace gbcdc {

using nlohmann::json;

namespace {
constexpr int kSnapshotVersion = 1;
}

StreamState::StreamState(int p, int q) : p_(p), q_(q) {
    if (p < 1 || q < 1) throw DomainError("stream: need p >= 1 and q >= 1");
    components_.resize(static_cast<std::size_t>(p));
    for (auto& c : components_) {
        c.sum_v.resize(static_cast<std::size_t>(q));
        c.sum_vv.resize(static_cast<std::size_t>(q) * static_cast<std::size_t>(q));
        c.sum_vtheta.resize(static_cast<std::size_t>(q));
    }
}

void StreamState::update(const LocalFit& fit) {
    if (static_cast<int>(fit.support.size()) != p_) {
        throw DimensionMismatchError("stream update: fit has " + std::to_string(fit.support.size()) +
                                     " components, state expects " + std::to_string(p_));
    }
    if (fit.v_matrix.rows() != p_ || fit.v_matrix.cols() != q_) {
        throw DimensionMismatchError("stream update: covariate matrix must be " + std::to_string(p_) + " x " +
                                     std::to_string(q_));
    }
    for (int k = 0; k < p_; ++k) {
        ComponentSums& c = components_[static_cast<std::size_t>(k)];
        const double theta = fit.theta_hat(fit.support[static_cast<std::size_t>(k)]);
        for (int a = 0; a < q_; ++a) {
            const double va = fit.v_matrix(k, a);
            c.sum_v[static_cast<std::size_t>(a)].add(va);
            c.sum_vtheta[static_cast<std::size_t>(a)].add(va * theta);
            for (int b = 0; b < q_; ++b) {
                c.sum_vv[static_cast<std::size_t>(a) * static_cast<std::size_t>(q_) + static_cast<std::size_t>(b)].add(
                    va * fit.v_matrix(k, b));
            }
        }
        c.sum_theta.add(theta);
        c.sum_theta2.add(theta * theta);
    }
    ++n_batches_;
}

CompositionResult StreamState::finalize() const {
    if (n_batches_ <= q_ + 1) {
        throw InsufficientBatchesError("stream finalize: need N > q + 1, got N = " + std::to_string(n_batches_) +
                                       " with q = " + std::to_string(q_));
    }
    CompositionResult result;
    result.theta_tilde = Vector::Zero(p_);
    result.var_hat = Vector::Zero(p_);
    result.method = CompositionMethod::bc_ge;
    result.n_batches = n_batches_;
    double sigma2_sum = 0.0;
    for (int k = 0; k < p_; ++k) {
        const ComponentSums& c = components_[static_cast<std::size_t>(k)];
        LsSummary sums;
        sums.n = n_batches_;
        sums.sum_v.resize(q_);
        sums.sum_vv.resize(q_, q_);
        sums.sum_vy.resize(q_);
        for (int a = 0; a < q_; ++a) {
            sums.sum_v(a) = c.sum_v[static_cast<std::size_t>(a)].value;
            sums.sum_vy(a) = c.sum_vtheta[static_cast<std::size_t>(a)].value;
            for (int b = 0; b < q_; ++b) {
                sums.sum_vv(a, b) =
                    c.sum_vv[static_cast<std::size_t>(a) * static_cast<std::size_t>(q_) + static_cast<std::size_t>(b)].value;
            }
        }
        sums.sum_y = c.sum_theta.value;
        sums.sum_y2 = c.sum_theta2.value;
        const ComponentEstimate est = solve_intercept_ls(sums);
        result.theta_tilde(k) = est.theta;
        result.var_hat(k) = est.var_hat;
        result.xi_tilde.push_back(est.xi);
        result.components.push_back(k);
        sigma2_sum += est.sigma2_hat;
    }
    result.sigma2_hat = sigma2_sum / p_;
    return result;
}

void StreamState::merge(const StreamState& other) {
    if (other.p_ != p_ || other.q_ != q_) throw DimensionMismatchError("stream merge: dimension mismatch");
    for (int k = 0; k < p_; ++k) {
        ComponentSums& c = components_[static_cast<std::size_t>(k)];
        const ComponentSums& o = other.components_[static_cast<std::size_t>(k)];
        for (std::size_t i = 0; i < c.sum_v.size(); ++i) c.sum_v[i].add(o.sum_v[i].value);
        for (std::size_t i = 0; i < c.sum_vv.size(); ++i) c.sum_vv[i].add(o.sum_vv[i].value);
        for (std::size_t i = 0; i < c.sum_vtheta.size(); ++i) c.sum_vtheta[i].add(o.sum_vtheta[i].value);
        c.sum_theta.add(o.sum_theta.value);
        c.sum_theta2.add(o.sum_theta2.value);
    }
    n_batches_ += other.n_batches_;
}

namespace {

json dump_sums(const std::vector<CompensatedSum>& sums) {
    json values = json::array();
    json compensations = json::array();
    for (const auto& s : sums) {
        values.push_back(s.value);
        compensations.push_back(s.compensation);
    }
    return json{{"value", values}, {"compensation", compensations}};
}

std::vector<CompensatedSum> load_sums(const json& j, std::size_t expected) {
    const auto& values = j.at("value");
    const auto& compensations = j.at("compensation");
    if (values.size() != expected || compensations.size() != expected) {
        throw ParseError("stream snapshot: statistic length mismatch");
    }
    std::vector<CompensatedSum> sums(expected);
    for (std::size_t i = 0; i < expected; ++i) {
        sums[i].value = values[i].get<double>();
        sums[i].compensation = compensations[i].get<double>();
    }
    return sums;
}

}  // namespace

std::string StreamState::to_json() const {
    json j;
    j["schema_version"] = kSnapshotVersion;
    j["p"] = p_;
    j["q"] = q_;
    j["n_batches"] = n_batches_;
    json comps = json::array();
    for (const auto& c : components_) {
        comps.push_back(json{{"sum_v", dump_sums(c.sum_v)},
                             {"sum_vv", dump_sums(c.sum_vv)},
                             {"sum_theta", c.sum_theta.value},
                             {"sum_theta_comp", c.sum_theta.compensation},
                             {"sum_vtheta", dump_sums(c.sum_vtheta)},
                             {"sum_theta2", c.sum_theta2.value},
                             {"sum_theta2_comp", c.sum_theta2.compensation}});
    }
    j["components"] = std::move(comps);
    return j.dump(2);
}

StreamState StreamState::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("stream snapshot: ") + e.what());
    }
    try {
        if (j.at("schema_version").get<int>() != kSnapshotVersion) {
            throw ParseError("stream snapshot: unsupported schema version");
        }
        StreamState state(j.at("p").get<int>(), j.at("q").get<int>());
        state.n_batches_ = j.at("n_batches").get<int>();
        const auto& comps = j.at("components");
        if (comps.size() != state.components_.size()) throw ParseError("stream snapshot: component count mismatch");
        const auto q = static_cast<std::size_t>(state.q_);
        for (std::size_t k = 0; k < comps.size(); ++k) {
            auto& c = state.components_[k];
            c.sum_v = load_sums(comps[k].at("sum_v"), q);
            c.sum_vv = load_sums(comps[k].at("sum_vv"), q * q);
            c.sum_vtheta = load_sums(comps[k].at("sum_vtheta"), q);
            c.sum_theta.value = comps[k].at("sum_theta").get<double>();
            c.sum_theta.compensation = comps[k].at("sum_theta_comp").get<double>();
            c.sum_theta2.value = comps[k].at("sum_theta2").get<double>();
            c.sum_theta2.compensation = comps[k].at("sum_theta2_comp").get<double>();
        }
        return state;
    } catch (const json::exception& e) {
        throw ParseError(std::string("stream snapshot: ") + e.what());
    }
}

StreamState stream_init(int p, int q) { return StreamState(p, q); }

void stream_update(StreamState& state, const LocalFit& fit) { state.update(fit); }

CompositionResult stream_finalize(const StreamState& state) { return state.finalize(); }

}  // namespace gbcdc

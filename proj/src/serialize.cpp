#include "gbcdc/serialize.hpp"

#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "gbcdc/errors.hpp"

namespace gbcdc {

using nlohmann::json;

namespace {

constexpr int kSchemaVersion = 1;

json vector_to_json(const Vector& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

json matrix_to_json(const Matrix& m) {
    json out = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        out.push_back(std::move(row));
    }
    return out;
}

Vector vector_from_json(const json& j) {
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    return v;
}

Matrix matrix_from_json(const json& j) {
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = rows > 0 ? static_cast<Eigen::Index>(j[0].size()) : 0;
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        if (static_cast<Eigen::Index>(j[static_cast<std::size_t>(i)].size()) != cols) {
            throw ParseError("matrix rows have unequal lengths");
        }
        for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = j[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)].get<double>();
    }
    return m;
}

void check_version(const json& j, const char* what) {
    if (!j.contains("schema_version") || j.at("schema_version").get<int>() != kSchemaVersion) {
        throw ParseError(std::string(what) + ": unsupported or missing schema_version");
    }
}

json parse_or_throw(const std::string& text, const char* what) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string(what) + ": " + e.what());
    }
}

}  // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string to_json(const LocalFit& fit) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = to_string(fit.kind);
    j["m"] = fit.m;
    j["lambda"] = fit.lambda;
    j["theta_hat"] = vector_to_json(fit.theta_hat);
    j["support"] = fit.support;
    j["gram"] = matrix_to_json(fit.gram);
    j["v_matrix"] = matrix_to_json(fit.v_matrix);
    return j.dump(2);
}

LocalFit local_fit_from_json(const std::string& text) {
    const json j = parse_or_throw(text, "local fit");
    try {
        check_version(j, "local fit");
        LocalFit fit;
        fit.kind = estimator_kind_from_string(j.at("kind").get<std::string>());
        fit.m = j.at("m").get<int>();
        fit.lambda = j.at("lambda").get<double>();
        fit.theta_hat = vector_from_json(j.at("theta_hat"));
        fit.support = j.at("support").get<std::vector<int>>();
        fit.gram = matrix_from_json(j.at("gram"));
        fit.v_matrix = matrix_from_json(j.at("v_matrix"));
        validate(fit);
        return fit;
    } catch (const json::exception& e) {
        throw ParseError(std::string("local fit: ") + e.what());
    }
}

void write_local_fit_csv(const LocalFit& fit, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError(path + ": cannot open file for writing");
    out << "field,i,j,value\n";
    out << "kind,0,0," << to_string(fit.kind) << "\n";
    out << "m,0,0," << fit.m << "\n";
    out << "lambda,0,0," << format_double(fit.lambda) << "\n";
    for (Eigen::Index i = 0; i < fit.theta_hat.size(); ++i) {
        out << "theta_hat," << (i + 1) << ",0," << format_double(fit.theta_hat(i)) << "\n";
    }
    for (std::size_t i = 0; i < fit.support.size(); ++i) {
        out << "support," << (i + 1) << ",0," << (fit.support[i] + 1) << "\n";
    }
    for (Eigen::Index i = 0; i < fit.gram.rows(); ++i)
        for (Eigen::Index j = 0; j < fit.gram.cols(); ++j)
            out << "gram," << (i + 1) << "," << (j + 1) << "," << format_double(fit.gram(i, j)) << "\n";
    for (Eigen::Index i = 0; i < fit.v_matrix.rows(); ++i)
        for (Eigen::Index j = 0; j < fit.v_matrix.cols(); ++j)
            out << "v_matrix," << (i + 1) << "," << (j + 1) << "," << format_double(fit.v_matrix(i, j)) << "\n";
}

std::string to_json(const CompositionResult& result) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["method"] = to_string(result.method);
    j["n_batches"] = result.n_batches;
    j["sigma2_hat"] = result.sigma2_hat;
    j["theta_tilde"] = vector_to_json(result.theta_tilde);
    j["var_hat"] = vector_to_json(result.var_hat);
    j["components"] = result.components;
    json xi = json::array();
    for (const auto& v : result.xi_tilde) xi.push_back(vector_to_json(v));
    j["xi_tilde"] = std::move(xi);
    return j.dump(2);
}

void write_composition_csv(const CompositionResult& result, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError(path + ": cannot open file for writing");
    out << "k,theta_tilde,var_hat,sigma2_hat\n";
    for (Eigen::Index k = 0; k < result.theta_tilde.size(); ++k) {
        out << (k + 1) << "," << format_double(result.theta_tilde(k)) << "," << format_double(result.var_hat(k)) << ","
            << format_double(result.sigma2_hat) << "\n";
    }
}

std::string to_json(const HomogenizationPlan& plan) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["seed"] = plan.seed;
    j["null_set"] = plan.null_set;
    j["b"] = vector_to_json(plan.b);
    j["center"] = vector_to_json(plan.center);
    j["scale"] = vector_to_json(plan.scale);
    j["a_law"] = json{{"low", plan.a_law.low},
                      {"high", plan.a_law.high},
                      {"gap_low", plan.a_law.gap_low},
                      {"gap_high", plan.a_law.gap_high}};
    json a = json::array();
    for (const auto& v : plan.a_values) a.push_back(vector_to_json(v));
    j["a_values"] = std::move(a);
    return j.dump(2);
}

HomogenizationPlan plan_from_json(const std::string& text) {
    const json j = parse_or_throw(text, "homogenization plan");
    try {
        check_version(j, "homogenization plan");
        HomogenizationPlan plan;
        plan.seed = j.at("seed").get<std::uint64_t>();
        plan.null_set = j.at("null_set").get<std::vector<int>>();
        plan.b = vector_from_json(j.at("b"));
        plan.center = vector_from_json(j.at("center"));
        plan.scale = vector_from_json(j.at("scale"));
        const auto& law = j.at("a_law");
        plan.a_law.low = law.at("low").get<double>();
        plan.a_law.high = law.at("high").get<double>();
        plan.a_law.gap_low = law.at("gap_low").get<double>();
        plan.a_law.gap_high = law.at("gap_high").get<double>();
        for (const auto& v : j.at("a_values")) plan.a_values.push_back(vector_from_json(v));
        validate(plan);
        return plan;
    } catch (const json::exception& e) {
        throw ParseError(std::string("homogenization plan: ") + e.what());
    }
}

}  // namespace gbcdc

#pragma once

#include <string>

#include "gbcdc/homogenize.hpp"
#include "gbcdc/local_fit.hpp"

namespace gbcdc {

/// All serializers write schema_version = 1 and reject other versions on
/// load. Doubles are written with 17 significant digits, so decimal round
/// trips are exact.

std::string to_json(const LocalFit& fit);
LocalFit local_fit_from_json(const std::string& text);

/// Long-format CSV of a batch summary: field,i,j,value with 1-based
/// indices (scalars use i = j = 0).
void write_local_fit_csv(const LocalFit& fit, const std::string& path);

std::string to_json(const CompositionResult& result);

/// One row per coordinate: k (1-based), theta_tilde, var_hat, sigma2_hat.
void write_composition_csv(const CompositionResult& result, const std::string& path);

std::string to_json(const HomogenizationPlan& plan);
HomogenizationPlan plan_from_json(const std::string& text);

/// Locale-independent fixed formatting used by every CSV writer.
std::string format_double(double v);

}  // namespace gbcdc

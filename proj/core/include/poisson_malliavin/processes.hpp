#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "poisson_malliavin/configuration.hpp"
#include "poisson_malliavin/functional.hpp"
#include "poisson_malliavin/measure.hpp"

namespace pm {

/// phi(s) = alpha exp(-beta s)
struct ExponentialKernel {
  double alpha = 0.5;
  double beta = 1.0;
};

/// phi(s) = height for 0 < s <= width
struct BoxKernel {
  double height = 0.5;
  double width = 1.0;
};

using ExcitationKernel = std::variant<ExponentialKernel, BoxKernel>;

struct HawkesModel {
  double mu = 1.0;
  ExcitationKernel kernel = ExponentialKernel{};
  double horizon = 10.0;
  double theta_cap = 20.0;  // upper end of the imbedding mark axis
};

/// int_0^inf phi.
double branching_ratio(const HawkesModel& m);

/// Validates and fills the default mark cap (10x the stationary mean rate).
/// Throws InvalidArgument; returns human-readable warnings (e.g. an
/// unstable branching ratio).
std::vector<std::string> validate(HawkesModel& m, bool cap_given);

HawkesModel hawkes_from_json(const nlohmann::json& j);
void to_json(nlohmann::json& j, const HawkesModel& m);

/// mu + sum over events strictly before t of phi(t - t_i).
double hawkes_intensity(const HawkesModel& m, std::span<const double> events, double t);

/// The ground intensity dt (x) dtheta on [0, T] x [0, theta_cap].
ProductIntensity ground_intensity(const HawkesModel& m);

struct ThinnedPath {
  Configuration ground;
  std::vector<double> accepted;  // event times, ascending
  bool overflow = false;         // some lambda exceeded theta_cap
  double max_intensity = 0.0;
};

/// Sweeps the ground atoms in time order and accepts (t, theta) iff
/// theta <= lambda_t, with lambda built from earlier accepted events.
ThinnedPath thin(const HawkesModel& m, const Configuration& ground);
ThinnedPath simulate_hawkes(const HawkesModel& m, Seed seed);

/// 1{theta <= lambda_t} with lambda_t from the thinning of the ground
/// configuration truncated before t.
double hawkes_pco_integrand(const HawkesModel& m, const Configuration& ground, const Atom& a);

/// H_T as a functional of the ground configuration.
Functional hawkes_count_functional(const HawkesModel& m, const std::string& name = "default");

/// E[H_T]: closed form for the exponential kernel, a delay-equation solve
/// for the box kernel.
double expected_count(const HawkesModel& m);

}  // namespace pm

#include "poisson_malliavin/configuration.hpp"

#include <algorithm>
#include <sstream>

#include <nlohmann/json.hpp>

#include "poisson_malliavin/errors.hpp"

namespace pm {

Interval Interval::intersect(const Interval& o) const noexcept {
  Interval r;
  r.lo = std::max(lo, o.lo);
  if (hi < o.hi) {
    r.hi = hi;
    r.hi_closed = hi_closed;
  } else if (o.hi < hi) {
    r.hi = o.hi;
    r.hi_closed = o.hi_closed;
  } else {
    r.hi = hi;
    r.hi_closed = hi_closed && o.hi_closed;
  }
  if (r.hi < r.lo) r.hi = r.lo, r.hi_closed = false;
  return r;
}

MarkSet MarkSet::points(Points pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return MarkSet{Repr{std::move(pts)}};
}

bool MarkSet::contains(double x) const noexcept {
  return std::visit(
      [x](const auto& r) -> bool {
        using R = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<R, All>) {
          return true;
        } else if constexpr (std::is_same_v<R, Interval>) {
          return r.contains(x);
        } else {
          return std::binary_search(r.begin(), r.end(), x);
        }
      },
      repr_);
}

MarkSet MarkSet::intersect(const MarkSet& o) const {
  if (is_all()) return o;
  if (o.is_all()) return *this;
  if (const auto* a = as_interval()) {
    if (const auto* b = o.as_interval()) return interval(a->intersect(*b));
  }
  const Points& src = as_points() ? *as_points() : *o.as_points();
  const MarkSet& other = as_points() ? o : *this;
  Points kept;
  for (double p : src) {
    if (other.contains(p)) kept.push_back(p);
  }
  return points(std::move(kept));
}

bool Configuration::contains(const Atom& a) const noexcept {
  return std::binary_search(atoms_.begin(), atoms_.end(), a);
}

namespace {

void check_window(const Atom& a, double horizon) {
  if (!(a.t >= 0.0 && a.t <= horizon)) {
    std::ostringstream os;
    os << "atom time " << a.t << " outside [0, " << horizon << "]";
    throw AtomOutOfWindow(os.str());
  }
}

}  // namespace

Configuration make_configuration(std::vector<Atom> atoms, double horizon) {
  if (!(horizon >= 0.0)) throw InvalidArgument("configuration horizon must be >= 0");
  for (const auto& a : atoms) check_window(a, horizon);
  std::sort(atoms.begin(), atoms.end());
  const auto dup = std::adjacent_find(atoms.begin(), atoms.end());
  if (dup != atoms.end()) {
    std::ostringstream os;
    os << "duplicate atom (" << dup->t << ", " << dup->x << ")";
    throw DuplicateAtom(os.str());
  }
  Configuration c(horizon);
  c.atoms_ = std::move(atoms);
  return c;
}

Configuration add_points(const Configuration& omega, std::span<const Atom> added) {
  for (const auto& a : added) check_window(a, omega.horizon_);
  Configuration c = omega;
  for (const auto& a : added) {
    auto it = std::lower_bound(c.atoms_.begin(), c.atoms_.end(), a);
    if (it != c.atoms_.end() && *it == a) continue;
    c.atoms_.insert(it, a);
  }
  return c;
}

Configuration add_point(const Configuration& omega, const Atom& a) {
  return add_points(omega, std::span<const Atom>(&a, 1));
}

Configuration truncate_before(const Configuration& omega, double t) {
  if (!(t >= 0.0 && t <= omega.horizon_)) {
    std::ostringstream os;
    os << "truncation time " << t << " outside [0, " << omega.horizon_ << "]";
    throw InvalidArgument(os.str());
  }
  Configuration c(omega.horizon_);
  // first atom with time >= t
  auto it = std::partition_point(omega.atoms_.begin(), omega.atoms_.end(),
                                 [t](const Atom& a) { return a.t < t; });
  c.atoms_.assign(omega.atoms_.begin(), it);
  return c;
}

Configuration restrict_to(const Configuration& omega, const Region& region) {
  Configuration c(omega.horizon_);
  for (const auto& a : omega.atoms_) {
    if (region.contains(a)) c.atoms_.push_back(a);
  }
  return c;
}

std::size_t count(const Configuration& omega, const Region& window) noexcept {
  std::size_t n = 0;
  for (const auto& a : omega) n += window.contains(a) ? 1 : 0;
  return n;
}

std::size_t count_before(const Configuration& omega, const Region& window, double t) noexcept {
  std::size_t n = 0;
  for (const auto& a : omega) {
    if (!(a.t < t)) break;
    n += window.contains(a) ? 1 : 0;
  }
  return n;
}

void to_json(nlohmann::json& j, const Configuration& c) {
  auto atoms = nlohmann::json::array();
  for (const auto& a : c) atoms.push_back({a.t, a.x});
  j = nlohmann::json{{"T", c.horizon()}, {"atoms", std::move(atoms)}};
}

Configuration configuration_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("T") || !j.contains("atoms")) {
    throw ConfigError("configuration JSON needs keys \"T\" and \"atoms\"");
  }
  std::vector<Atom> atoms;
  for (const auto& row : j.at("atoms")) {
    if (!row.is_array() || row.size() != 2) {
      throw ConfigError("each atom must be [t, mark]");
    }
    atoms.push_back({row[0].get<double>(), row[1].get<double>()});
  }
  return make_configuration(std::move(atoms), j.at("T").get<double>());
}

}  // namespace pm

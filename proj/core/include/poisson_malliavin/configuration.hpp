#pragma once

#include <compare>
#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace pm {

/// A time-marked point (t, x). Marks are scalar: a coordinate in [0, M] for
/// interval mark spaces, or one of the declared point values for discrete
/// ones. Atoms order lexicographically by (t, x).
struct Atom {
  double t = 0.0;
  double x = 0.0;

  friend auto operator<=>(const Atom&, const Atom&) = default;
};

/// [lo, hi) or, with hi_closed, [lo, hi].
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool hi_closed = false;

  bool contains(double v) const noexcept {
    return v >= lo && (v < hi || (hi_closed && v == hi));
  }
  double length() const noexcept { return hi > lo ? hi - lo : 0.0; }
  Interval intersect(const Interval& o) const noexcept;
  bool empty() const noexcept { return !(hi > lo || (hi_closed && hi == lo)); }

  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Mark predicate of a window: everything, an interval, or a finite set of
/// point values (meaningful on discrete mark spaces).
class MarkSet {
 public:
  struct All {
    friend bool operator==(All, All) { return true; }
  };
  using Points = std::vector<double>;

  MarkSet() = default;
  static MarkSet all() { return MarkSet{}; }
  static MarkSet interval(Interval iv) { return MarkSet{Repr{iv}}; }
  static MarkSet points(Points pts);

  bool contains(double x) const noexcept;
  MarkSet intersect(const MarkSet& o) const;

  bool is_all() const noexcept { return std::holds_alternative<All>(repr_); }
  const Interval* as_interval() const noexcept { return std::get_if<Interval>(&repr_); }
  const Points* as_points() const noexcept { return std::get_if<Points>(&repr_); }

  friend bool operator==(const MarkSet&, const MarkSet&) = default;

 private:
  using Repr = std::variant<All, Interval, Points>;
  explicit MarkSet(Repr r) : repr_(std::move(r)) {}
  Repr repr_{All{}};
};

/// A product window A x B of time interval and mark set.
struct Region {
  Interval time;
  MarkSet marks;

  bool contains(const Atom& a) const noexcept { return time.contains(a.t) && marks.contains(a.x); }
  Region intersect(const Region& o) const { return {time.intersect(o.time), marks.intersect(o.marks)}; }

  /// The whole space [0, T] x X.
  static Region whole(double horizon) { return {Interval{0.0, horizon, true}, MarkSet::all()}; }

  friend bool operator==(const Region&, const Region&) = default;
};

/// Immutable finite simple configuration on [0, T] x X, atoms sorted by
/// (t, x). All operators below return new values.
class Configuration {
 public:
  explicit Configuration(double horizon = 1.0) : horizon_(horizon) {}

  double horizon() const noexcept { return horizon_; }
  std::span<const Atom> atoms() const noexcept { return atoms_; }
  std::size_t size() const noexcept { return atoms_.size(); }
  bool empty() const noexcept { return atoms_.empty(); }
  const Atom& operator[](std::size_t i) const { return atoms_[i]; }
  auto begin() const noexcept { return atoms_.begin(); }
  auto end() const noexcept { return atoms_.end(); }

  bool contains(const Atom& a) const noexcept;

  friend bool operator==(const Configuration&, const Configuration&) = default;

 private:
  friend Configuration make_configuration(std::vector<Atom>, double);
  friend Configuration add_points(const Configuration&, std::span<const Atom>);
  friend Configuration truncate_before(const Configuration&, double);
  friend Configuration restrict_to(const Configuration&, const Region&);

  std::vector<Atom> atoms_;
  double horizon_;
};

/// Sorts and validates; throws AtomOutOfWindow or DuplicateAtom.
Configuration make_configuration(std::vector<Atom> atoms, double horizon);

/// omega + sum of delta_a over J, skipping atoms already present.
Configuration add_points(const Configuration& omega, std::span<const Atom> added);
Configuration add_point(const Configuration& omega, const Atom& a);

/// Atoms with time strictly below t. truncate_before(omega, 0) is empty.
Configuration truncate_before(const Configuration& omega, double t);

/// Atoms inside the region (used for window projections N^j).
Configuration restrict_to(const Configuration& omega, const Region& region);

/// N(window)(omega).
std::size_t count(const Configuration& omega, const Region& window) noexcept;
/// Atoms in the window with time strictly before t, i.e. N_{t-}(window).
std::size_t count_before(const Configuration& omega, const Region& window, double t) noexcept;

void to_json(nlohmann::json& j, const Configuration& c);
Configuration configuration_from_json(const nlohmann::json& j);

}  // namespace pm

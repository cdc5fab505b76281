#include "tendonsense/tendon.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "tendonsense/error.hpp"

namespace tendonsense {

const char* to_string(TendonName name) {
  switch (name) {
    case TendonName::F: return "F";
    case TendonName::SF: return "SF";
    case TendonName::SR: return "SR";
    case TendonName::R: return "R";
  }
  return "?";
}

TendonName tendon_from_string(std::string_view name) {
  for (TendonName t : kAllTendons)
    if (name == to_string(t)) return t;
  throw UnknownTendonError("unknown tendon '" + std::string(name) +
                           "' (expected one of F, SF, SR, R)");
}

const char* to_string(PathPolicy policy) {
  switch (policy) {
    case PathPolicy::Polyline: return "polyline";
    case PathPolicy::Spline: return "spline";
    case PathPolicy::SphereWrap: return "sphere_wrap";
  }
  return "?";
}

PathPolicy path_policy_from_string(std::string_view name) {
  if (name == "polyline") return PathPolicy::Polyline;
  if (name == "spline") return PathPolicy::Spline;
  if (name == "sphere_wrap") return PathPolicy::SphereWrap;
  throw ConfigError("unknown path policy '" + std::string(name) +
                    "' (expected polyline, spline or sphere_wrap)");
}

void TendonPath::validate(const ShoulderModel& model) const {
  const std::string label = std::string("tendon ") + to_string(name);
  if (elements.size() < 2)
    throw InvalidPathError(label + ": needs at least 2 routing elements");
  std::set<std::string> ids;
  for (const auto& e : elements) {
    if (!ids.insert(e.id).second)
      throw InvalidPathError(label + ": duplicate element id '" + e.id + "'");
    if (!e.local_position_mm.allFinite())
      throw InvalidPathError(label + ": element '" + e.id + "' is not finite");
    if (e.frame == Frame::Humerus &&
        (e.local_position_mm - model.center).norm() > model.arm_length_mm)
      throw InvalidPathError(label + ": humerus element '" + e.id +
                             "' lies beyond the arm length");
  }
}

void TendonLayout::validate() const {
  model.validate();
  if (!(arc_length_rel_tol > 0.0))
    throw ValidationError("arc_length_rel_tol must be positive");
  std::array<int, 4> seen{};
  for (const auto& p : tendons) {
    ++seen[index(p.name)];
    p.validate(model);
  }
  for (TendonName t : kAllTendons)
    if (seen[index(t)] != 1)
      throw ValidationError(std::string("layout must contain tendon ") + to_string(t) +
                            " exactly once");
}

const TendonPath& TendonLayout::path(TendonName name) const {
  for (const auto& p : tendons)
    if (p.name == name) return p;
  throw UnknownTendonError(std::string("layout has no tendon ") + to_string(name));
}

ArcLengthOptions TendonLayout::arc_options() const {
  return {arc_length_rel_tol, model.center, model.sphere_radius_mm};
}

std::vector<Vec3> path_points(const TendonPath& path, const JointPose& pose) {
  const Mat3 rot = humerus_rotation(pose);
  std::vector<Vec3> pts;
  pts.reserve(path.elements.size());
  for (const auto& e : path.elements)
    pts.push_back(e.frame == Frame::Torso ? e.local_position_mm
                                          : Vec3(rot * e.local_position_mm));
  return pts;
}

namespace {

double polyline_length(std::span<const Vec3> pts) {
  double total = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) total += (pts[i] - pts[i - 1]).norm();
  return total;
}

/// Natural cubic spline through the knots, parametrized by chord length.
class ChordSpline {
 public:
  explicit ChordSpline(std::vector<Vec3> knots) : knots_(std::move(knots)) {
    const std::size_t n = knots_.size();
    h_.resize(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) h_[i] = (knots_[i + 1] - knots_[i]).norm();
    m_.assign(n, Vec3::Zero());
    if (n < 3) return;
    // Tridiagonal system for interior second derivatives (Thomas algorithm).
    const std::size_t k = n - 2;
    std::vector<double> diag(k), upper(k);
    std::vector<Vec3> rhs(k);
    for (std::size_t j = 0; j < k; ++j) {
      const std::size_t i = j + 1;
      diag[j] = 2.0 * (h_[i - 1] + h_[i]);
      upper[j] = h_[i];
      rhs[j] = 6.0 * ((knots_[i + 1] - knots_[i]) / h_[i] -
                      (knots_[i] - knots_[i - 1]) / h_[i - 1]);
    }
    for (std::size_t j = 1; j < k; ++j) {
      const double lower = h_[j];
      const double w = lower / diag[j - 1];
      diag[j] -= w * upper[j - 1];
      rhs[j] -= w * rhs[j - 1];
    }
    m_[k] = rhs[k - 1] / diag[k - 1];
    for (std::size_t j = k - 1; j-- > 0;) m_[j + 1] = (rhs[j] - upper[j] * m_[j + 2]) / diag[j];
  }

  std::size_t segments() const { return h_.size(); }
  double chord(std::size_t i) const { return h_[i]; }

  /// |dC/dt| on segment i at local parameter t in [0, h_i].
  double speed(std::size_t i, double t) const {
    const double h = h_[i];
    const double a = h - t;
    const Vec3 d = -m_[i] * (a * a / (2.0 * h)) + m_[i + 1] * (t * t / (2.0 * h)) +
                   (knots_[i + 1] - knots_[i]) / h - (m_[i + 1] - m_[i]) * (h / 6.0);
    return d.norm();
  }

 private:
  std::vector<Vec3> knots_;
  std::vector<double> h_;
  std::vector<Vec3> m_;
};

template <typename F>
double adaptive_simpson(const F& f, double a, double b, double fa, double fm, double fb,
                        double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double spline_length(std::span<const Vec3> pts, double rel_tol) {
  std::vector<Vec3> knots;
  knots.reserve(pts.size());
  for (const auto& p : pts)
    if (knots.empty() || (p - knots.back()).norm() > 0.0) knots.push_back(p);
  if (knots.size() < 2) return 0.0;
  const ChordSpline spline(std::move(knots));
  constexpr int kInitialPanels = 4;
  constexpr int kMaxDepth = 40;
  double total = 0.0;
  for (std::size_t i = 0; i < spline.segments(); ++i) {
    const double h = spline.chord(i);
    const auto f = [&](double t) { return spline.speed(i, t); };
    const double panel_tol = rel_tol * h / kInitialPanels;
    for (int p = 0; p < kInitialPanels; ++p) {
      const double a = h * p / kInitialPanels;
      const double b = h * (p + 1) / kInitialPanels;
      const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
      const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
      total += adaptive_simpson(f, a, b, fa, fm, fb, whole, panel_tol, kMaxDepth);
    }
  }
  return total;
}

}  // namespace

double sphere_wrap_length(const Vec3& a, const Vec3& b, const Vec3& center, double radius) {
  const Vec3 ra = a - center;
  const Vec3 rb = b - center;
  const double chord = (b - a).norm();
  const double la = ra.norm();
  const double lb = rb.norm();
  if (la < radius || lb < radius) return chord;
  const double gamma = std::atan2(ra.cross(rb).norm(), ra.dot(rb));
  const double alpha_a = std::acos(std::clamp(radius / la, -1.0, 1.0));
  const double alpha_b = std::acos(std::clamp(radius / lb, -1.0, 1.0));
  if (gamma <= alpha_a + alpha_b) return chord;
  const double wrapped = std::sqrt(la * la - radius * radius) +
                         std::sqrt(lb * lb - radius * radius) +
                         radius * (gamma - alpha_a - alpha_b);
  return std::max(wrapped, chord);
}

double arc_length(std::span<const Vec3> points, PathPolicy policy,
                  const ArcLengthOptions& options) {
  if (points.size() < 2)
    throw InvalidPathError("arc length needs at least 2 points, got " +
                           std::to_string(points.size()));
  switch (policy) {
    case PathPolicy::Polyline:
      return polyline_length(points);
    case PathPolicy::Spline:
      return spline_length(points, options.rel_tol);
    case PathPolicy::SphereWrap: {
      double total = 0.0;
      for (std::size_t i = 1; i < points.size(); ++i)
        total += sphere_wrap_length(points[i - 1], points[i], options.wrap_center,
                                    options.wrap_radius_mm);
      return total;
    }
  }
  throw InvalidPathError("unknown path policy");
}

double tendon_length(const TendonLayout& layout, TendonName name, const JointPose& pose) {
  const TendonPath& p = layout.path(name);
  const auto pts = path_points(p, pose);
  return arc_length(pts, p.policy, layout.arc_options());
}

}  // namespace tendonsense

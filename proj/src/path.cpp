#include "apfp/path.hpp"

#include <algorithm>
#include <cmath>

namespace apfp {

namespace {

constexpr double kDomainSlack = 1e-12;

Matrix herm(const Matrix& m) { return 0.5 * (m + m.adjoint()); }

Matrix exp_hermitian(const Matrix& h, double t) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(herm(h));
  const Eigen::VectorXd d = (t * es.eigenvalues().array()).exp();
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().adjoint();
}

// Value and derivative of g_t = e^{tc} e^{td}, of its modulus P_t = |g_t| and
// of the unitary part g_t P_t^{-1}, for Hermitian c and d.
struct ProductPolarJet {
  Matrix modulus, modulus_dot;
  Matrix unitary, unitary_dot;
};

ProductPolarJet product_polar_block(const Matrix& c, const Matrix& d, double t) {
  const Matrix ec = exp_hermitian(c, t);
  const Matrix ed = exp_hermitian(d, t);
  const Matrix g = ec * ed;
  const Matrix g_dot = c * g + g * d;

  const Matrix s = g.adjoint() * g;
  const Matrix s_dot = g_dot.adjoint() * g + g.adjoint() * g_dot;

  Eigen::SelfAdjointEigenSolver<Matrix> es(herm(s));
  const Matrix& w = es.eigenvectors();
  const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();

  // P' solves the Sylvester relation P P' + P' P = S'.
  Matrix x = w.adjoint() * s_dot * w;
  for (Eigen::Index a = 0; a < x.rows(); ++a) {
    for (Eigen::Index b = 0; b < x.cols(); ++b) x(a, b) /= root(a) + root(b);
  }

  ProductPolarJet jet;
  jet.modulus = herm(w * root.asDiagonal() * w.adjoint());
  jet.modulus_dot = herm(w * x * w.adjoint());
  const Matrix modulus_inv = herm(w * root.cwiseInverse().asDiagonal() * w.adjoint());
  jet.unitary = g * modulus_inv;
  jet.unitary_dot = g_dot * modulus_inv - jet.unitary * jet.modulus_dot * modulus_inv;
  return jet;
}

PathJet product_polar_jet(const Element& c, const Element& d, double t, bool unitary_part) {
  std::vector<Matrix> values, derivatives;
  for (std::size_t i = 0; i < c.num_blocks(); ++i) {
    ProductPolarJet j = product_polar_block(c.block(i), d.block(i), t);
    if (unitary_part) {
      values.push_back(std::move(j.unitary));
      derivatives.push_back(std::move(j.unitary_dot));
    } else {
      values.push_back(std::move(j.modulus));
      derivatives.push_back(std::move(j.modulus_dot));
    }
  }
  return {Element(c.algebra(), std::move(values)), Element(c.algebra(), std::move(derivatives))};
}

void require_self_adjoint(const Element& x, const char* what) {
  if (!is_self_adjoint(x, 1e-12 * std::max(1.0, op_norm(x)))) {
    throw Error(ErrorKind::InvalidPath, std::string(what) + " must be self-adjoint");
  }
}

void require_domain(Interval domain) {
  if (!(std::isfinite(domain.lo) && std::isfinite(domain.hi) && domain.lo < domain.hi)) {
    throw Error(ErrorKind::InvalidPath, "path domain must be a nondegenerate finite interval");
  }
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

InvertiblePath::InvertiblePath(AlgebraDescriptor algebra, Interval domain, Kind kind)
    : algebra_(std::move(algebra)), domain_(domain), kind_(std::move(kind)) {
  require_domain(domain_);
}

InvertiblePath InvertiblePath::exp_line(Element c, Interval domain) {
  AlgebraDescriptor alg = c.algebra();
  return InvertiblePath(std::move(alg), domain, path_kind::ExpLine{std::move(c)});
}

InvertiblePath InvertiblePath::product_polar(Element c, Element d, Interval domain) {
  if (!(c.algebra() == d.algebra())) throw Error(ErrorKind::DescriptorMismatch, "product_polar operands");
  require_self_adjoint(c, "c");
  require_self_adjoint(d, "d");
  AlgebraDescriptor alg = c.algebra();
  return InvertiblePath(std::move(alg), domain,
                        path_kind::ProductPolar{hermitian_part(c), hermitian_part(d)});
}

InvertiblePath InvertiblePath::polar_modulus(Element c, Element d, Interval domain) {
  if (!(c.algebra() == d.algebra())) throw Error(ErrorKind::DescriptorMismatch, "polar_modulus operands");
  require_self_adjoint(c, "c");
  require_self_adjoint(d, "d");
  AlgebraDescriptor alg = c.algebra();
  return InvertiblePath(std::move(alg), domain,
                        path_kind::PolarModulus{hermitian_part(c), hermitian_part(d)});
}

InvertiblePath InvertiblePath::sampled(std::vector<path_kind::Sample> samples) {
  if (samples.size() < 2) throw Error(ErrorKind::InvalidPath, "a sampled path needs at least two samples");
  const AlgebraDescriptor alg = samples.front().value.algebra();
  std::vector<Element> logs;
  for (std::size_t j = 0; j < samples.size(); ++j) {
    if (!(samples[j].value.algebra() == alg)) throw Error(ErrorKind::DescriptorMismatch, "sample algebras differ");
    if (!is_invertible(samples[j].value)) throw Error(ErrorKind::SingularValueOnPath, "singular sample");
    if (j == 0) continue;
    if (!(samples[j].t > samples[j - 1].t)) {
      throw Error(ErrorKind::InvalidPath, "sample parameters must be strictly increasing");
    }
    const Element prev_inv = inverse(samples[j - 1].value);
    const Element forward = samples[j].value * prev_inv;
    if (op_norm(forward - Element::identity(alg)) >= 0.5) {
      throw Error(ErrorKind::InvalidPath, "consecutive samples are too far apart");
    }
    logs.push_back(log_principal(prev_inv * samples[j].value));
  }
  const Interval domain{samples.front().t, samples.back().t};
  return InvertiblePath(alg, domain, path_kind::Sampled{std::move(samples), std::move(logs)});
}

InvertiblePath InvertiblePath::pointwise_product(InvertiblePath first, InvertiblePath second) {
  if (!(first.algebra() == second.algebra())) throw Error(ErrorKind::DescriptorMismatch, "pointwise product");
  if (!(first.domain() == second.domain())) {
    throw Error(ErrorKind::InvalidPath, "pointwise product needs equal domains");
  }
  const AlgebraDescriptor alg = first.algebra();
  const Interval domain = first.domain();
  return InvertiblePath(alg, domain,
                        path_kind::PointwiseProduct{std::make_shared<const InvertiblePath>(std::move(first)),
                                                    std::make_shared<const InvertiblePath>(std::move(second))});
}

InvertiblePath InvertiblePath::concatenation(InvertiblePath first, InvertiblePath second) {
  if (!(first.algebra() == second.algebra())) throw Error(ErrorKind::DescriptorMismatch, "concatenation");
  const AlgebraDescriptor alg = first.algebra();
  const Interval domain{first.domain().lo, first.domain().hi + second.domain().width()};
  return InvertiblePath(alg, domain,
                        path_kind::Concatenation{std::make_shared<const InvertiblePath>(std::move(first)),
                                                 std::make_shared<const InvertiblePath>(std::move(second))});
}

InvertiblePath InvertiblePath::reversal(InvertiblePath inner) {
  const AlgebraDescriptor alg = inner.algebra();
  const Interval domain = inner.domain();
  return InvertiblePath(alg, domain, path_kind::Reversal{std::make_shared<const InvertiblePath>(std::move(inner))});
}

double InvertiblePath::clamp_to_domain(double t) const {
  const double slack = kDomainSlack * std::max(1.0, domain_.width());
  if (!std::isfinite(t) || t < domain_.lo - slack || t > domain_.hi + slack) {
    throw Error(ErrorKind::OutOfDomain, "parameter outside the path domain");
  }
  return std::clamp(t, domain_.lo, domain_.hi);
}

Element InvertiblePath::evaluate(double t) const { return jet(t).value; }

PathJet InvertiblePath::jet(double t) const { return jet_impl(clamp_to_domain(t), t >= domain_.hi); }

PathJet InvertiblePath::jet(double t, bool from_left) const { return jet_impl(clamp_to_domain(t), from_left); }

PathJet InvertiblePath::jet_impl(double t, bool from_left) const {
  return std::visit(
      Overloaded{
          [&](const path_kind::ExpLine& k) -> PathJet {
            Element value = exp_element(scale(t, k.c));
            Element derivative = k.c * value;
            return {std::move(value), std::move(derivative)};
          },
          [&](const path_kind::ProductPolar& k) { return product_polar_jet(k.c, k.d, t, true); },
          [&](const path_kind::PolarModulus& k) { return product_polar_jet(k.c, k.d, t, false); },
          [&](const path_kind::Sampled& k) -> PathJet {
            const auto& s = k.samples;
            // Segment j covers [t_j, t_{j+1}); the last one is closed.
            auto it = std::upper_bound(s.begin(), s.end(), t, [](double v, const auto& smp) { return v < smp.t; });
            std::size_t j = static_cast<std::size_t>(std::distance(s.begin(), it));
            j = j == 0 ? 0 : j - 1;
            if (from_left && j > 0 && t == s[j].t) --j;
            j = std::min(j, s.size() - 2);
            const double dt = s[j + 1].t - s[j].t;
            const double frac = (t - s[j].t) / dt;
            Element value = s[j].value * exp_element(scale(frac, k.step_logs[j]));
            Element derivative = value * scale(1.0 / dt, k.step_logs[j]);
            return {std::move(value), std::move(derivative)};
          },
          [&](const path_kind::PointwiseProduct& k) -> PathJet {
            const PathJet a = k.first->jet_impl(t, from_left);
            const PathJet b = k.second->jet_impl(t, from_left);
            return {a.value * b.value, a.derivative * b.value + a.value * b.derivative};
          },
          [&](const path_kind::Concatenation& k) -> PathJet {
            const double joint = k.first->domain().hi;
            const bool in_first = from_left ? t <= joint : t < joint;
            if (in_first) return k.first->jet_impl(t, from_left);
            return k.second->jet_impl(t - joint + k.second->domain().lo, from_left);
          },
          [&](const path_kind::Reversal& k) -> PathJet {
            const Interval d = k.inner->domain();
            PathJet inner = k.inner->jet_impl(d.lo + d.hi - t, !from_left);
            return {std::move(inner.value), scale(-1.0, inner.derivative)};
          },
      },
      kind_);
}

std::vector<double> InvertiblePath::breakpoints() const {
  std::vector<double> points = std::visit(
      Overloaded{
          [](const path_kind::Sampled& k) {
            std::vector<double> p;
            for (std::size_t j = 1; j + 1 < k.samples.size(); ++j) p.push_back(k.samples[j].t);
            return p;
          },
          [](const path_kind::PointwiseProduct& k) {
            std::vector<double> p = k.first->breakpoints();
            const std::vector<double> q = k.second->breakpoints();
            p.insert(p.end(), q.begin(), q.end());
            return p;
          },
          [](const path_kind::Concatenation& k) {
            std::vector<double> p = k.first->breakpoints();
            p.push_back(k.first->domain().hi);
            const double shift = k.first->domain().hi - k.second->domain().lo;
            for (double b : k.second->breakpoints()) p.push_back(b + shift);
            return p;
          },
          [](const path_kind::Reversal& k) {
            std::vector<double> p;
            const Interval d = k.inner->domain();
            for (double b : k.inner->breakpoints()) p.push_back(d.lo + d.hi - b);
            return p;
          },
          [](const auto&) { return std::vector<double>{}; },
      },
      kind_);
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  std::erase_if(points, [this](double p) { return p <= domain_.lo || p >= domain_.hi; });
  return points;
}

Element finite_difference_derivative(const InvertiblePath& path, double t, double step) {
  const Element f_m2 = path.evaluate(t - 2 * step);
  const Element f_m1 = path.evaluate(t - step);
  const Element f_p1 = path.evaluate(t + step);
  const Element f_p2 = path.evaluate(t + 2 * step);
  const Element num = (scale(8.0, f_p1 - f_m1) - (f_p2 - f_m2));
  return scale(1.0 / (12.0 * step), num);
}

}  // namespace apfp

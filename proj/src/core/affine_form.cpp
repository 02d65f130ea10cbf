#include <algorithm>
#include <cmath>
#include <sstream>

#include "llcp/exp_sum_program.hpp"

namespace llcp {

AffineForm AffineForm::coordinate(std::size_t index, double coefficient) {
  AffineForm f;
  if (coefficient != 0.0) f.terms_.emplace_back(index, coefficient);
  return f;
}

double AffineForm::coefficient(std::size_t index) const {
  auto it = std::lower_bound(terms_.begin(), terms_.end(), index,
                             [](const auto& t, std::size_t i) { return t.first < i; });
  return it != terms_.end() && it->first == index ? it->second : 0.0;
}

double AffineForm::evaluate(const Eigen::VectorXd& u) const {
  double v = constant_;
  for (const auto& [i, a] : terms_) v += a * u(static_cast<Eigen::Index>(i));
  return v;
}

Eigen::VectorXd AffineForm::dense(std::size_t n) const {
  Eigen::VectorXd a = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (const auto& [i, c] : terms_) a(static_cast<Eigen::Index>(i)) = c;
  return a;
}

AffineForm& AffineForm::operator+=(const AffineForm& other) {
  std::vector<std::pair<std::size_t, double>> merged;
  merged.reserve(terms_.size() + other.terms_.size());
  auto a = terms_.cbegin();
  auto b = other.terms_.cbegin();
  while (a != terms_.end() || b != other.terms_.end()) {
    if (b == other.terms_.end() || (a != terms_.end() && a->first < b->first)) {
      merged.push_back(*a++);
    } else if (a == terms_.end() || b->first < a->first) {
      merged.push_back(*b++);
    } else {
      double c = a->second + b->second;
      if (c != 0.0) merged.emplace_back(a->first, c);
      ++a, ++b;
    }
  }
  terms_ = std::move(merged);
  constant_ += other.constant_;
  return *this;
}

AffineForm& AffineForm::operator-=(const AffineForm& other) { return *this += -1.0 * other; }

AffineForm& AffineForm::operator*=(double s) {
  if (s == 0.0) {
    terms_.clear();
  } else {
    for (auto& t : terms_) t.second *= s;
  }
  constant_ *= s;
  return *this;
}

std::string AffineForm::str() const {
  std::ostringstream os;
  os.precision(12);
  bool first = true;
  for (const auto& [i, a] : terms_) {
    double mag = std::abs(a);
    if (first) {
      if (a < 0) os << "-";
    } else {
      os << (a < 0 ? " - " : " + ");
    }
    if (mag != 1.0) os << mag << "*";
    os << "u" << i;
    first = false;
  }
  if (first) {
    os << constant_;
  } else if (constant_ != 0.0) {
    os << (constant_ < 0 ? " - " : " + ") << std::abs(constant_);
  }
  return os.str();
}

double ExpSumConstraint::value(const Eigen::VectorXd& u) const {
  double v = tail.evaluate(u);
  for (const AffineForm& t : exp_terms) v += std::exp(t.evaluate(u));
  return v;
}

std::string ExpSumProgram::dump() const {
  std::ostringstream os;
  os << "coordinates " << coordinates.size() << "\n";
  for (std::size_t i = 0; i < coordinates.size(); ++i) {
    const Coordinate& c = coordinates[i];
    os << "  u" << i << " " << (c.kind == CoordinateKind::Variable ? "var " : "aux ") << c.tag << "\n";
  }
  os << "objective minimize " << objective.str() << "\n";
  os << "inequalities " << inequalities.size() << "\n";
  for (std::size_t k = 0; k < inequalities.size(); ++k) {
    const ExpSumConstraint& c = inequalities[k];
    os << "  [" << k << "]" << (c.principal ? "*" : " ") << " ";
    for (const AffineForm& t : c.exp_terms) os << "exp(" << t.str() << ") + ";
    os << "(" << c.tail.str() << ") <= 0    # " << c.origin << "\n";
  }
  os << "equalities " << equalities.size() << "\n";
  for (std::size_t k = 0; k < equalities.size(); ++k) {
    const EqualityRow& e = equalities[k];
    os << "  [" << k << "]" << (e.principal ? "*" : " ") << " " << e.row.str() << " == 0    # "
       << e.origin << "\n";
  }
  return os.str();
}

}  // namespace llcp

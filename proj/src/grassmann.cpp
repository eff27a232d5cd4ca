#include "osl/grassmann.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "osl/error.hpp"

namespace osl {
namespace {

Eigen::VectorXd singular_values(const Matrix& m) {
  if (m.size() == 0) return Eigen::VectorXd();
  return Eigen::JacobiSVD<Matrix>(m).singularValues();
}

double largest_singular_value(const Matrix& m) {
  auto s = singular_values(m);
  return s.size() == 0 ? 0.0 : s(0);
}

double smallest_singular_value(const Matrix& m) {
  auto s = singular_values(m);
  return s.size() == 0 ? 0.0 : s(s.size() - 1);
}

void require_same_ambient(const Subspace& a, const Subspace& b, const char* op) {
  if (a.ambient_dim() != b.ambient_dim()) {
    throw Error(ErrorKind::AmbientMismatch, std::string(op) + ": ambient dimensions " +
                                                std::to_string(a.ambient_dim()) + " and " +
                                                std::to_string(b.ambient_dim()));
  }
}

// Full orthonormal basis whose first k columns span the frame.
Matrix completed_basis(const Matrix& frame) {
  Eigen::HouseholderQR<Matrix> qr(frame);
  return qr.householderQ() * Matrix::Identity(frame.rows(), frame.rows());
}

void require_complementary(const Subspace& e, const Subspace& f, const char* op) {
  require_same_ambient(e, f, op);
  const auto d = e.ambient_dim();
  if (e.is_zero() || f.is_zero() || e.dim() + f.dim() != d) {
    throw Error(ErrorKind::NotComplementary, std::string(op) + ": dimensions " +
                                                 std::to_string(e.dim()) + " + " +
                                                 std::to_string(f.dim()) + " != " + std::to_string(d));
  }
  Matrix joint(d, d);
  joint << e.frame(), f.frame();
  if (smallest_singular_value(joint) < kRankThreshold) {
    throw Error(ErrorKind::NotComplementary, std::string(op) + ": subspaces intersect nontrivially");
  }
}

}  // namespace

Subspace::Subspace(Matrix frame) : ambient_dim_(static_cast<std::size_t>(frame.rows())), frame_(std::move(frame)) {
  const auto k = frame_.cols();
  if (k < 1 || k > frame_.rows()) {
    throw Error(ErrorKind::RankDeficient,
                "subspace frame must have 1 <= k <= d columns, got " + std::to_string(k));
  }
  const Matrix gram = frame_.transpose() * frame_;
  const double defect = (gram - Matrix::Identity(k, k)).cwiseAbs().maxCoeff();
  if (!(defect <= kFrameTolerance)) {
    throw Error(ErrorKind::RankDeficient, "frame columns are not orthonormal (defect " +
                                              std::to_string(defect) + ")");
  }
}

Subspace::Subspace(std::size_t ambient_dim, Matrix frame, bool) : ambient_dim_(ambient_dim), frame_(std::move(frame)) {}

Subspace Subspace::zero(std::size_t ambient_dim) {
  return Subspace(ambient_dim, Matrix(static_cast<Eigen::Index>(ambient_dim), 0), true);
}

Subspace Subspace::whole(std::size_t ambient_dim) {
  const auto d = static_cast<Eigen::Index>(ambient_dim);
  return Subspace(Matrix::Identity(d, d));
}

Subspace Subspace::coordinate(std::size_t ambient_dim, std::initializer_list<std::size_t> indices) {
  const auto d = static_cast<Eigen::Index>(ambient_dim);
  Matrix frame = Matrix::Zero(d, static_cast<Eigen::Index>(indices.size()));
  Eigen::Index col = 0;
  for (auto i : indices) frame(static_cast<Eigen::Index>(i), col++) = 1.0;
  return Subspace(std::move(frame));
}

Matrix Subspace::projector() const { return frame_ * frame_.transpose(); }

Matrix GraphMap::ambient() const { return complement_frame * map_matrix * base.frame().transpose(); }

Subspace span(const Matrix& columns) {
  if (columns.cols() == 0 || columns.rows() == 0) {
    throw Error(ErrorKind::RankDeficient, "cannot span an empty list of vectors");
  }
  if (columns.cols() > columns.rows()) {
    throw Error(ErrorKind::RankDeficient, "more vectors than the ambient dimension");
  }
  const auto s = singular_values(columns);
  if (s(0) == 0.0 || s(s.size() - 1) < kIndependenceThreshold * s(0)) {
    throw Error(ErrorKind::RankDeficient, "vectors are numerically linearly dependent");
  }
  Eigen::HouseholderQR<Matrix> qr(columns);
  Matrix q = qr.householderQ() * Matrix::Identity(columns.rows(), columns.cols());
  return Subspace(std::move(q));
}

Subspace orthonormalize(const std::vector<Vector>& vectors) {
  if (vectors.empty()) throw Error(ErrorKind::RankDeficient, "cannot span an empty list of vectors");
  const auto d = vectors.front().size();
  Matrix columns(d, static_cast<Eigen::Index>(vectors.size()));
  for (std::size_t j = 0; j < vectors.size(); ++j) {
    if (vectors[j].size() != d) throw Error(ErrorKind::AmbientMismatch, "vectors of different lengths");
    columns.col(static_cast<Eigen::Index>(j)) = vectors[j];
  }
  return span(columns);
}

Subspace orthogonal_complement(const Subspace& e) {
  const auto d = static_cast<Eigen::Index>(e.ambient_dim());
  if (e.is_zero()) return Subspace::whole(e.ambient_dim());
  const auto k = static_cast<Eigen::Index>(e.dim());
  if (k == d) return Subspace::zero(e.ambient_dim());
  const Matrix basis = completed_basis(e.frame());
  return Subspace(Matrix(basis.rightCols(d - k)));
}

Subspace direct_sum(const std::vector<Subspace>& parts) {
  if (parts.empty()) throw Error(ErrorKind::RankDeficient, "direct sum of no subspaces");
  const auto d = static_cast<Eigen::Index>(parts.front().ambient_dim());
  Eigen::Index cols = 0;
  for (const auto& p : parts) {
    require_same_ambient(parts.front(), p, "direct_sum");
    cols += static_cast<Eigen::Index>(p.dim());
  }
  if (cols == 0) return Subspace::zero(parts.front().ambient_dim());
  Matrix stacked(d, cols);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    stacked.middleCols(at, static_cast<Eigen::Index>(p.dim())) = p.frame();
    at += static_cast<Eigen::Index>(p.dim());
  }
  return span(stacked);
}

Subspace image(const Matrix& a, const Subspace& e) {
  if (a.cols() != static_cast<Eigen::Index>(e.ambient_dim())) {
    throw Error(ErrorKind::AmbientMismatch, "matrix does not act on the subspace's ambient space");
  }
  if (e.is_zero()) return Subspace::zero(static_cast<std::size_t>(a.rows()));
  return span(a * e.frame());
}

double containment_residual(const Subspace& inner, const Subspace& outer) {
  require_same_ambient(inner, outer, "containment_residual");
  if (inner.is_zero()) return 0.0;
  if (outer.is_zero()) return 1.0;
  const Matrix residual = inner.frame() - outer.frame() * (outer.frame().transpose() * inner.frame());
  return std::min(1.0, largest_singular_value(residual));
}

double subspace_distance(const Subspace& e, const Subspace& f) {
  require_same_ambient(e, f, "subspace_distance");
  return std::max(containment_residual(e, f), containment_residual(f, e));
}

GraphMap graph_map(const Subspace& e, const Subspace& f) {
  require_same_ambient(e, f, "graph_map");
  if (e.dim() != f.dim() || e.is_zero()) {
    throw Error(ErrorKind::NotTransverse, "graph_map needs subspaces of equal positive dimension");
  }
  const auto d = static_cast<Eigen::Index>(e.ambient_dim());
  const auto k = static_cast<Eigen::Index>(e.dim());
  const Matrix basis = completed_basis(e.frame());
  Matrix complement = basis.rightCols(d - k);
  const Matrix along_e = e.frame().transpose() * f.frame();
  if (smallest_singular_value(along_e) < kRankThreshold) {
    throw Error(ErrorKind::NotTransverse, "F contains a direction orthogonal to E");
  }
  Matrix l = (complement.transpose() * f.frame()) * along_e.inverse();
  const double norm = largest_singular_value(l);
  return GraphMap{e, std::move(complement), std::move(l), norm};
}

double max_pair_cosine(const Subspace& e, const Subspace& f) {
  require_complementary(e, f, "max_pair_cosine");
  return std::clamp(largest_singular_value(e.frame().transpose() * f.frame()), 0.0, 1.0);
}

double splitting_constant(const Subspace& e, const Subspace& f) {
  require_complementary(e, f, "splitting_constant");
  const auto d = static_cast<Eigen::Index>(e.ambient_dim());
  const auto k = static_cast<Eigen::Index>(e.dim());
  Matrix joint(d, d);
  joint << e.frame(), f.frame();
  const Matrix coords = joint.inverse();
  return std::max(largest_singular_value(coords.topRows(k)), largest_singular_value(coords.bottomRows(d - k)));
}

ComponentSplit component_norm_bound(const Subspace& e, const Subspace& f, const Vector& u) {
  const double cosine = max_pair_cosine(e, f);
  if (u.size() != static_cast<Eigen::Index>(e.ambient_dim())) {
    throw Error(ErrorKind::AmbientMismatch, "vector length differs from ambient dimension");
  }
  const double norm_u = u.norm();
  if (norm_u == 0.0) throw Error(ErrorKind::ZeroVector, "cannot decompose the zero vector");
  const auto d = static_cast<Eigen::Index>(e.ambient_dim());
  const auto k = static_cast<Eigen::Index>(e.dim());
  Matrix joint(d, d);
  joint << e.frame(), f.frame();
  const Vector coeff = joint.partialPivLu().solve(u);
  ComponentSplit out;
  out.v = e.frame() * coeff.head(k);
  out.w = f.frame() * coeff.tail(d - k);
  out.ratio = std::max(out.v.norm(), out.w.norm()) / norm_u;
  out.bound = 1.0 / (1.0 - cosine);
  out.within_bound = out.ratio <= out.bound * (1.0 + 1e-12);
  return out;
}

Subspace grassmann_intersect(const Subspace& vplus, const Subspace& vminus) {
  require_same_ambient(vplus, vminus, "grassmann_intersect");
  const auto d = static_cast<long>(vplus.ambient_dim());
  const long r = static_cast<long>(vplus.dim()) + static_cast<long>(vminus.dim()) - d;
  if (r < 0) {
    throw Error(ErrorKind::NotGeneralPosition, "dimensions sum to less than the ambient dimension");
  }
  const Subspace minus_perp = orthogonal_complement(vminus);
  if (minus_perp.is_zero()) return vplus;
  // x = Q+ c lies in V- iff (V-)^perp^T Q+ c = 0.
  const Matrix constraints = minus_perp.frame().transpose() * vplus.frame();
  Eigen::JacobiSVD<Matrix> svd(constraints, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double smallest = s.size() == 0 ? 1.0 : s(s.size() - 1);
  if (smallest < kRankThreshold) {
    throw Error(ErrorKind::NotGeneralPosition,
                "intersection dimension exceeds " + std::to_string(r) + " (singular value " +
                    std::to_string(smallest) + ")");
  }
  if (r == 0) return Subspace::zero(vplus.ambient_dim());
  const Matrix null = svd.matrixV().rightCols(r);
  Matrix frame = vplus.frame() * null;
  // Re-orthonormalize to shed roundoff from the two products.
  return span(frame);
}

}  // namespace osl

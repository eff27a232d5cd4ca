#ifndef OSL_GRASSMANN_HPP
#define OSL_GRASSMANN_HPP

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace osl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Singular values below this count as zero in rank, transversality and
/// general-position tests.
inline constexpr double kRankThreshold = 1e-8;
/// Relative tolerance for linear independence in `orthonormalize`.
inline constexpr double kIndependenceThreshold = 1e-10;
inline constexpr double kFrameTolerance = 1e-12;

/// A linear subspace of R^d held as a d x k matrix with orthonormal columns.
///
/// The zero subspace (k = 0) exists only as the certificate returned by
/// `grassmann_intersect` for a transverse pair; every other constructor
/// requires 1 <= k <= d.
class Subspace {
 public:
  /// Wraps a frame that is already orthonormal; throws RankDeficient otherwise.
  explicit Subspace(Matrix frame);

  static Subspace zero(std::size_t ambient_dim);
  static Subspace whole(std::size_t ambient_dim);
  /// span{e_i : i in indices}
  static Subspace coordinate(std::size_t ambient_dim, std::initializer_list<std::size_t> indices);

  std::size_t ambient_dim() const noexcept { return ambient_dim_; }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(frame_.cols()); }
  bool is_zero() const noexcept { return frame_.cols() == 0; }
  const Matrix& frame() const noexcept { return frame_; }

  /// Orthogonal projector Q Q^T.
  Matrix projector() const;

 private:
  Subspace(std::size_t ambient_dim, Matrix frame, bool /*unchecked*/);

  std::size_t ambient_dim_;
  Matrix frame_;
};

/// Graph representation of F over E: F = {u + L u : u in E}, L : E -> E^perp.
struct GraphMap {
  Subspace base;
  /// Orthonormal frame of E^perp used for the codomain coordinates.
  Matrix complement_frame;
  /// (d-k) x k matrix of L in the frames of E and E^perp.
  Matrix map_matrix;
  double operator_norm = 0.0;

  /// L as a d x d operator on R^d (zero on E^perp).
  Matrix ambient() const;
};

/// Decomposition u = v + w along a complementary pair.
struct ComponentSplit {
  Vector v;
  Vector w;
  double ratio = 0.0;       ///< max(|v|, |w|) / |u|
  double bound = 0.0;       ///< 1 / (1 - max_pair_cosine(E, F))
  bool within_bound = false;
};

Subspace orthonormalize(const std::vector<Vector>& vectors);
/// Span of the columns of `columns`; the first j output columns span the
/// first j inputs.
Subspace span(const Matrix& columns);

Subspace orthogonal_complement(const Subspace& e);
Subspace direct_sum(const std::vector<Subspace>& parts);
/// Orthonormalized image A E; throws RankDeficient if A collapses E.
Subspace image(const Matrix& a, const Subspace& e);

/// Hausdorff-type distance: the larger of sup_{v in E, |v|=1} dist(v, F) and
/// the same with E and F swapped. Dimensions may differ.
double subspace_distance(const Subspace& e, const Subspace& f);

/// sup_{v in inner, |v|=1} dist(v, outer); zero iff inner is contained in outer.
double containment_residual(const Subspace& inner, const Subspace& outer);

GraphMap graph_map(const Subspace& e, const Subspace& f);

/// Largest |<v, w>| over unit v in E, w in F; E and F must be complementary.
double max_pair_cosine(const Subspace& e, const Subspace& f);

/// Norms of the oblique projections onto E along F and onto F along E; their
/// maximum is the smallest d with max(|v|,|w|) <= d |v + w|.
double splitting_constant(const Subspace& e, const Subspace& f);

ComponentSplit component_norm_bound(const Subspace& e, const Subspace& f, const Vector& u);

/// Intersection of a pair in general position (dimension k+ + k- - d).
/// Returns `Subspace::zero` when that dimension is 0.
Subspace grassmann_intersect(const Subspace& vplus, const Subspace& vminus);

}  // namespace osl

#endif  // OSL_GRASSMANN_HPP

#pragma once

#include <cstddef>
#include <vector>

namespace fedsim {

/// Flat parameter-delta vector. Every client update, global update and
/// weight vector in the simulator uses this representation.
using UpdateVector = std::vector<double>;

UpdateVector add(const UpdateVector& a, const UpdateVector& b);
UpdateVector subtract(const UpdateVector& a, const UpdateVector& b);
UpdateVector scale(const UpdateVector& a, double c);

/// Euclidean (L2) norm.
double norm(const UpdateVector& a);

/// Standard dot product. Dimensions must match.
double inner(const UpdateVector& a, const UpdateVector& b);

/// Angle between two non-zero vectors, in degrees within [0, 180].
double angle_degrees(const UpdateVector& a, const UpdateVector& b);

/// Coordinate-wise median. Even counts take the mean of the two middle
/// values per coordinate.
UpdateVector marginal_median(const std::vector<UpdateVector>& updates);

/// Median of the L2 norms of the given updates (even counts: mean of the
/// two middle values).
double median_norm(const std::vector<UpdateVector>& updates);

/// Sum of Euclidean distances from x to every point; the objective the
/// geometric median minimizes.
double sum_of_distances(const UpdateVector& x, const std::vector<UpdateVector>& points);

/// Geometric median via a smoothed Weiszfeld iteration, initialized at the
/// coordinate mean. Stops when the step norm drops below tol or after
/// max_iter iterations.
UpdateVector geometric_median(const std::vector<UpdateVector>& points,
                              double tol = 1e-9, int max_iter = 1000);

bool all_finite(const UpdateVector& a);

}  // namespace fedsim

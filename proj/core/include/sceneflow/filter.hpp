#pragma once

#include <cstdint>
#include <vector>

#include "sceneflow/geometry.hpp"
#include "sceneflow/matcher.hpp"
#include "sceneflow/sgm.hpp"

namespace sceneflow {

/// Scene flow field whose reference view is right1, computed by matching the
/// horizontally mirrored quad (right1, left1, right0, left0) and mirroring
/// the result back.  Time and viewpoint are both swapped.
SceneFlowField inverse_field(const StereoQuad& images, const MatcherOptions& options);

/// Vector of the forward field at `p` predicted by the inverse field vector
/// found at the forward correspondence in right1.
SceneFlowVector forward_from_inverse(const SceneFlowVector& inverse);

/// Dense match state over the reference grid.
struct MatchSet {
  Grid<SceneFlowVector> vectors;  // forward vectors at every pixel
  Grid<double> error;             // max consistency deviation, +inf if unknown
  Grid<std::uint8_t> kept;

  std::size_t kept_count() const;
};

/// Follows each forward vector into right1, reads the inverse field at the
/// nearest pixel and compares all four components mapped back into the
/// forward frame.  Matches deviating by more than `tau` in any component, or
/// with any of the three correspondences outside the image, are removed.
MatchSet consistency_filter(const SceneFlowField& forward,
                            const SceneFlowField& inverse, double tau);

struct RegionStats {
  int regions = 0;
  int deleted_regions = 0;
  int readmitted = 0;
};

/// Groups kept matches into 4-connected regions of similar vectors (every
/// component within `tolerance` of the neighbor that reached it), growing
/// through removed matches that satisfy the same rule.  Regions smaller than
/// `min_size` are deleted; removed matches absorbed by a surviving region
/// are restored unless a correspondence lies outside the image.
MatchSet region_filter(const MatchSet& matches, double tolerance, int min_size,
                       RegionStats* stats = nullptr);

/// Geometry-only candidates: d0 and its consistency error per pixel.
struct GeometryCandidates {
  Grid<double> d0;
  Grid<double> error;  // +inf where no candidate
  Grid<std::uint8_t> from_fill;

  std::size_t count() const;
};

/// Joint matches become geometry candidates as they are; any other pixel
/// whose forward d0 agrees with a valid SGM disparity within `tau` and whose
/// right view correspondence lies in the image is admitted with error
/// |d0 - sgm|.
GeometryCandidates disparity_fill(const MatchSet& joint,
                                  const Grid<SceneFlowVector>& forward,
                                  const DisparityMap& sgm, double tau);

struct MotionSeed {
  int x = 0;
  int y = 0;
  SceneFlowVector vector;
  double error = 0.0;
};

struct GeometrySeed {
  int x = 0;
  int y = 0;
  double d0 = 0.0;
  double error = 0.0;
};

struct SeedSet {
  int width = 0;
  int height = 0;
  std::vector<MotionSeed> motion;
  std::vector<GeometrySeed> geometry;
};

/// Index of the lowest-error candidate in each non-overlapping 3x3 block
/// (ties to the first pixel in row-major order); blocks without candidates
/// yield nothing.  `candidate` marks eligible pixels.
std::vector<std::size_t> select_per_block(const Grid<double>& error,
                                          const Grid<std::uint8_t>& candidate,
                                          int block = 3);

/// Motion seeds are the block winners among joint matches.  A block with a
/// motion seed uses that pixel as its geometry seed; other blocks take the
/// best geometry candidate.
SeedSet sparsify(const MatchSet& joint, const GeometryCandidates& geometry);

}  // namespace sceneflow

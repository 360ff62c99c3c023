#include "sceneflow/metrics.hpp"

#include <cmath>

#include "sceneflow/error.hpp"

namespace sceneflow {
namespace {

OutlierRates rates_over(const OutlierMasks& m, const Grid<std::uint8_t>* select, bool want) {
  OutlierRates r;
  std::size_t d1 = 0, d2 = 0, fl = 0, sf = 0;
  for (std::size_t i = 0; i < m.evaluated.size(); ++i) {
    if (!m.evaluated[i]) continue;
    if (select && ((*select)[i] != 0) != want) continue;
    ++r.pixels;
    d1 += m.d1[i];
    d2 += m.d2[i];
    fl += m.fl[i];
    sf += m.sf[i];
  }
  if (r.pixels > 0) {
    const double n = static_cast<double>(r.pixels);
    r.d1 = d1 / n;
    r.d2 = d2 / n;
    r.fl = fl / n;
    r.sf = sf / n;
  }
  return r;
}

}  // namespace

OutlierMasks outlier_masks(const SceneFlowField& estimate, const SceneFlowField& truth,
                           const Grid<std::uint8_t>& valid) {
  require_same_size(truth.vectors, estimate.vectors, "estimate");
  require_same_size(truth.vectors, valid, "validity mask");
  const int w = truth.width();
  const int h = truth.height();
  OutlierMasks m{Grid<std::uint8_t>(w, h), Grid<std::uint8_t>(w, h), Grid<std::uint8_t>(w, h),
                 Grid<std::uint8_t>(w, h), Grid<std::uint8_t>(w, h)};
  for (std::size_t i = 0; i < valid.size(); ++i) {
    const SceneFlowVector& g = truth.vectors[i];
    if (!valid[i] || !g.valid()) continue;
    m.evaluated[i] = 1;
    const SceneFlowVector& e = estimate.vectors[i];
    if (!e.valid()) {
      m.d1[i] = m.d2[i] = m.fl[i] = m.sf[i] = 1;
      continue;
    }
    m.d1[i] = kitti_outlier(std::abs(e.d0 - g.d0), std::abs(g.d0));
    m.d2[i] = kitti_outlier(std::abs(e.d1 - g.d1), std::abs(g.d1));
    m.fl[i] = kitti_outlier(std::hypot(e.u - g.u, e.v - g.v), std::hypot(g.u, g.v));
    m.sf[i] = m.d1[i] | m.d2[i] | m.fl[i];
  }
  return m;
}

KittiReport kitti_outlier_rate(const SceneFlowField& estimate, const SceneFlowField& truth,
                               const Grid<std::uint8_t>& valid,
                               const Grid<std::uint8_t>* foreground) {
  const OutlierMasks m = outlier_masks(estimate, truth, valid);
  KittiReport report;
  report.all = rates_over(m, nullptr, true);
  if (report.all.pixels == 0) {
    throw_error(ErrorKind::kInvalidArgument, "outlier rate: no valid ground truth pixels");
  }
  if (foreground) {
    require_same_size(truth.vectors, *foreground, "foreground mask");
    const OutlierRates bg = rates_over(m, foreground, false);
    const OutlierRates fg = rates_over(m, foreground, true);
    if (bg.pixels > 0) report.background = bg;
    if (fg.pixels > 0) report.foreground = fg;
  }
  return report;
}

PrecisionRecall precision_recall(const Grid<std::uint8_t>& estimate_moving,
                                 const Grid<std::uint8_t>& truth_moving) {
  require_same_size(truth_moving, estimate_moving, "estimated motion mask");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < truth_moving.size(); ++i) {
    const bool e = estimate_moving[i] != 0;
    const bool g = truth_moving[i] != 0;
    tp += e && g;
    fp += e && !g;
    fn += !e && g;
  }
  PrecisionRecall pr;
  if (tp + fp > 0) pr.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn > 0) pr.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  return pr;
}

}  // namespace sceneflow

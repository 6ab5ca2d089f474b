#include "liftgeo/eval.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "liftgeo/data.hpp"

namespace liftgeo {

AlignmentResult procrustes_align(const Pose3D& pred, const Pose3D& gt) {
  const Eigen::RowVector3d mu_p = pred.joints.colwise().mean();
  const Eigen::RowVector3d mu_g = gt.joints.colwise().mean();
  const Joints3 pc = pred.joints.rowwise() - mu_p;
  const Joints3 gc = gt.joints.rowwise() - mu_g;
  const double var_g = gc.squaredNorm() / kNumJoints;
  if (!(var_g > 1e-18)) throw DegenerateTarget("ground-truth joints are coincident");
  const double var_p = pc.squaredNorm() / kNumJoints;

  const Eigen::Matrix3d cov = gc.transpose() * pc / kNumJoints;
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Vector3d sign = Eigen::Vector3d::Ones();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) sign(2) = -1.0;

  AlignmentResult out;
  out.rotation = svd.matrixU() * sign.asDiagonal() * svd.matrixV().transpose();
  out.scale = var_p > 0.0 ? svd.singularValues().dot(sign) / var_p : 0.0;
  out.translation = mu_g.transpose() - out.scale * out.rotation * mu_p.transpose();
  out.aligned.joints =
      ((out.scale * pred.joints) * out.rotation.transpose()).rowwise() + out.translation.transpose();
  for (int i = 0; i < kNumJoints; ++i) {
    out.residual[i] = (out.aligned.joints.row(i) - gt.joints.row(i)).norm();
  }
  return out;
}

double mpjpe(const Pose3D& aligned, const Pose3D& gt, double unit_scale) {
  return (aligned.joints - gt.joints).rowwise().norm().mean() * unit_scale;
}

std::vector<double> aligned_joint_errors(std::span<const Pose3D> preds,
                                         std::span<const Pose3D> gts, double unit_scale) {
  if (preds.size() != gts.size()) throw std::invalid_argument("prediction/ground-truth count mismatch");
  std::vector<double> out;
  out.reserve(preds.size() * kNumJoints);
  for (std::size_t k = 0; k < preds.size(); ++k) {
    const AlignmentResult a = procrustes_align(preds[k], gts[k]);
    for (double r : a.residual) out.push_back(r * unit_scale);
  }
  return out;
}

double aligned_mpjpe(std::span<const Pose3D> preds, std::span<const Pose3D> gts, double unit_scale) {
  if (preds.empty()) throw EmptySet("aligned_mpjpe over an empty set");
  const std::vector<double> errs = aligned_joint_errors(preds, gts, unit_scale);
  double sum = 0.0;
  for (double e : errs) sum += e;
  return sum / static_cast<double>(errs.size());
}

PckAuc pck_auc(std::span<const double> joint_errors_mm, double threshold_mm, AucRange range) {
  if (joint_errors_mm.empty()) throw EmptySet("PCK over an empty set");
  if (range.steps < 1) throw std::invalid_argument("AUC sweep needs at least one threshold");
  auto pck_at = [&](double thr) {
    const auto hits = std::count_if(joint_errors_mm.begin(), joint_errors_mm.end(),
                                    [thr](double e) { return e <= thr; });
    return 100.0 * static_cast<double>(hits) / static_cast<double>(joint_errors_mm.size());
  };
  PckAuc out;
  out.pck = pck_at(threshold_mm);
  double acc = 0.0;
  for (int k = 0; k < range.steps; ++k) {
    const double t = range.steps == 1
                         ? range.hi_mm
                         : range.lo_mm + (range.hi_mm - range.lo_mm) * k / (range.steps - 1);
    acc += pck_at(t);
  }
  out.auc = acc / range.steps;
  return out;
}

const RatioSeries& RatioHistogram::limb(const std::string& name) const {
  for (const auto& s : series) {
    if (s.limb == name) return s;
  }
  throw std::out_of_range("no limb series named " + name);
}

RatioHistogram limb_ratio_histogram(std::span<const Pose3D> poses, const JointSchema& schema,
                                    double lo, double hi, int bins) {
  if (!(hi > lo) || bins < 1) throw std::invalid_argument("invalid histogram range");
  RatioHistogram h;
  for (int b = 0; b <= bins; ++b) h.bin_edges.push_back(lo + (hi - lo) * b / bins);
  for (std::size_t l = 0; l < h.series.size(); ++l) {
    const LimbPair& limb = schema.limbs[l];
    RatioSeries& s = h.series[l];
    s.limb = std::string(limb.name);
    s.counts.assign(bins, 0);
    for (std::size_t k = 0; k < poses.size(); ++k) {
      const auto& j = poses[k].joints;
      const double upper = (j.row(limb.upper_to) - j.row(limb.upper_from)).norm();
      const double lower = (j.row(limb.lower_to) - j.row(limb.lower_from)).norm();
      if (!(lower > 1e-12)) {
        throw ZeroLimb("pose " + std::to_string(k) + " has a zero-length " + s.limb + " segment");
      }
      const double r = upper / lower;
      s.ratios.push_back(r);
      // Values within rounding of an edge go to the bin on its right, so an exact 1.0 computed
      // as 0.9999999999999998 still lands in [1.0, ...).
      const int bin =
          std::clamp(static_cast<int>(std::floor((r - lo) / (hi - lo) * bins + 1e-9)), 0, bins - 1);
      ++s.counts[bin];
    }
    if (!s.ratios.empty()) {
      double sum = 0.0;
      for (double r : s.ratios) sum += r;
      s.mean = sum / s.ratios.size();
      double sq = 0.0;
      for (double r : s.ratios) sq += (r - s.mean) * (r - s.mean);
      s.variance = sq / s.ratios.size();
    }
  }
  return h;
}

std::string format_ratio_histogram(const RatioHistogram& h) {
  std::string out = "limb,bin_left,bin_right,count\n";
  for (const auto& s : h.series) {
    for (std::size_t b = 0; b < s.counts.size(); ++b) {
      out += s.limb + ',' + format_number(h.bin_edges[b]) + ',' + format_number(h.bin_edges[b + 1]) +
             ',' + std::to_string(s.counts[b]) + '\n';
    }
  }
  return out;
}

}  // namespace liftgeo

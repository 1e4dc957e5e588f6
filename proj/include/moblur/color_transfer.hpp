#pragma once

#include <Eigen/Dense>

#include "moblur/image.hpp"
#include "moblur/synth.hpp"

namespace moblur {

// First and second moments of an image's channel distribution.
struct ChannelStats {
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
};

// Affine map x -> T (x - mean_src) + mean_ref. For covariance matching T is
// symmetric positive semi-definite.
struct AffineColorMap {
    Eigen::Matrix3d T = Eigen::Matrix3d::Identity();
    Eigen::Vector3d mean_src = Eigen::Vector3d::Zero();
    Eigen::Vector3d mean_ref = Eigen::Vector3d::Zero();
};

// Mean and unbiased covariance, optionally restricted to pixels with mask > 0.5.
ChannelStats channel_stats(const Image& img, const Mask* mask = nullptr);

// Symmetric PSD square root via eigendecomposition; negative eigenvalues clamp to 0.
Eigen::Matrix3d sqrtm_spd(const Eigen::Matrix3d& m);

// Closed-form optimal-transport map between the Gaussian fits of src and ref:
// T = S^-1/2 (S^1/2 R S^1/2)^1/2 S^-1/2 with covariances regularized first.
AffineColorMap mk_transform(const ChannelStats& src, const ChannelStats& ref);

// Per-pixel affine action, floored at 0.
Image apply_color_map(const Image& img, const AffineColorMap& map);

}  // namespace moblur

#include "moblur/color_transfer.hpp"

#include <algorithm>
#include <cmath>

namespace moblur {

ChannelStats channel_stats(const Image& img, const Mask* mask) {
    require(!img.empty(), "channel_stats: empty image");
    if (mask)
        require(mask->width == img.width && mask->height == img.height,
                "channel_stats: mask dimensions differ from image");

    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    std::size_t count = 0;
    const std::size_t n = img.pixel_count();
    for (std::size_t i = 0; i < n; ++i) {
        if (mask && mask->data[i] <= 0.5) continue;
        sum += Eigen::Vector3d(img.data[i * 3], img.data[i * 3 + 1], img.data[i * 3 + 2]);
        ++count;
    }
    if (count < 16)
        throw InsufficientDataError("channel_stats: fewer than 16 pixels selected (" +
                                    std::to_string(count) + ")");

    ChannelStats stats;
    stats.mean = sum / static_cast<double>(count);
    Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
    for (std::size_t i = 0; i < n; ++i) {
        if (mask && mask->data[i] <= 0.5) continue;
        Eigen::Vector3d d(img.data[i * 3], img.data[i * 3 + 1], img.data[i * 3 + 2]);
        d -= stats.mean;
        scatter += d * d.transpose();
    }
    stats.cov = scatter / static_cast<double>(count - 1);
    return stats;
}

Eigen::Matrix3d sqrtm_spd(const Eigen::Matrix3d& m) {
    require((m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-9,
            "sqrtm_spd: matrix is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(m);
    Eigen::Vector3d values = eig.eigenvalues().cwiseMax(0.0);
    return eig.eigenvectors() * values.cwiseSqrt().asDiagonal() *
           eig.eigenvectors().transpose();
}

AffineColorMap mk_transform(const ChannelStats& src, const ChannelStats& ref) {
    auto regularize = [](Eigen::Matrix3d cov) {
        Eigen::Matrix3d sym = 0.5 * (cov + cov.transpose());
        double eps = 1e-6 * sym.trace() / 3.0 + 1e-12;
        return Eigen::Matrix3d(sym + eps * Eigen::Matrix3d::Identity());
    };
    Eigen::Matrix3d cov_src = regularize(src.cov);
    Eigen::Matrix3d cov_ref = regularize(ref.cov);

    Eigen::Matrix3d src_half = sqrtm_spd(cov_src);
    Eigen::Matrix3d src_half_inv = src_half.inverse();
    Eigen::Matrix3d inner = sqrtm_spd(src_half * cov_ref * src_half);

    AffineColorMap map;
    map.T = src_half_inv * inner * src_half_inv;
    map.T = 0.5 * (map.T + map.T.transpose());
    map.mean_src = src.mean;
    map.mean_ref = ref.mean;
    return map;
}

Image apply_color_map(const Image& img, const AffineColorMap& map) {
    require(!img.empty(), "apply_color_map: empty image");
    Image out(img.width, img.height);
    const std::size_t n = img.pixel_count();
    for (std::size_t i = 0; i < n; ++i) {
        Eigen::Vector3d x(img.data[i * 3], img.data[i * 3 + 1], img.data[i * 3 + 2]);
        Eigen::Vector3d y = map.T * (x - map.mean_src) + map.mean_ref;
        out.data[i * 3] = std::max(0.0, y[0]);
        out.data[i * 3 + 1] = std::max(0.0, y[1]);
        out.data[i * 3 + 2] = std::max(0.0, y[2]);
    }
    return out;
}

}  // namespace moblur

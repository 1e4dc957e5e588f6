#include "moblur/hdr.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace moblur {

void validate_stack(const ExposureStack& stack) {
    require(stack.images.size() >= 2, "ExposureStack: need at least 2 images");
    require(stack.images.size() == stack.evs.size(),
            "ExposureStack: image and ev counts differ");
    for (const Image& img : stack.images)
        require(img.same_size(stack.images[0]) && !img.empty(),
                "ExposureStack: image dimensions differ");
    for (std::size_t j = 1; j < stack.evs.size(); ++j)
        require(stack.evs[j] > stack.evs[j - 1], "ExposureStack: evs must strictly increase");
}

ExposureStack build_stack_from_compensation(const Image& raw, const Image& compensated,
                                            std::optional<double> ev_gap,
                                            std::vector<std::string>* warnings) {
    require(raw.same_size(compensated), "build_stack_from_compensation: dimensions differ");

    double gap;
    if (ev_gap) {
        require(*ev_gap > 0, "build_stack_from_compensation: ev_gap must be positive");
        gap = *ev_gap;
    } else {
        Plane lum_raw = luminance(raw);
        Plane lum_comp = luminance(compensated);
        double mean_raw = 0.0, mean_comp = 0.0;
        for (double v : lum_raw.data) mean_raw += v;
        for (double v : lum_comp.data) mean_comp += v;
        mean_raw /= static_cast<double>(lum_raw.data.size());
        mean_comp /= static_cast<double>(lum_comp.data.size());
        if (mean_raw <= 0)
            throw ContractError("build_stack_from_compensation: raw image has zero luminance");
        gap = std::log2(mean_comp / mean_raw);
        if (gap < 1e-3) {
            if (warnings)
                warnings->push_back(
                    "exposure stack is nearly degenerate: estimated ev gap " +
                    std::to_string(gap));
            gap = std::max(gap, 1e-6);
        }
    }

    ExposureStack stack;
    stack.images = {raw, compensated};
    stack.evs = {-gap, 0.0};
    return stack;
}

int pixel_code(double value) {
    return static_cast<int>(std::lround(255.0 * std::clamp(value, 0.0, 1.0)));
}

double hat_weight(int code) {
    return static_cast<double>(std::min(code, 255 - code));
}

namespace {

// Pool-adjacent-violators pass, then re-pivot at code 128.
void isotonic_pivot(std::array<double, 256>& g) {
    std::array<double, 256> value{};
    std::array<double, 256> weight{};
    std::array<int, 256> count{};
    int blocks = 0;
    for (int z = 0; z < 256; ++z) {
        value[blocks] = g[static_cast<std::size_t>(z)];
        weight[blocks] = 1.0;
        count[blocks] = 1;
        ++blocks;
        while (blocks > 1 && value[blocks - 2] > value[blocks - 1]) {
            double w = weight[blocks - 2] + weight[blocks - 1];
            value[blocks - 2] =
                (value[blocks - 2] * weight[blocks - 2] + value[blocks - 1] * weight[blocks - 1]) /
                w;
            weight[blocks - 2] = w;
            count[blocks - 2] += count[blocks - 1];
            --blocks;
        }
    }
    int z = 0;
    for (int b = 0; b < blocks; ++b)
        for (int k = 0; k < count[b]; ++k) g[static_cast<std::size_t>(z++)] = value[b];
    double pivot = g[128];
    for (double& v : g) v -= pivot;
}

struct SampleSite {
    int x, y;
};

std::vector<SampleSite> sample_grid(const ExposureStack& stack, int n_samples) {
    const int width = stack.images[0].width;
    const int height = stack.images[0].height;
    const double aspect = static_cast<double>(width) / height;
    int nx = std::max(1, static_cast<int>(std::lround(std::sqrt(n_samples * aspect))));
    int ny = std::max(1, (n_samples + nx - 1) / nx);
    while (nx * ny < n_samples) ++ny;

    std::vector<SampleSite> sites;
    sites.reserve(static_cast<std::size_t>(n_samples));
    for (int j = 0; j < ny && static_cast<int>(sites.size()) < n_samples; ++j) {
        for (int i = 0; i < nx && static_cast<int>(sites.size()) < n_samples; ++i) {
            int x = std::min(width - 1, static_cast<int>((i + 0.5) * width / nx));
            int y = std::min(height - 1, static_cast<int>((j + 0.5) * height / ny));
            bool usable = false;
            for (const Image& img : stack.images) {
                for (int c = 0; c < 3 && !usable; ++c) {
                    int z = pixel_code(img.at(x, y, c));
                    if (z > 0 && z < 255) usable = true;
                }
                if (usable) break;
            }
            if (usable) sites.push_back({x, y});
        }
    }
    return sites;
}

}  // namespace

ResponseCurve recover_response(const ExposureStack& stack, int n_samples, double lambda) {
    validate_stack(stack);
    require(n_samples >= 1, "recover_response: n_samples must be positive");
    require(lambda >= 0, "recover_response: lambda must be non-negative");
    const int n_images = static_cast<int>(stack.images.size());
    if (static_cast<long>(n_samples) * (n_images - 1) < 256)
        throw ContractError(
            "recover_response: underdetermined system, need n_samples * (images - 1) >= 256");

    std::vector<SampleSite> sites = sample_grid(stack, n_samples);
    if (static_cast<long>(sites.size()) * (n_images - 1) < 256)
        throw ContractError("recover_response: too few usable sample sites (" +
                            std::to_string(sites.size()) + ")");
    const int n_sites = static_cast<int>(sites.size());

    ResponseCurve curve;
    const int unknowns = 256 + n_sites;
    const int rows = n_sites * n_images + 254 + 1;

    for (int c = 0; c < 3; ++c) {
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows, unknowns);
        Eigen::VectorXd b = Eigen::VectorXd::Zero(rows);
        int row = 0;
        for (int i = 0; i < n_sites; ++i) {
            for (int j = 0; j < n_images; ++j) {
                int z = pixel_code(stack.images[static_cast<std::size_t>(j)].at(
                    sites[static_cast<std::size_t>(i)].x, sites[static_cast<std::size_t>(i)].y,
                    c));
                double w = hat_weight(z);
                if (w <= 0) continue;
                a(row, z) = w;
                a(row, 256 + i) = -w;
                b(row) = w * stack.evs[static_cast<std::size_t>(j)] * std::numbers::ln2;
                ++row;
            }
        }
        for (int z = 1; z <= 254; ++z) {
            double w = lambda * hat_weight(z);
            a(row, z - 1) = w;
            a(row, z) = -2.0 * w;
            a(row, z + 1) = w;
            ++row;
        }
        a(row, 128) = 1.0;  // pivot
        ++row;

        Eigen::VectorXd x = (a.topRows(row).transpose() * a.topRows(row))
                                .ldlt()
                                .solve(a.topRows(row).transpose() * b.topRows(row));
        auto& g = curve.log_exposure[static_cast<std::size_t>(c)];
        for (int z = 0; z < 256; ++z) g[static_cast<std::size_t>(z)] = x(z);
        isotonic_pivot(g);
    }
    return curve;
}

ResponseCurve linear_response() {
    ResponseCurve curve;
    for (auto& g : curve.log_exposure)
        for (int z = 0; z < 256; ++z)
            g[static_cast<std::size_t>(z)] = std::log(std::max(z, 1) * (1.0 / 128.0));
    return curve;
}

RadianceMap merge_radiance(const ExposureStack& stack, const ResponseCurve& response) {
    require(stack.images.size() >= 1, "merge_radiance: empty stack");
    require(stack.images.size() == stack.evs.size(),
            "merge_radiance: image and ev counts differ");
    for (const Image& img : stack.images)
        require(img.same_size(stack.images[0]), "merge_radiance: image dimensions differ");

    const std::size_t n_images = stack.images.size();
    std::vector<double> log_dt(n_images);
    for (std::size_t j = 0; j < n_images; ++j)
        log_dt[j] = stack.evs[j] * std::numbers::ln2;
    const std::size_t middle = n_images / 2;

    const Image& first = stack.images[0];
    RadianceMap out(first.width, first.height);
    const std::size_t n = first.pixel_count();
    for (std::size_t i = 0; i < n; ++i) {
        for (int c = 0; c < 3; ++c) {
            const auto& g = response.log_exposure[static_cast<std::size_t>(c)];
            std::size_t k = i * 3 + static_cast<std::size_t>(c);
            double num = 0.0, den = 0.0;
            for (std::size_t j = 0; j < n_images; ++j) {
                int z = pixel_code(stack.images[j].data[k]);
                double w = hat_weight(z);
                num += w * (g[static_cast<std::size_t>(z)] - log_dt[j]);
                den += w;
            }
            double log_e;
            if (den > 0) {
                log_e = num / den;
            } else {
                int z = pixel_code(stack.images[middle].data[k]);
                log_e = g[static_cast<std::size_t>(z)] - log_dt[middle];
            }
            out.data[k] = std::exp(log_e);
        }
    }
    return out;
}

Image tone_map(const RadianceMap& radiance, double key, double white) {
    require(!radiance.empty(), "tone_map: empty radiance map");
    require(key > 0, "tone_map: key must be positive");
    require(white > 0, "tone_map: white must be positive");

    Plane lum = luminance(radiance);
    double log_sum = 0.0;
    for (double v : lum.data) log_sum += std::log(std::max(v, 1e-12));
    double log_avg = std::exp(log_sum / static_cast<double>(lum.data.size()));
    double scale = key / log_avg;

    Image out(radiance.width, radiance.height);
    const double inv_white2 = 1.0 / (white * white);
    for (std::size_t i = 0; i < lum.data.size(); ++i) {
        double l = lum.data[i];
        double ls = scale * l;
        double ld = ls * (1.0 + ls * inv_white2) / (1.0 + ls);
        double ratio = l > 1e-12 ? ld / l : 0.0;
        for (int c = 0; c < 3; ++c) {
            std::size_t k = i * 3 + static_cast<std::size_t>(c);
            out.data[k] = std::clamp(radiance.data[k] * ratio, 0.0, 1.0);
        }
    }
    return out;
}

double default_white(const RadianceMap& radiance, double key, double percentile) {
    require(percentile > 0 && percentile <= 100, "default_white: bad percentile");
    Plane lum = luminance(radiance);
    double log_sum = 0.0;
    for (double v : lum.data) log_sum += std::log(std::max(v, 1e-12));
    double log_avg = std::exp(log_sum / static_cast<double>(lum.data.size()));
    double scale = key / log_avg;

    std::vector<double> scaled(lum.data.size());
    for (std::size_t i = 0; i < lum.data.size(); ++i) scaled[i] = scale * lum.data[i];
    auto nth = scaled.begin() +
               static_cast<std::ptrdiff_t>((percentile / 100.0) * (scaled.size() - 1));
    std::nth_element(scaled.begin(), nth, scaled.end());
    return std::max(*nth, 1e-6);
}

}  // namespace moblur

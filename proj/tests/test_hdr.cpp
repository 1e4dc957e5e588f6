#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "moblur/hdr.hpp"
#include "moblur/synth.hpp"
#include "test_support.hpp"

using namespace moblur;
using test::Rng;

namespace {

// Forward camera simulation: codes = quantize(clamp(E * 2^ev)), linear sensor.
Image expose_linear(const Image& radiance, double ev) {
    Image out(radiance.width, radiance.height);
    double gain = std::exp2(ev);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        int code = pixel_code(radiance.data[i] * gain);
        out.data[i] = code / 255.0;
    }
    return out;
}

// Radiance field with a wide dynamic range that still leaves most pixels
// unsaturated somewhere in a -2/0/+2 stack.
Image synthetic_radiance(int w, int h, std::uint64_t seed) {
    Image texture = value_noise_texture(w, h, seed);
    Image out(w, h);
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = 0.02 + 3.0 * std::pow(texture.data[i], 2.0);
    return out;
}

bool is_monotone(const std::array<double, 256>& g) {
    for (int z = 1; z < 256; ++z)
        if (g[static_cast<std::size_t>(z)] < g[static_cast<std::size_t>(z - 1)]) return false;
    return true;
}

}  // namespace

TEST_CASE("build_stack_from_compensation estimates the ev gap") {
    Rng rng(3);
    Image raw = test::random_image(16, 16, rng, 0.02, 0.2);
    Image compensated = raw;
    for (double& v : compensated.data) v *= 4.0;
    ExposureStack stack = build_stack_from_compensation(raw, compensated);
    REQUIRE(stack.evs.size() == 2);
    CHECK(stack.evs[0] == doctest::Approx(-2.0).epsilon(1e-9));
    CHECK(stack.evs[1] == 0.0);

    ExposureStack explicit_gap = build_stack_from_compensation(raw, compensated, 2.0);
    CHECK(explicit_gap.evs[0] == -2.0);
    validate_stack(explicit_gap);
}

TEST_CASE("degenerate compensation stack warns") {
    Rng rng(5);
    Image raw = test::random_image(8, 8, rng, 0.1, 0.4);
    std::vector<std::string> warnings;
    ExposureStack stack = build_stack_from_compensation(raw, raw, std::nullopt, &warnings);
    CHECK(!warnings.empty());
    validate_stack(stack);  // still strictly increasing thanks to the floor

    Image zero(8, 8, 0.0);
    CHECK_THROWS_AS(build_stack_from_compensation(zero, raw), ContractError);
}

TEST_CASE("hat weighting endpoints and peak") {
    CHECK(hat_weight(0) == 0.0);
    CHECK(hat_weight(255) == 0.0);
    CHECK(hat_weight(127) == 127.0);
    CHECK(hat_weight(128) == 127.0);
    for (int z = 1; z < 255; ++z) CHECK(hat_weight(z) > 0.0);
}

TEST_CASE("recover_response on a simulated linear camera") {
    Image radiance = synthetic_radiance(64, 64, 7);
    ExposureStack stack;
    stack.evs = {-2.0, 0.0, 2.0};
    for (double ev : stack.evs) stack.images.push_back(expose_linear(radiance, ev));

    ResponseCurve curve = recover_response(stack, 200, 50.0);
    for (int c = 0; c < 3; ++c) {
        const auto& g = curve.log_exposure[static_cast<std::size_t>(c)];
        CHECK(g[128] == 0.0);
        CHECK(is_monotone(g));
        double rms = 0.0;
        int count = 0;
        for (int z = 30; z <= 225; ++z) {
            double diff = g[static_cast<std::size_t>(z)] - std::log(z / 128.0);
            rms += diff * diff;
            ++count;
        }
        CHECK(std::sqrt(rms / count) <= 0.05);
    }
}

TEST_CASE("recover_response rejects underdetermined systems") {
    Image radiance = synthetic_radiance(32, 32, 9);
    ExposureStack stack;
    stack.evs = {-1.0, 1.0};
    for (double ev : stack.evs) stack.images.push_back(expose_linear(radiance, ev));
    CHECK_THROWS_AS(recover_response(stack, 100, 50.0), ContractError);  // 100 * 1 < 256
}

TEST_CASE("linear_response is monotone with zero pivot") {
    ResponseCurve curve = linear_response();
    for (const auto& g : curve.log_exposure) {
        CHECK(g[128] == doctest::Approx(0.0));
        CHECK(is_monotone(g));
        CHECK(std::isfinite(g[0]));
    }
}

TEST_CASE("merge_radiance recovers the simulated scene within 2 percent") {
    Image radiance = synthetic_radiance(64, 64, 11);
    ExposureStack stack;
    stack.evs = {-2.0, 0.0, 2.0};
    for (double ev : stack.evs) stack.images.push_back(expose_linear(radiance, ev));

    RadianceMap merged = merge_radiance(stack, linear_response());

    // The linear response pivots at code 128 so the merge carries a global
    // scale of 255/128 relative to the simulated radiance. Compare where the
    // middle exposure is informative.
    double worst = 0.0;
    std::size_t checked = 0;
    for (std::size_t i = 0; i < radiance.data.size(); ++i) {
        int code0 = pixel_code(radiance.data[i]);
        if (code0 < 30 || code0 > 225) continue;
        double scaled = merged.data[i] * (128.0 / 255.0);
        double rel = std::abs(scaled - radiance.data[i]) / radiance.data[i];
        worst = std::max(worst, rel);
        ++checked;
    }
    CHECK(checked > 1000);
    CHECK(worst <= 0.02);
}

TEST_CASE("merge_radiance leans on the short exposure at saturated pixels") {
    // One pixel saturated in the long exposure, informative in the short one.
    Image short_img(8, 8, 0.5);
    Image long_img(8, 8, 1.0);  // code 255, hat weight 0
    ExposureStack stack;
    stack.images = {short_img, long_img};
    stack.evs = {0.0, 2.0};
    RadianceMap merged = merge_radiance(stack, linear_response());
    double expected_short = std::exp(std::log(pixel_code(0.5) / 128.0));
    CHECK(merged.at(4, 4, 0) == doctest::Approx(expected_short).epsilon(0.05));
}

TEST_CASE("merge of two identical same-ev images equals the single estimate") {
    Rng rng(13);
    Image img = test::random_image(8, 8, rng, 0.1, 0.8);
    ExposureStack stack;
    stack.images = {img, img};
    stack.evs = {0.0, 0.0};  // degenerate on purpose; merge itself allows it
    RadianceMap merged = merge_radiance(stack, linear_response());
    ExposureStack single;
    single.images = {img};
    single.evs = {0.0};
    RadianceMap alone = merge_radiance(single, linear_response());
    CHECK(test::max_abs_diff(merged, alone) < 1e-12);
}

TEST_CASE("ev shift rescales radiance by exactly the exposure factor") {
    Image radiance = synthetic_radiance(32, 32, 17);
    ExposureStack stack;
    stack.evs = {-2.0, 0.0, 2.0};
    for (double ev : stack.evs) stack.images.push_back(expose_linear(radiance, ev));
    RadianceMap base = merge_radiance(stack, linear_response());

    ExposureStack shifted = stack;
    for (double& ev : shifted.evs) ev += 1.0;
    RadianceMap scaled = merge_radiance(shifted, linear_response());

    // Claiming one stop more exposure for the same codes halves the estimate.
    for (std::size_t i = 0; i < base.data.size(); ++i)
        CHECK(scaled.data[i] == doctest::Approx(0.5 * base.data[i]).epsilon(1e-12));
}

TEST_CASE("full round trip: recover then merge within 3 percent median") {
    Image radiance = synthetic_radiance(64, 64, 19);
    ExposureStack stack;
    stack.evs = {-2.0, 0.0, 2.0};
    for (double ev : stack.evs) stack.images.push_back(expose_linear(radiance, ev));

    ResponseCurve curve = recover_response(stack, 200, 50.0);
    RadianceMap merged = merge_radiance(stack, curve);

    // The pivot fixes scale at code 128 <-> radiance 128/255; compare shapes
    // via relative error after a global scale fit on unsaturated pixels.
    std::vector<double> ratios;
    for (std::size_t i = 0; i < radiance.data.size(); ++i) {
        int code0 = pixel_code(radiance.data[i]);
        if (code0 < 30 || code0 > 225) continue;
        ratios.push_back(merged.data[i] / radiance.data[i]);
    }
    REQUIRE(ratios.size() > 1000);
    std::nth_element(ratios.begin(), ratios.begin() + static_cast<std::ptrdiff_t>(ratios.size() / 2),
                     ratios.end());
    double scale = ratios[ratios.size() / 2];
    std::vector<double> rel;
    for (std::size_t i = 0; i < radiance.data.size(); ++i) {
        int code0 = pixel_code(radiance.data[i]);
        if (code0 < 30 || code0 > 225) continue;
        rel.push_back(std::abs(merged.data[i] / scale - radiance.data[i]) / radiance.data[i]);
    }
    std::nth_element(rel.begin(), rel.begin() + static_cast<std::ptrdiff_t>(rel.size() / 2),
                     rel.end());
    CHECK(rel[rel.size() / 2] <= 0.03);
}

TEST_CASE("tone_map basics") {
    Image flat(8, 8, 0.7);
    Image mapped = tone_map(flat, 0.18, 1.0);
    for (std::size_t i = 1; i < mapped.data.size(); ++i)
        CHECK(mapped.data[i] == doctest::Approx(mapped.data[0]));

    // Exposure invariance: scaling the radiance does not change the output.
    Rng rng(23);
    Image radiance = test::random_image(16, 16, rng, 0.05, 4.0);
    Image bright = radiance;
    for (double& v : bright.data) v *= 10.0;
    Image a = tone_map(radiance, 0.18, 2.0);
    Image b = tone_map(bright, 0.18, 2.0);
    CHECK(test::max_abs_diff(a, b) < 1e-6);
}

TEST_CASE("tone_map matches the hand-evaluated operator on a tiny map") {
    Image radiance(3, 1);
    double vals[3] = {0.1, 1.0, 4.0};
    for (int x = 0; x < 3; ++x)
        for (int c = 0; c < 3; ++c) radiance.at(x, 0, c) = vals[x];
    const double key = 0.18, white = 2.0;
    Image mapped = tone_map(radiance, key, white);

    // Hand evaluation: gray pixels, so luminance equals the channel value.
    double log_avg = std::exp((std::log(0.1) + std::log(1.0) + std::log(4.0)) / 3.0);
    for (int x = 0; x < 3; ++x) {
        double ls = key / log_avg * vals[x];
        double ld = ls * (1.0 + ls / (white * white)) / (1.0 + ls);
        double expected = std::min(1.0, vals[x] * (ld / vals[x]));
        CHECK(mapped.at(x, 0, 1) == doctest::Approx(expected).epsilon(1e-9));
    }
}

TEST_CASE("default_white tracks the luminance percentile") {
    Rng rng(29);
    Image radiance = test::random_image(32, 32, rng, 0.1, 2.0);
    double white = default_white(radiance, 0.18);
    CHECK(white > 0.0);
    Image mapped = tone_map(radiance, 0.18, white);
    for (double v : mapped.data) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("validate_stack rejects malformed stacks") {
    Rng rng(31);
    Image img = test::random_image(8, 8, rng);
    ExposureStack stack;
    stack.images = {img};
    stack.evs = {0.0};
    CHECK_THROWS_AS(validate_stack(stack), ContractError);

    stack.images = {img, img};
    stack.evs = {0.0, 0.0};
    CHECK_THROWS_AS(validate_stack(stack), ContractError);

    stack.evs = {0.0, -1.0};
    CHECK_THROWS_AS(validate_stack(stack), ContractError);
}

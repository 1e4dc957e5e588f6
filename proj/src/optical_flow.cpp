#include "moblur/optical_flow.hpp"

#include <algorithm>
#include <cmath>

namespace moblur {

void FlowParams::validate() const {
    require(pyramid_levels >= 1, "FlowParams: pyramid_levels must be at least 1");
    require(pyramid_scale > 0.0 && pyramid_scale < 1.0,
            "FlowParams: pyramid_scale must lie in (0, 1)");
    require(window >= 1 && window % 2 == 1, "FlowParams: window must be odd and positive");
    require(iterations >= 1, "FlowParams: iterations must be at least 1");
    require(poly_n >= 5 && poly_n % 2 == 1, "FlowParams: poly_n must be odd and at least 5");
    require(poly_sigma > 0.0, "FlowParams: poly_sigma must be positive");
}

namespace {

// Horizontal then vertical correlation with a short symmetric-support kernel.
// Offsets run over [-r, r]; border handling is Replicate.
Plane correlate_rows(const Plane& in, const std::vector<double>& k) {
    const int r = static_cast<int>(k.size() / 2);
    Plane out(in.width, in.height);
    for (int y = 0; y < in.height; ++y) {
        for (int x = 0; x < in.width; ++x) {
            double acc = 0.0;
            for (int t = -r; t <= r; ++t)
                acc += k[static_cast<std::size_t>(t + r)] *
                       in.sample(x + t, y, BorderPolicy::Replicate);
            out.at(x, y) = acc;
        }
    }
    return out;
}

Plane correlate_cols(const Plane& in, const std::vector<double>& k) {
    const int r = static_cast<int>(k.size() / 2);
    Plane out(in.width, in.height);
    for (int y = 0; y < in.height; ++y) {
        for (int x = 0; x < in.width; ++x) {
            double acc = 0.0;
            for (int t = -r; t <= r; ++t)
                acc += k[static_cast<std::size_t>(t + r)] *
                       in.sample(x, y + t, BorderPolicy::Replicate);
            out.at(x, y) = acc;
        }
    }
    return out;
}

struct Applicability {
    std::vector<double> g, tg, ttg;  // g(t), t*g(t), t^2*g(t) over [-r, r]
    double s00, s20, s40, s22;       // moments of the 2-D applicability
};

Applicability make_applicability(int poly_n, double sigma) {
    const int r = (poly_n - 1) / 2;
    Applicability a;
    a.g.resize(static_cast<std::size_t>(poly_n));
    a.tg.resize(static_cast<std::size_t>(poly_n));
    a.ttg.resize(static_cast<std::size_t>(poly_n));
    double sum = 0.0;
    for (int t = -r; t <= r; ++t) sum += std::exp(-0.5 * t * t / (sigma * sigma));
    for (int t = -r; t <= r; ++t) {
        double g = std::exp(-0.5 * t * t / (sigma * sigma)) / sum;
        a.g[static_cast<std::size_t>(t + r)] = g;
        a.tg[static_cast<std::size_t>(t + r)] = t * g;
        a.ttg[static_cast<std::size_t>(t + r)] = t * t * g;
    }
    double m0 = 0.0, m2 = 0.0, m4 = 0.0;
    for (int t = -r; t <= r; ++t) {
        double g = a.g[static_cast<std::size_t>(t + r)];
        m0 += g;
        m2 += t * t * g;
        m4 += t * t * t * t * g;
    }
    a.s00 = m0 * m0;
    a.s20 = m2 * m0;
    a.s40 = m4 * m0;
    a.s22 = m2 * m2;
    return a;
}

}  // namespace

PolyExpansion poly_expansion(const Plane& img, int poly_n, double poly_sigma) {
    require(poly_n >= 5 && poly_n % 2 == 1, "poly_expansion: poly_n must be odd and >= 5");
    require(poly_sigma > 0, "poly_expansion: poly_sigma must be positive");
    require(img.width >= poly_n && img.height >= poly_n,
            "poly_expansion: image smaller than the expansion window");

    Applicability ap = make_applicability(poly_n, poly_sigma);

    // Moments m_{ij} = sum w(dx,dy) dx^i dy^j f(p + d), separable.
    Plane col_g = correlate_cols(img, ap.g);
    Plane col_tg = correlate_cols(img, ap.tg);
    Plane col_ttg = correlate_cols(img, ap.ttg);

    Plane m00 = correlate_rows(col_g, ap.g);
    Plane m10 = correlate_rows(col_g, ap.tg);
    Plane m20 = correlate_rows(col_g, ap.ttg);
    Plane m01 = correlate_rows(col_tg, ap.g);
    Plane m11 = correlate_rows(col_tg, ap.tg);
    Plane m02 = correlate_rows(col_ttg, ap.g);

    // Metric G = sum w b b^T over basis (1, x, y, x^2, y^2, xy) decouples into
    // the scalar xy term, the two linear terms, and a 3x3 block on (1, x^2, y^2).
    const double det3 =
        (ap.s40 - ap.s22) * (ap.s00 * (ap.s40 + ap.s22) - 2.0 * ap.s20 * ap.s20);
    // Inverse of [[s00, s20, s20], [s20, s40, s22], [s20, s22, s40]] via adjugate.
    const double i00 = ap.s40 * ap.s40 - ap.s22 * ap.s22;
    const double i01 = -(ap.s20 * ap.s40 - ap.s20 * ap.s22);
    const double i11 = ap.s00 * ap.s40 - ap.s20 * ap.s20;
    const double i12 = -(ap.s00 * ap.s22 - ap.s20 * ap.s20);

    PolyExpansion out;
    out.width = img.width;
    out.height = img.height;
    out.a11 = Plane(img.width, img.height);
    out.a12 = Plane(img.width, img.height);
    out.a22 = Plane(img.width, img.height);
    out.bx = Plane(img.width, img.height);
    out.by = Plane(img.width, img.height);
    out.c = Plane(img.width, img.height);

    for (std::size_t i = 0; i < m00.data.size(); ++i) {
        double v00 = m00.data[i], v20 = m20.data[i], v02 = m02.data[i];
        out.c.data[i] = (i00 * v00 + i01 * v20 + i01 * v02) / det3;
        out.a11.data[i] = (i01 * v00 + i11 * v20 + i12 * v02) / det3;
        out.a22.data[i] = (i01 * v00 + i12 * v20 + i11 * v02) / det3;
        out.bx.data[i] = m10.data[i] / ap.s20;
        out.by.data[i] = m01.data[i] / ap.s20;
        out.a12.data[i] = 0.5 * m11.data[i] / ap.s22;
    }
    return out;
}

namespace {

Plane resize_bilinear(const Plane& in, int new_w, int new_h) {
    Plane out(new_w, new_h);
    const double sx = static_cast<double>(in.width) / new_w;
    const double sy = static_cast<double>(in.height) / new_h;
    for (int y = 0; y < new_h; ++y) {
        double src_y = (y + 0.5) * sy - 0.5;
        double fy = std::floor(src_y);
        int y0 = static_cast<int>(fy);
        double ay = src_y - fy;
        int y0c = std::clamp(y0, 0, in.height - 1);
        int y1c = std::clamp(y0 + 1, 0, in.height - 1);
        for (int x = 0; x < new_w; ++x) {
            double src_x = (x + 0.5) * sx - 0.5;
            double fx = std::floor(src_x);
            int x0 = static_cast<int>(fx);
            double ax = src_x - fx;
            int x0c = std::clamp(x0, 0, in.width - 1);
            int x1c = std::clamp(x0 + 1, 0, in.width - 1);
            out.at(x, y) = (1 - ay) * ((1 - ax) * in.at(x0c, y0c) + ax * in.at(x1c, y0c)) +
                           ay * ((1 - ax) * in.at(x0c, y1c) + ax * in.at(x1c, y1c));
        }
    }
    return out;
}

Plane smooth5(const Plane& in) {
    static const std::vector<double> k = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
    return correlate_cols(correlate_rows(in, k), k);
}

// Box mean with a running-sum pass per axis.
Plane box_mean(const Plane& in, int radius) {
    if (radius <= 0) return in;
    Plane tmp(in.width, in.height);
    for (int y = 0; y < in.height; ++y) {
        for (int x = 0; x < in.width; ++x) {
            double acc = 0.0;
            for (int t = -radius; t <= radius; ++t)
                acc += in.sample(x + t, y, BorderPolicy::Replicate);
            tmp.at(x, y) = acc;
        }
    }
    Plane out(in.width, in.height);
    const double inv = 1.0 / ((2.0 * radius + 1) * (2.0 * radius + 1));
    for (int y = 0; y < in.height; ++y) {
        for (int x = 0; x < in.width; ++x) {
            double acc = 0.0;
            for (int t = -radius; t <= radius; ++t)
                acc += tmp.sample(x, y + t, BorderPolicy::Replicate);
            out.at(x, y) = acc * inv;
        }
    }
    return out;
}

double sample_plane_bilinear(const Plane& p, double x, double y) {
    double fx = std::floor(x);
    double fy = std::floor(y);
    int x0 = static_cast<int>(fx);
    int y0 = static_cast<int>(fy);
    double ax = x - fx;
    double ay = y - fy;
    int x0c = std::clamp(x0, 0, p.width - 1);
    int x1c = std::clamp(x0 + 1, 0, p.width - 1);
    int y0c = std::clamp(y0, 0, p.height - 1);
    int y1c = std::clamp(y0 + 1, 0, p.height - 1);
    return (1 - ay) * ((1 - ax) * p.at(x0c, y0c) + ax * p.at(x1c, y0c)) +
           ay * ((1 - ax) * p.at(x0c, y1c) + ax * p.at(x1c, y1c));
}

// One displacement refinement pass at a single pyramid level.
void update_flow(const PolyExpansion& p1, const PolyExpansion& p2, FlowField& flow,
                 int window) {
    const int w = flow.width;
    const int h = flow.height;
    Plane g11(w, h), g12(w, h), g22(w, h), h1(w, h), h2(w, h);

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            std::size_t i = flow.index(x, y);
            double fx = std::clamp(x + flow.dx[i], 0.0, w - 1.0);
            double fy = std::clamp(y + flow.dy[i], 0.0, h - 1.0);

            double a11 = 0.5 * (p1.a11.data[i] + sample_plane_bilinear(p2.a11, fx, fy));
            double a12 = 0.5 * (p1.a12.data[i] + sample_plane_bilinear(p2.a12, fx, fy));
            double a22 = 0.5 * (p1.a22.data[i] + sample_plane_bilinear(p2.a22, fx, fy));
            double dbx = -0.5 * (sample_plane_bilinear(p2.bx, fx, fy) - p1.bx.data[i]) +
                         a11 * flow.dx[i] + a12 * flow.dy[i];
            double dby = -0.5 * (sample_plane_bilinear(p2.by, fx, fy) - p1.by.data[i]) +
                         a12 * flow.dx[i] + a22 * flow.dy[i];

            g11.data[i] = a11 * a11 + a12 * a12;
            g12.data[i] = a12 * (a11 + a22);
            g22.data[i] = a22 * a22 + a12 * a12;
            h1.data[i] = a11 * dbx + a12 * dby;
            h2.data[i] = a12 * dbx + a22 * dby;
        }
    }

    const int radius = window / 2;
    g11 = box_mean(g11, radius);
    g12 = box_mean(g12, radius);
    g22 = box_mean(g22, radius);
    h1 = box_mean(h1, radius);
    h2 = box_mean(h2, radius);

    // Ridge relative to the local system scale keeps flat regions finite
    // without biasing well-conditioned pixels (an absolute constant would
    // shrink the flow wherever the texture curvature is small).
    constexpr double kRidgeRel = 1e-6;
    constexpr double kRidgeAbs = 1e-30;
    for (std::size_t i = 0; i < g11.data.size(); ++i) {
        double ridge = kRidgeRel * (g11.data[i] + g22.data[i]) + kRidgeAbs;
        double a = g11.data[i] + ridge;
        double b = g12.data[i];
        double d = g22.data[i] + ridge;
        double det = a * d - b * b;
        flow.dx[i] = (d * h1.data[i] - b * h2.data[i]) / det;
        flow.dy[i] = (a * h2.data[i] - b * h1.data[i]) / det;
    }
}

}  // namespace

FlowField farneback_flow(const Plane& prev, const Plane& next, const FlowParams& params) {
    params.validate();
    require(prev.width == next.width && prev.height == next.height,
            "farneback_flow: frame dimensions differ");
    require(prev.width >= 2 && prev.height >= 2, "farneback_flow: frame too small");

    // Pyramid sizes, finest first; levels too small for the expansion window drop out.
    struct LevelSize {
        int w, h;
    };
    std::vector<LevelSize> sizes;
    double scale = 1.0;
    for (int level = 0; level < params.pyramid_levels; ++level) {
        int w = std::max(1, static_cast<int>(std::lround(prev.width * scale)));
        int h = std::max(1, static_cast<int>(std::lround(prev.height * scale)));
        if (w < params.poly_n || h < params.poly_n) break;
        sizes.push_back({w, h});
        scale *= params.pyramid_scale;
    }
    if (sizes.empty()) sizes.push_back({prev.width, prev.height});

    // Smoothed copies per level.
    std::vector<Plane> pyr_prev(sizes.size()), pyr_next(sizes.size());
    pyr_prev[0] = prev;
    pyr_next[0] = next;
    for (std::size_t l = 1; l < sizes.size(); ++l) {
        pyr_prev[l] = resize_bilinear(smooth5(pyr_prev[l - 1]), sizes[l].w, sizes[l].h);
        pyr_next[l] = resize_bilinear(smooth5(pyr_next[l - 1]), sizes[l].w, sizes[l].h);
    }

    FlowField flow;
    for (std::size_t li = sizes.size(); li-- > 0;) {
        const LevelSize sz = sizes[li];
        if (flow.width == 0) {
            flow = FlowField(sz.w, sz.h);
        } else {
            FlowField up(sz.w, sz.h);
            Plane dx_plane(flow.width, flow.height), dy_plane(flow.width, flow.height);
            dx_plane.data = flow.dx;
            dy_plane.data = flow.dy;
            Plane rx = resize_bilinear(dx_plane, sz.w, sz.h);
            Plane ry = resize_bilinear(dy_plane, sz.w, sz.h);
            const double gain_x = static_cast<double>(sz.w) / flow.width;
            const double gain_y = static_cast<double>(sz.h) / flow.height;
            for (std::size_t i = 0; i < rx.data.size(); ++i) {
                up.dx[i] = rx.data[i] * gain_x;
                up.dy[i] = ry.data[i] * gain_y;
            }
            flow = std::move(up);
        }

        PolyExpansion p1 = poly_expansion(pyr_prev[li], params.poly_n, params.poly_sigma);
        PolyExpansion p2 = poly_expansion(pyr_next[li], params.poly_n, params.poly_sigma);
        for (int it = 0; it < params.iterations; ++it)
            update_flow(p1, p2, flow, params.window);
    }
    return flow;
}

FlowField farneback_flow(const Image& prev, const Image& next, const FlowParams& params) {
    return farneback_flow(luminance(prev), luminance(next), params);
}

namespace {

// Integer pixel range covered by a box: centers in [x, x + w).
struct PixelRect {
    int x0, y0, x1, y1;  // half-open
    bool empty() const { return x0 >= x1 || y0 >= y1; }
};

PixelRect box_pixels(const BoundingBox& box, int width, int height) {
    PixelRect r;
    r.x0 = std::max(0, static_cast<int>(std::ceil(box.x - 0.5)));
    r.y0 = std::max(0, static_cast<int>(std::ceil(box.y - 0.5)));
    r.x1 = std::min(width, static_cast<int>(std::ceil(box.x + box.w - 0.5)));
    r.y1 = std::min(height, static_cast<int>(std::ceil(box.y + box.h - 0.5)));
    return r;
}

}  // namespace

Vec2 mean_flow(const FlowField& flow, const BoundingBox& region) {
    PixelRect r = box_pixels(region, flow.width, flow.height);
    if (r.empty()) throw ContractError("mean_flow: region does not overlap the field");
    double sx = 0.0, sy = 0.0;
    std::size_t count = 0;
    for (int y = r.y0; y < r.y1; ++y) {
        for (int x = r.x0; x < r.x1; ++x) {
            std::size_t i = flow.index(x, y);
            sx += flow.dx[i];
            sy += flow.dy[i];
            ++count;
        }
    }
    return {sx / static_cast<double>(count), sy / static_cast<double>(count)};
}

Vec2 mean_flow(const FlowField& flow, const Mask& region) {
    require(region.width == flow.width && region.height == flow.height,
            "mean_flow: mask dimensions differ from field");
    double sx = 0.0, sy = 0.0, weight = 0.0;
    for (std::size_t i = 0; i < region.data.size(); ++i) {
        double w = region.data[i];
        if (w <= 0) continue;
        sx += w * flow.dx[i];
        sy += w * flow.dy[i];
        weight += w;
    }
    if (weight <= 0) throw ContractError("mean_flow: empty mask region");
    return {sx / weight, sy / weight};
}

Vec2 median_flow(const FlowField& flow, const BoundingBox& region) {
    PixelRect r = box_pixels(region, flow.width, flow.height);
    if (r.empty()) throw ContractError("median_flow: region does not overlap the field");
    std::vector<double> xs, ys;
    for (int y = r.y0; y < r.y1; ++y) {
        for (int x = r.x0; x < r.x1; ++x) {
            std::size_t i = flow.index(x, y);
            xs.push_back(flow.dx[i]);
            ys.push_back(flow.dy[i]);
        }
    }
    auto median = [](std::vector<double>& v) {
        std::size_t mid = v.size() / 2;
        std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
        double hi = v[mid];
        if (v.size() % 2 == 1) return hi;
        double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
        return 0.5 * (lo + hi);
    };
    return {median(xs), median(ys)};
}

Image flow_to_image(const FlowField& flow) {
    require(flow.width >= 1 && flow.height >= 1, "flow_to_image: empty field");
    double max_mag = 0.0;
    for (std::size_t i = 0; i < flow.dx.size(); ++i)
        max_mag = std::max(max_mag, std::hypot(flow.dx[i], flow.dy[i]));
    if (max_mag < 1e-9) max_mag = 1.0;

    Image out(flow.width, flow.height);
    for (int y = 0; y < flow.height; ++y) {
        for (int x = 0; x < flow.width; ++x) {
            std::size_t i = flow.index(x, y);
            double angle = std::atan2(flow.dy[i], flow.dx[i]);
            double hue = (angle + 3.14159265358979323846) / (2.0 * 3.14159265358979323846);
            double sat = std::hypot(flow.dx[i], flow.dy[i]) / max_mag;
            // HSV to RGB with V = 1.
            double hh = hue * 6.0;
            int sector = std::min(5, static_cast<int>(hh));
            double f = hh - sector;
            double p = 1.0 - sat;
            double q = 1.0 - sat * f;
            double t = 1.0 - sat * (1.0 - f);
            double r, g, b;
            switch (sector) {
                case 0: r = 1; g = t; b = p; break;
                case 1: r = q; g = 1; b = p; break;
                case 2: r = p; g = 1; b = t; break;
                case 3: r = p; g = q; b = 1; break;
                case 4: r = t; g = p; b = 1; break;
                default: r = 1; g = p; b = q; break;
            }
            out.at(x, y, 0) = r;
            out.at(x, y, 1) = g;
            out.at(x, y, 2) = b;
        }
    }
    return out;
}

}  // namespace moblur

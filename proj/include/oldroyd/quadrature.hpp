#pragma once

#include <array>
#include <cstddef>

namespace oldroyd {

/// Quadrature point on the reference triangle {(a,b): a,b >= 0, a+b <= 1},
/// weight normalized so that the weights of a rule sum to 1.
struct QuadPoint {
    double a;
    double b;
    double w;
};

/// Six-point rule, exact for polynomials of total degree <= 4.
/// This covers every product of basis functions appearing in the mixed
/// P2/P1/P1disc forms (max total degree 4).
inline const std::array<QuadPoint, 6>& tri_rule_deg4() {
    static const std::array<QuadPoint, 6> rule = [] {
        constexpr double a1 = 0.445948490915965;
        constexpr double w1 = 0.223381589678011;
        constexpr double a2 = 0.091576213509771;
        constexpr double w2 = 0.109951743655322;
        return std::array<QuadPoint, 6>{{
            {a1, a1, w1},
            {1.0 - 2.0 * a1, a1, w1},
            {a1, 1.0 - 2.0 * a1, w1},
            {a2, a2, w2},
            {1.0 - 2.0 * a2, a2, w2},
            {a2, 1.0 - 2.0 * a2, w2},
        }};
    }();
    return rule;
}

/// Seven-point rule, exact for degree <= 5. Used on subdivided elements when
/// integrating non-polynomial data (error norms against analytic fields).
inline const std::array<QuadPoint, 7>& tri_rule_deg5() {
    static const std::array<QuadPoint, 7> rule = [] {
        const double s15 = 3.8729833462074168852;  // sqrt(15)
        const double a1 = (6.0 - s15) / 21.0;
        const double w1 = (155.0 - s15) / 1200.0;
        const double a2 = (6.0 + s15) / 21.0;
        const double w2 = (155.0 + s15) / 1200.0;
        return std::array<QuadPoint, 7>{{
            {1.0 / 3.0, 1.0 / 3.0, 9.0 / 40.0},
            {a1, a1, w1},
            {1.0 - 2.0 * a1, a1, w1},
            {a1, 1.0 - 2.0 * a1, w1},
            {a2, a2, w2},
            {1.0 - 2.0 * a2, a2, w2},
            {a2, 1.0 - 2.0 * a2, w2},
        }};
    }();
    return rule;
}

/// Degree-5 rule applied on a 4^levels uniform subdivision of the reference
/// triangle. Weights still sum to 1. levels = 2 gives 112 points, accurate
/// enough that quadrature error is negligible next to discretization error
/// in manufactured-solution studies.
template <int Levels = 2>
const auto& tri_rule_subdivided() {
    constexpr std::size_t n_sub = std::size_t(1) << (2 * Levels);  // 4^Levels
    static const std::array<QuadPoint, 7 * n_sub> rule = [] {
        std::array<QuadPoint, 7 * n_sub> pts{};
        // Corners of the current subdivision, refined one level at a time.
        struct Tri {
            double ax, ay, bx, by, cx, cy;
        };
        std::array<Tri, n_sub> tris{};
        std::size_t count = 1;
        tris[0] = {0.0, 0.0, 1.0, 0.0, 0.0, 1.0};
        for (int l = 0; l < Levels; ++l) {
            std::array<Tri, n_sub> next{};
            std::size_t m = 0;
            for (std::size_t t = 0; t < count; ++t) {
                const Tri& T = tris[t];
                const double mabx = 0.5 * (T.ax + T.bx), maby = 0.5 * (T.ay + T.by);
                const double mbcx = 0.5 * (T.bx + T.cx), mbcy = 0.5 * (T.by + T.cy);
                const double mcax = 0.5 * (T.cx + T.ax), mcay = 0.5 * (T.cy + T.ay);
                next[m++] = {T.ax, T.ay, mabx, maby, mcax, mcay};
                next[m++] = {mabx, maby, T.bx, T.by, mbcx, mbcy};
                next[m++] = {mcax, mcay, mbcx, mbcy, T.cx, T.cy};
                next[m++] = {mabx, maby, mbcx, mbcy, mcax, mcay};
            }
            tris = next;
            count = m;
        }
        const double sub_w = 1.0 / double(n_sub);
        std::size_t i = 0;
        for (std::size_t t = 0; t < count; ++t) {
            const Tri& T = tris[t];
            for (const QuadPoint& q : tri_rule_deg5()) {
                const double l0 = 1.0 - q.a - q.b;
                pts[i].a = l0 * T.ax + q.a * T.bx + q.b * T.cx;
                pts[i].b = l0 * T.ay + q.a * T.by + q.b * T.cy;
                pts[i].w = q.w * sub_w;
                ++i;
            }
        }
        return pts;
    }();
    return rule;
}

}  // namespace oldroyd

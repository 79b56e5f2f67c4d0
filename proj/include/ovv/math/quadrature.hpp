#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

namespace ovv {

// Adaptive Gauss-Kronrod (G7,K15) on a finite interval. The recursion splits
// until the 15-point Kronrod estimate and its embedded error bound meet the
// requested tolerance on every subinterval.
namespace gk {

inline constexpr double kronrod_nodes[8] = {
    0.000000000000000000000000000000000e+00, 2.077849550078984676006894037732449e-01,
    4.058451513773971669066064120769615e-01, 5.860872354676911302941448382587296e-01,
    7.415311855993944398638647732807884e-01, 8.648644233597690727897127886409262e-01,
    9.491079123427585245261896840478513e-01, 9.914553711208126392068546975263285e-01};

inline constexpr double kronrod_weights[8] = {
    2.094821410847278280129991748917143e-01, 2.044329400752988924141619992346491e-01,
    1.903505780647854099132564024210137e-01, 1.690047266392679028265834265985503e-01,
    1.406532597155259187451895905102379e-01, 1.047900103222501838398763225415180e-01,
    6.309209262997855329070066318920429e-02, 2.293532201052922496373200805896959e-02};

inline constexpr double gauss_weights[4] = {
    4.179591836734693877551020408163265e-01, 3.818300505051189449503697754889751e-01,
    2.797053914892766679014677714237796e-01, 1.294849661688696932706114326790820e-01};

template <typename F>
void eval_interval(const F& f, double a, double b, double& result, double& err) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(center);
    double gauss = fc * gauss_weights[0];
    double kron = fc * kronrod_weights[0];
    for (int j = 1; j < 8; ++j) {
        const double dx = half * kronrod_nodes[j];
        const double fs = f(center - dx) + f(center + dx);
        kron += fs * kronrod_weights[j];
        if (j % 2 == 0) gauss += fs * gauss_weights[j / 2];
    }
    result = kron * half;
    err = std::abs((kron - gauss) * half);
}

}  // namespace gk

template <typename F>
double integrate(const F& f, double a, double b, double rel_tol = 1e-10,
                 double abs_tol = 0.0, int max_depth = 48) {
    struct Segment {
        double a, b, value, err;
        int depth;
    };
    double value, err;
    gk::eval_interval(f, a, b, value, err);
    std::vector<Segment> stack{{a, b, value, err, 0}};
    double total = 0.0;
    double total_err = 0.0;
    // First pass estimate of the scale so the relative tolerance has meaning.
    double scale = std::abs(value);
    while (!stack.empty()) {
        const Segment seg = stack.back();
        stack.pop_back();
        const double tol = std::max(abs_tol, rel_tol * std::max(scale, std::abs(seg.value)));
        if (seg.err <= tol * std::max(1e-300, (seg.b - seg.a) / (b - a)) ||
            seg.depth >= max_depth) {
            total += seg.value;
            total_err += seg.err;
            continue;
        }
        const double mid = 0.5 * (seg.a + seg.b);
        Segment left{seg.a, mid, 0, 0, seg.depth + 1};
        Segment right{mid, seg.b, 0, 0, seg.depth + 1};
        gk::eval_interval(f, left.a, left.b, left.value, left.err);
        gk::eval_interval(f, right.a, right.b, right.value, right.err);
        scale = std::max(scale, std::abs(left.value) + std::abs(right.value));
        stack.push_back(left);
        stack.push_back(right);
    }
    (void)total_err;
    return total;
}

// Integral over [a, inf) of a decaying integrand: geometrically growing
// panels, stopped once two consecutive panels are negligible.
template <typename F>
double integrate_to_inf(const F& f, double a, double first_width,
                        double rel_tol = 1e-10) {
    double total = 0.0;
    double width = first_width;
    double lo = a;
    int quiet = 0;
    for (int panel = 0; panel < 200; ++panel) {
        const double piece = integrate(f, lo, lo + width, rel_tol);
        total += piece;
        if (std::abs(piece) <= rel_tol * std::abs(total) + 1e-300) {
            if (++quiet >= 2) break;
        } else {
            quiet = 0;
        }
        lo += width;
        width *= 1.6;
    }
    return total;
}

}  // namespace ovv

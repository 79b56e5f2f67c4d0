#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace ovv {

// Dormand-Prince 5(4) with FSAL and PI step control for small fixed-size
// complex systems. integrate_checkpoints() marches once over [0, t_max] and
// records the state exactly at each (sorted, increasing) checkpoint, which is
// how the Riccati exponents for a whole tenor ladder come out of one solve.
template <std::size_t N>
class DormandPrince {
public:
    using State = std::array<std::complex<double>, N>;
    using Deriv = std::function<void(double, const State&, State&)>;

    explicit DormandPrince(Deriv deriv, double rel_tol = 1e-10, double abs_tol = 1e-12)
        : deriv_(std::move(deriv)), rel_tol_(rel_tol), abs_tol_(abs_tol) {}

    std::vector<State> integrate_checkpoints(const State& y0, std::span<const double> checkpoints) const {
        std::vector<State> out;
        out.reserve(checkpoints.size());
        State y = y0;
        double t = 0.0;
        State k1;
        deriv_(t, y, k1);
        double h = 1e-4;
        for (double target : checkpoints) {
            if (target < t) throw std::invalid_argument("ode: checkpoints must be increasing");
            advance_to(target, t, y, k1, h);
            out.push_back(y);
        }
        return out;
    }

    State solve(const State& y0, double t_end) const {
        const double cp[1] = {t_end};
        return integrate_checkpoints(y0, cp).front();
    }

private:
    void advance_to(double target, double& t, State& y, State& k1, double& h) const {
        int rejected_in_a_row = 0;
        while (t < target) {
            h = std::min(h, target - t);
            State k2, k3, k4, k5, k6, k7, y_try, y_err;
            step(t, y, k1, h, k2, k3, k4, k5, k6, k7, y_try, y_err);
            double err = 0.0;
            for (std::size_t i = 0; i < N; ++i) {
                const double scale = abs_tol_ + rel_tol_ * std::max(std::abs(y[i]), std::abs(y_try[i]));
                err = std::max(err, std::abs(y_err[i]) / scale);
            }
            if (err <= 1.0) {
                t += h;
                y = y_try;
                k1 = k7;  // FSAL
                rejected_in_a_row = 0;
                h *= std::min(5.0, 0.9 * std::pow(std::max(err, 1e-10), -0.2));
            } else {
                h *= std::max(0.1, 0.9 * std::pow(err, -0.2));
                if (++rejected_in_a_row > 2000) {
                    throw std::runtime_error("ode: step control failed to converge");
                }
            }
            if (!(h > 1e-15)) {
                throw std::runtime_error("ode: step size underflow (non-convergent solve)");
            }
        }
    }

    void step(double t, const State& y, const State& k1, double h, State& k2, State& k3,
              State& k4, State& k5, State& k6, State& k7, State& y5, State& y_err) const {
        auto axpy = [&](const State& base, std::initializer_list<std::pair<double, const State*>> terms) {
            State r = base;
            for (auto& [c, k] : terms)
                for (std::size_t i = 0; i < N; ++i) r[i] += h * c * (*k)[i];
            return r;
        };
        State s;
        s = axpy(y, {{1.0 / 5, &k1}});
        deriv_(t + h / 5, s, k2);
        s = axpy(y, {{3.0 / 40, &k1}, {9.0 / 40, &k2}});
        deriv_(t + 3 * h / 10, s, k3);
        s = axpy(y, {{44.0 / 45, &k1}, {-56.0 / 15, &k2}, {32.0 / 9, &k3}});
        deriv_(t + 4 * h / 5, s, k4);
        s = axpy(y, {{19372.0 / 6561, &k1}, {-25360.0 / 2187, &k2}, {64448.0 / 6561, &k3}, {-212.0 / 729, &k4}});
        deriv_(t + 8 * h / 9, s, k5);
        s = axpy(y, {{9017.0 / 3168, &k1}, {-355.0 / 33, &k2}, {46732.0 / 5247, &k3}, {49.0 / 176, &k4},
                     {-5103.0 / 18656, &k5}});
        deriv_(t + h, s, k6);
        y5 = axpy(y, {{35.0 / 384, &k1}, {500.0 / 1113, &k3}, {125.0 / 192, &k4}, {-2187.0 / 6784, &k5},
                      {11.0 / 84, &k6}});
        deriv_(t + h, y5, k7);
        static constexpr double e1 = 35.0 / 384 - 5179.0 / 57600;
        static constexpr double e3 = 500.0 / 1113 - 7571.0 / 16695;
        static constexpr double e4 = 125.0 / 192 - 393.0 / 640;
        static constexpr double e5 = -2187.0 / 6784 + 92097.0 / 339200;
        static constexpr double e6 = 11.0 / 84 - 187.0 / 2100;
        static constexpr double e7 = -1.0 / 40;
        for (std::size_t i = 0; i < N; ++i) {
            y_err[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
        }
    }

    Deriv deriv_;
    double rel_tol_;
    double abs_tol_;
};

}  // namespace ovv

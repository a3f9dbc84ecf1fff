#ifndef LINKSIM_NUMERICS_HPP
#define LINKSIM_NUMERICS_HPP

#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "linksim/errors.hpp"

namespace linksim::numerics {

// --- special functions ----------------------------------------------------

// Modified Bessel function of the first kind, order zero. x >= 0.
// Power series up to the crossover, scaled asymptotic expansion beyond.
double bessel_i0(double x);

// exp(-x) * I0(x), usable for log-space work without overflow.
double bessel_i0_scaled(double x);

// Principal-branch Lambert W for x >= 0: returns w with w*exp(w) == x
// to within 1e-12 * max(1, x).
double lambert_w(double x);

// Exponential integral E1(x) = int_x^inf exp(-u)/u du, x > 0.
double exp_integral_e1(double x);

// exp(x) * E1(x); stays finite where E1 underflows and exp overflows.
double exp_integral_e1_scaled(double x);

// --- quadrature -----------------------------------------------------------

// Raised when the adaptive scheme exhausts its refinement budget before
// meeting the tolerance. Carries the best estimate obtained so far.
class QuadratureError : public std::runtime_error {
public:
    QuadratureError(const std::string& what, double best_estimate, double error_estimate)
        : std::runtime_error(what), best_(best_estimate), err_(error_estimate) {}
    double best_estimate() const { return best_; }
    double error_estimate() const { return err_; }

private:
    double best_;
    double err_;
};

struct QuadratureOptions {
    double tol = 1e-10;       // target absolute error, relative to max(1, |I|)
    int max_intervals = 4000; // subdivision budget
};

// Adaptive Gauss-Kronrod 15(7) integration of f over (a, b).
// b may be +infinity; the tail is folded in via x = a + t/(1-t).
double quadrature_1d(const std::function<double(double)>& f, double a, double b,
                     const QuadratureOptions& opts = {});
double quadrature_1d(const std::function<double(double)>& f, double a, double b, double tol);

// Iterated 2-D integral over a y-range that may depend on x.
double quadrature_2d(const std::function<double(double, double)>& f, double x_lo,
                     double x_hi, const std::function<double(double)>& y_lo,
                     const std::function<double(double)>& y_hi,
                     const QuadratureOptions& opts = {});

// --- root finding ---------------------------------------------------------

// Bisection on a bracketing interval; f(lo) and f(hi) must differ in sign.
double bisect(const std::function<double(double)>& f, double lo, double hi,
              double tol = 1e-12);

// --- grid search ----------------------------------------------------------

class NoFeasiblePointError : public InfeasibleError {
public:
    explicit NoFeasiblePointError(const std::string& what) : InfeasibleError(what) {}
};

struct SearchGrid {
    double lower = 0.0;
    double upper = 1.0;
    int points = 2;            // per dimension, >= 2
    int refinement_rounds = 0; // zoom rounds granted to this dimension

    SearchGrid() = default;
    SearchGrid(double lo, double hi, int pts, int refine = 0);
};

enum class SearchMode { Maximize, Minimize };

struct GridPoint {
    std::vector<double> coords;
    double value = 0.0;
};

struct GridSearchOptions {
    int workers = 1;
    // Cheap structural check evaluated before the objective (e.g. ordering
    // constraints). Points failing it are never passed to the objective.
    std::function<bool(std::span<const double>)> pre_feasible;
    // Called for every objective evaluation (after it returns).
    std::function<void(std::span<const double>, double)> observer;
};

// Exhaustive search over the tensor product of the grids. Non-finite
// objective values mark a point infeasible. Ties break toward the
// lexicographically smallest point. Dimensions with refinement budget left
// zoom to +-1 cell of their previous grid around the incumbent; dimensions
// without budget are frozen at the incumbent coordinate. Later rounds only
// replace the incumbent on strict improvement.
GridPoint grid_search(const std::function<double(std::span<const double>)>& objective,
                      const std::vector<SearchGrid>& grids, SearchMode mode,
                      const GridSearchOptions& opts = {});

// --- misc -----------------------------------------------------------------

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }

} // namespace linksim::numerics

#endif

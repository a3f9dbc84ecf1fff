#include "linksim/numerics.hpp"

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <limits>
#include <thread>

namespace linksim::numerics {

namespace {

constexpr double kSeriesAsymptoticCrossover = 18.0;

// Power series sum_k (x/2)^(2k) / (k!)^2. All terms positive, so the only
// error source is rounding; usable on the whole crossover range.
double i0_series(double x) {
    const double q = 0.25 * x * x;
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < 400; ++k) {
        term *= q / (static_cast<double>(k) * k);
        sum += term;
        if (term < sum * 1e-17) break;
    }
    return sum;
}

// exp(-x) I0(x) ~ (1/sqrt(2 pi x)) * sum_k a_k x^-k with
// a_k = a_{k-1} * (2k-1)^2 / (8k). Truncated at the smallest term.
double i0_scaled_asymptotic(double x) {
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k <= 30; ++k) {
        const double m = 2.0 * k - 1.0;
        const double next = term * m * m / (8.0 * k * x);
        if (next >= term) break; // series started diverging
        term = next;
        sum += term;
        if (term < sum * 1e-17) break;
    }
    return sum / std::sqrt(2.0 * M_PI * x);
}

} // namespace

double bessel_i0(double x) {
    if (!(x >= 0.0)) throw std::domain_error("bessel_i0: argument must be >= 0");
    if (x < kSeriesAsymptoticCrossover) return i0_series(x);
    return std::exp(x) * i0_scaled_asymptotic(x); // overflows to inf past ~713
}

double bessel_i0_scaled(double x) {
    if (!(x >= 0.0)) throw std::domain_error("bessel_i0_scaled: argument must be >= 0");
    if (x < kSeriesAsymptoticCrossover) return std::exp(-x) * i0_series(x);
    return i0_scaled_asymptotic(x);
}

double lambert_w(double x) {
    if (!(x >= 0.0)) throw std::domain_error("lambert_w: argument must be >= 0");
    if (x == 0.0) return 0.0;
    double w = std::log1p(x); // decent start on the principal branch
    for (int it = 0; it < 60; ++it) {
        const double ew = std::exp(w);
        const double f = w * ew - x;
        if (std::abs(f) <= 0.25e-12 * std::max(1.0, x)) break;
        // Halley step
        const double denom = ew * (w + 1.0) - (w + 2.0) * f / (2.0 * w + 2.0);
        w -= f / denom;
    }
    return w;
}

namespace {

// e^x E1(x) for x > 1 via the continued fraction
// E1(x) = e^-x / (x + 1 - 1/(x + 3 - 4/(x + 5 - ...))), modified Lentz.
double e1_scaled_cf(double x) {
    constexpr double kTiny = 1e-300;
    double b = x + 1.0;
    double c = 1.0 / kTiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 200; ++i) {
        const double a = -static_cast<double>(i) * i;
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        const double del = c * d;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16) break;
    }
    return h;
}

// E1(x) for 0 < x <= 1 via the alternating series
// E1(x) = -gamma - ln x + sum_{k>=1} (-1)^{k+1} x^k / (k k!).
double e1_series(double x) {
    constexpr double kEulerGamma = 0.57721566490153286060651209008240;
    double sum = 0.0;
    double term = 1.0;
    for (int k = 1; k < 60; ++k) {
        term *= -x / k;
        const double contrib = -term / k;
        sum += contrib;
        if (std::abs(contrib) < 1e-18 * std::max(1.0, std::abs(sum))) break;
    }
    return -kEulerGamma - std::log(x) + sum;
}

} // namespace

double exp_integral_e1(double x) {
    if (!(x > 0.0)) throw std::domain_error("exp_integral_e1: argument must be > 0");
    if (x <= 1.0) return e1_series(x);
    return e1_scaled_cf(x) * std::exp(-x);
}

double exp_integral_e1_scaled(double x) {
    if (!(x > 0.0)) throw std::domain_error("exp_integral_e1_scaled: argument must be > 0");
    if (x <= 1.0) return std::exp(x) * e1_series(x);
    return e1_scaled_cf(x);
}

// --- quadrature -------------------------------------------------------------

namespace {

// QUADPACK dqk15 abscissae/weights (positive half; node 7 is the midpoint).
constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Interval {
    double a, b;
    double integral;
    double error;
};

template <typename F>
Interval gk15(const F& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double resg = 0.0;
    double resk = 0.0;
    for (int j = 0; j < 7; ++j) {
        const double dx = h * kXgk[j];
        const double f1 = f(c - dx);
        const double f2 = f(c + dx);
        resk += kWgk[j] * (f1 + f2);
        if (j % 2 == 1) resg += kWg[j / 2] * (f1 + f2);
    }
    const double fc = f(c);
    resk += kWgk[7] * fc;
    resg += kWg[3] * fc;
    const double integral = resk * h;
    double err = std::abs((resk - resg) * h);
    // sharpen the raw difference the way QUADPACK does
    if (err > 0.0) err = std::min(err, 200.0 * err * std::sqrt(err));
    return {a, b, integral, err};
}

double adaptive_gk(const std::function<double(double)>& f, double a, double b,
                   const QuadratureOptions& opts) {
    std::vector<Interval> heap;
    heap.push_back(gk15(f, a, b));
    auto cmp = [](const Interval& lhs, const Interval& rhs) { return lhs.error < rhs.error; };
    std::make_heap(heap.begin(), heap.end(), cmp);

    double total = heap.front().integral;
    double total_err = heap.front().error;
    int splits = 0;
    while (total_err > opts.tol * std::max(1.0, std::abs(total))) {
        if (static_cast<int>(heap.size()) >= opts.max_intervals || splits > 4 * opts.max_intervals) {
            throw QuadratureError("quadrature_1d: refinement budget exhausted", total, total_err);
        }
        std::pop_heap(heap.begin(), heap.end(), cmp);
        const Interval worst = heap.back();
        heap.pop_back();
        const double mid = 0.5 * (worst.a + worst.b);
        if (mid <= worst.a || mid >= worst.b) {
            // interval collapsed below double resolution; accept its estimate
            total_err -= worst.error;
            total += 0.0;
            heap.push_back({worst.a, worst.b, worst.integral, 0.0});
            std::push_heap(heap.begin(), heap.end(), cmp);
            continue;
        }
        const Interval left = gk15(f, worst.a, mid);
        const Interval right = gk15(f, mid, worst.b);
        total += left.integral + right.integral - worst.integral;
        total_err += left.error + right.error - worst.error;
        heap.push_back(left);
        std::push_heap(heap.begin(), heap.end(), cmp);
        heap.push_back(right);
        std::push_heap(heap.begin(), heap.end(), cmp);
        ++splits;
    }
    return total;
}

} // namespace

double quadrature_1d(const std::function<double(double)>& f, double a, double b,
                     const QuadratureOptions& opts) {
    if (std::isnan(a) || std::isnan(b)) throw std::domain_error("quadrature_1d: NaN bound");
    if (std::isinf(b)) {
        // x = a + t/(1-t) maps [0,1) onto [a, inf)
        auto g = [&f, a](double t) {
            const double om = 1.0 - t;
            const double x = a + t / om;
            return f(x) / (om * om);
        };
        return adaptive_gk(g, 0.0, 1.0, opts);
    }
    if (a == b) return 0.0;
    return adaptive_gk(f, a, b, opts);
}

double quadrature_1d(const std::function<double(double)>& f, double a, double b, double tol) {
    QuadratureOptions opts;
    opts.tol = tol;
    return quadrature_1d(f, a, b, opts);
}

double quadrature_2d(const std::function<double(double, double)>& f, double x_lo,
                     double x_hi, const std::function<double(double)>& y_lo,
                     const std::function<double(double)>& y_hi,
                     const QuadratureOptions& opts) {
    QuadratureOptions inner = opts;
    inner.tol = opts.tol * 0.1;
    auto outer = [&](double x) {
        auto fy = [&f, x](double y) { return f(x, y); };
        return quadrature_1d(fy, y_lo(x), y_hi(x), inner);
    };
    return quadrature_1d(outer, x_lo, x_hi, opts);
}

// --- root finding -----------------------------------------------------------

double bisect(const std::function<double(double)>& f, double lo, double hi, double tol) {
    if (!(lo < hi)) throw std::invalid_argument("bisect: requires lo < hi");
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0)) {
        throw std::invalid_argument("bisect: f(lo) and f(hi) have the same sign");
    }
    for (int it = 0; it < 200 && (hi - lo) > tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break; // double resolution reached
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

// --- grid search ------------------------------------------------------------

SearchGrid::SearchGrid(double lo, double hi, int pts, int refine)
    : lower(lo), upper(hi), points(pts), refinement_rounds(refine) {
    if (!(lower < upper)) throw std::invalid_argument("SearchGrid: requires lower < upper");
    if (points < 2) throw std::invalid_argument("SearchGrid: requires points >= 2");
    if (refinement_rounds < 0) throw std::invalid_argument("SearchGrid: refinement_rounds >= 0");
}

namespace {

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> v(n);
    if (n == 1) {
        v[0] = lo;
        return v;
    }
    const double step = (hi - lo) / (n - 1);
    for (int i = 0; i < n; ++i) v[i] = lo + step * i;
    v.back() = hi;
    return v;
}

struct EvalResult {
    double value = std::numeric_limits<double>::quiet_NaN();
    bool feasible = false;
};

// Evaluates every tuple of `axes` (row-major) and returns per-index results.
// The reduction to a winner happens sequentially afterwards, so the outcome
// does not depend on thread scheduling.
std::vector<EvalResult> evaluate_grid(
    const std::function<double(std::span<const double>)>& objective,
    const std::vector<std::vector<double>>& axes, const GridSearchOptions& opts) {
    const int dims = static_cast<int>(axes.size());
    std::int64_t total = 1;
    for (const auto& ax : axes) total *= static_cast<std::int64_t>(ax.size());

    std::vector<EvalResult> results(total);
    auto eval_one = [&](std::int64_t idx) {
        std::vector<double> pt(dims);
        std::int64_t rem = idx;
        for (int dim = dims - 1; dim >= 0; --dim) {
            const auto n = static_cast<std::int64_t>(axes[dim].size());
            pt[dim] = axes[dim][rem % n];
            rem /= n;
        }
        if (opts.pre_feasible && !opts.pre_feasible(pt)) return;
        const double v = objective(pt);
        if (opts.observer) opts.observer(pt, v);
        results[idx] = {v, std::isfinite(v)};
    };

    const int workers = std::max(1, opts.workers);
    if (workers == 1 || total < 2) {
        for (std::int64_t i = 0; i < total; ++i) eval_one(i);
    } else {
        std::atomic<std::int64_t> next{0};
        std::vector<std::thread> pool;
        const int n_threads = static_cast<int>(std::min<std::int64_t>(workers, total));
        pool.reserve(n_threads);
        for (int t = 0; t < n_threads; ++t) {
            pool.emplace_back([&] {
                for (;;) {
                    const std::int64_t i = next.fetch_add(1);
                    if (i >= total) return;
                    eval_one(i);
                }
            });
        }
        for (auto& th : pool) th.join();
    }
    return results;
}

std::vector<double> coords_of(const std::vector<std::vector<double>>& axes, std::int64_t idx) {
    std::vector<double> pt(axes.size());
    std::int64_t rem = idx;
    for (int dim = static_cast<int>(axes.size()) - 1; dim >= 0; --dim) {
        const auto n = static_cast<std::int64_t>(axes[dim].size());
        pt[dim] = axes[dim][rem % n];
        rem /= n;
    }
    return pt;
}

} // namespace

GridPoint grid_search(const std::function<double(std::span<const double>)>& objective,
                      const std::vector<SearchGrid>& grids, SearchMode mode,
                      const GridSearchOptions& opts) {
    if (grids.empty()) throw std::invalid_argument("grid_search: no grids given");
    for (const auto& g : grids) {
        if (!(g.lower < g.upper) || g.points < 2) {
            throw std::invalid_argument("grid_search: invalid SearchGrid");
        }
    }
    const int dims = static_cast<int>(grids.size());
    const bool maximize = (mode == SearchMode::Maximize);
    auto better = [maximize](double cand, double incumbent) {
        return maximize ? cand > incumbent : cand < incumbent;
    };

    int max_rounds = 0;
    for (const auto& g : grids) max_rounds = std::max(max_rounds, g.refinement_rounds);

    std::vector<std::vector<double>> axes(dims);
    std::vector<double> spacing(dims, 0.0);
    for (int d = 0; d < dims; ++d) {
        axes[d] = linspace(grids[d].lower, grids[d].upper, grids[d].points);
        spacing[d] = (grids[d].upper - grids[d].lower) / (grids[d].points - 1);
    }

    bool have_best = false;
    GridPoint best;

    for (int round = 0; round <= max_rounds; ++round) {
        if (round > 0) {
            // zoom each dimension that still has refinement budget
            for (int d = 0; d < dims; ++d) {
                if (grids[d].refinement_rounds >= round) {
                    const double center = best.coords[d];
                    const double lo = std::max(grids[d].lower, center - spacing[d]);
                    const double hi = std::min(grids[d].upper, center + spacing[d]);
                    axes[d] = linspace(lo, hi, grids[d].points);
                    spacing[d] = (hi - lo) / (grids[d].points - 1);
                } else {
                    axes[d] = {best.coords[d]};
                }
            }
        }
        const std::vector<EvalResult> results = evaluate_grid(objective, axes, opts);
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(results.size()); ++i) {
            if (!results[i].feasible) continue;
            if (!have_best || better(results[i].value, best.value)) {
                best = {coords_of(axes, i), results[i].value};
                have_best = true;
            }
        }
        if (!have_best) break; // nothing feasible; no center to refine around
    }

    if (!have_best) throw NoFeasiblePointError("grid_search: no feasible grid point");
    return best;
}

} // namespace linksim::numerics

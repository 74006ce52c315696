#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

namespace unravel {

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double rms_residual = 0.0;
};

/// Ordinary least squares y = slope*x + intercept.
inline LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("linear_fit: need >= 2 matching samples");
    const auto n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0) throw std::invalid_argument("linear_fit: degenerate abscissae");
    LinearFit fit;
    fit.slope = (n * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / n;
    double ss = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (fit.slope * x[i] + fit.intercept);
        ss += r * r;
    }
    fit.rms_residual = std::sqrt(ss / n);
    return fit;
}

inline double mean(const std::vector<double>& v) {
    if (v.empty()) throw std::invalid_argument("mean: empty sample");
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double variance(const std::vector<double>& v) {
    if (v.size() < 2) throw std::invalid_argument("variance: need >= 2 samples");
    const double m = mean(v);
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

inline double pearson_correlation(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2)
        throw std::invalid_argument("pearson_correlation: need matching samples");
    const double ma = mean(a), mb = mean(b);
    double saa = 0, sbb = 0, sab = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
        sab += (a[i] - ma) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

inline double normal_cdf(double x, double mu = 0.0, double sigma = 1.0) {
    return 0.5 * std::erfc(-(x - mu) / (sigma * std::sqrt(2.0)));
}

namespace detail {

/// Regularized upper incomplete gamma Q(a, x); series + continued fraction.
inline double gamma_q(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_q: bad arguments");
    if (x == 0.0) return 1.0;
    const double gln = std::lgamma(a);
    if (x < a + 1.0) {
        // P(a,x) by series, return 1 - P
        double ap = a, sum = 1.0 / a, del = sum;
        for (int i = 0; i < 500; ++i) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::abs(del) < std::abs(sum) * 1e-15) break;
        }
        return 1.0 - sum * std::exp(-x + a * std::log(x) - gln);
    }
    // Q(a,x) by Lentz continued fraction
    const double tiny = 1e-300;
    double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-15) break;
    }
    return std::exp(-x + a * std::log(x) - gln) * h;
}

} // namespace detail

/// Upper-tail p-value of a chi-square statistic with the given dof.
inline double chi_square_sf(double statistic, double dof) {
    if (statistic < 0.0) return 1.0;
    return detail::gamma_q(0.5 * dof, 0.5 * statistic);
}

/// Survival function of the Kolmogorov distribution (asymptotic series).
inline double kolmogorov_sf(double t) {
    if (t <= 0.0) return 1.0;
    double sum = 0.0;
    for (int j = 1; j <= 100; ++j) {
        const double term = std::exp(-2.0 * j * j * t * t);
        sum += (j % 2 == 1) ? term : -term;
        if (term < 1e-16) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

/// One-sample Kolmogorov-Smirnov test against a continuous CDF.
/// Returns the asymptotic p-value (Stephens' small-sample correction).
inline double ks_test_pvalue(std::vector<double> samples,
                             const std::function<double(double)>& cdf) {
    if (samples.size() < 10) throw std::invalid_argument("ks_test_pvalue: too few samples");
    std::sort(samples.begin(), samples.end());
    const auto n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        const double lo = static_cast<double>(i) / n;
        const double hi = static_cast<double>(i + 1) / n;
        d = std::max({d, std::abs(f - lo), std::abs(hi - f)});
    }
    const double sn = std::sqrt(n);
    return kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d);
}

/// Chi-square goodness of fit of observed counts against expected counts.
/// Bins with expected < 5 are pooled into their neighbor.
inline double chi_square_gof_pvalue(const std::vector<double>& observed,
                                    const std::vector<double>& expected,
                                    int constraints = 1) {
    if (observed.size() != expected.size() || observed.empty())
        throw std::invalid_argument("chi_square_gof_pvalue: size mismatch");
    std::vector<double> obs, exp;
    double o_acc = 0, e_acc = 0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        o_acc += observed[i];
        e_acc += expected[i];
        if (e_acc >= 5.0) {
            obs.push_back(o_acc);
            exp.push_back(e_acc);
            o_acc = e_acc = 0;
        }
    }
    if (e_acc > 0 && !exp.empty()) {
        obs.back() += o_acc;
        exp.back() += e_acc;
    }
    if (exp.size() < 2) throw std::invalid_argument("chi_square_gof_pvalue: too few usable bins");
    double stat = 0;
    for (std::size_t i = 0; i < exp.size(); ++i) {
        const double d = obs[i] - exp[i];
        stat += d * d / exp[i];
    }
    const double dof = static_cast<double>(exp.size()) - static_cast<double>(constraints);
    return chi_square_sf(stat, std::max(1.0, dof));
}

/// Poisson dispersion test: counts n_i with common mean mu have
/// sum((n_i - nbar)^2)/nbar ~ chi-square with N-1 dof.
inline double poisson_dispersion_pvalue(const std::vector<double>& counts) {
    if (counts.size() < 10) throw std::invalid_argument("poisson_dispersion_pvalue: too few samples");
    const double m = mean(counts);
    if (m <= 0.0) throw std::invalid_argument("poisson_dispersion_pvalue: zero mean count");
    double stat = 0;
    for (double c : counts) stat += (c - m) * (c - m) / m;
    const double dof = static_cast<double>(counts.size() - 1);
    // two-sided: reject for both under- and over-dispersion
    const double upper = chi_square_sf(stat, dof);
    const double p = 2.0 * std::min(upper, 1.0 - upper);
    return std::clamp(p, 0.0, 1.0);
}

} // namespace unravel

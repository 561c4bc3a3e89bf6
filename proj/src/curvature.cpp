#include "curveflow/curvature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>

#include "curveflow/errors.hpp"
#include "curveflow/numeric.hpp"

namespace curveflow {

namespace {

constexpr int kMaxStackDim = 8;

void require_positive(std::span<const double> lambda) {
    for (double v : lambda) {
        if (!(v > 0.0)) {
            throw NonPositiveRadii("radii vector leaves the positive cone");
        }
    }
}

// Elementary symmetric polynomials e_0..e_m of lambda by the standard
// one-element-at-a-time recurrence, O(n*m).
void elementary_symmetric(std::span<const double> lambda, int m,
                          std::span<double> e) {
    e[0] = 1.0;
    for (int j = 1; j <= m; ++j) e[j] = 0.0;
    int count = 0;
    for (double v : lambda) {
        ++count;
        for (int j = std::min(m, count); j >= 1; --j) {
            e[j] += v * e[j - 1];
        }
    }
}

double eval_sigma(int m, std::span<const double> lambda) {
    const int n = static_cast<int>(lambda.size());
    if (m == 1) {
        double s = 0.0;
        for (double v : lambda) s += v;
        return s;
    }
    if (m == n) {
        double p = 1.0;
        for (double v : lambda) p *= v;
        return powr(p, 1.0 / m);
    }
    std::array<double, kMaxStackDim + 1> e_buf;
    std::vector<double> e_heap;
    std::span<double> e;
    if (m + 1 <= static_cast<int>(e_buf.size())) {
        e = std::span<double>(e_buf.data(), m + 1);
    } else {
        e_heap.resize(m + 1);
        e = e_heap;
    }
    elementary_symmetric(lambda, m, e);
    return powr(e[m], 1.0 / m);
}

// d e_m / d lambda_i = e_{m-1} of the remaining entries, obtained by
// deflating the full e-table by lambda_i.
void grad_sigma(int m, std::span<const double> lambda, std::span<double> out) {
    const int n = static_cast<int>(lambda.size());
    if (m == 1) {
        std::fill(out.begin(), out.end(), 1.0);
        return;
    }
    std::vector<double> e(m + 1);
    elementary_symmetric(lambda, m, e);
    const double f = powr(e[m], 1.0 / m);
    const double outer = f / (m * e[m]);  // (1/m) e_m^{1/m - 1}
    std::vector<double> d(m);             // deflated e_0..e_{m-1}
    for (int i = 0; i < n; ++i) {
        d[0] = 1.0;
        for (int j = 1; j <= m - 1; ++j) {
            d[j] = e[j] - lambda[i] * d[j - 1];
        }
        out[i] = outer * d[m - 1];
    }
}

double eval_pmean(double k, std::span<const double> lambda) {
    double s = 0.0;
    for (double v : lambda) s += powr(v, k);
    return powr(s, 1.0 / k);
}

void grad_pmean(double k, std::span<const double> lambda, std::span<double> out) {
    double s = 0.0;
    const int n = static_cast<int>(lambda.size());
    for (int i = 0; i < n; ++i) {
        out[i] = powr(lambda[i], k);
        s += out[i];
    }
    const double f = powr(s, 1.0 / k);
    for (int i = 0; i < n; ++i) {
        // f * lambda_i^{k-1} / s
        out[i] = f * (out[i] / lambda[i]) / s;
    }
}

double eval_unchecked(const CurvatureSpec& spec, std::span<const double> lambda);

void grad_unchecked(const CurvatureSpec& spec, std::span<const double> lambda,
                    std::span<double> out) {
    switch (spec.family) {
        case CurvatureFamily::sigma_m:
            grad_sigma(spec.m, lambda, out);
            return;
        case CurvatureFamily::power_mean:
            grad_pmean(spec.k, lambda, out);
            return;
        case CurvatureFamily::product: {
            // d/dl_j prod f_i^{w_i} = f * sum_i w_i (df_i/dl_j) / f_i
            const int n = static_cast<int>(lambda.size());
            std::fill(out.begin(), out.end(), 0.0);
            double f = 1.0;
            std::array<double, kMaxStackDim> g_buf;
            std::vector<double> g_heap;
            std::span<double> g;
            if (n <= kMaxStackDim) {
                g = std::span<double>(g_buf.data(), n);
            } else {
                g_heap.resize(n);
                g = g_heap;
            }
            for (std::size_t t = 0; t < spec.factors.size(); ++t) {
                const double w = spec.weights[t];
                if (w == 0.0) continue;
                const double ft = eval_unchecked(spec.factors[t], lambda);
                grad_unchecked(spec.factors[t], lambda, g);
                f *= powr(ft, w);
                for (int j = 0; j < n; ++j) out[j] += w * g[j] / ft;
            }
            for (int j = 0; j < n; ++j) out[j] *= f;
            return;
        }
    }
    throw InvalidSpec("unknown curvature family");
}

double eval_unchecked(const CurvatureSpec& spec, std::span<const double> lambda) {
    switch (spec.family) {
        case CurvatureFamily::sigma_m:
            return eval_sigma(spec.m, lambda);
        case CurvatureFamily::power_mean:
            return eval_pmean(spec.k, lambda);
        case CurvatureFamily::product: {
            double f = 1.0;
            for (std::size_t t = 0; t < spec.factors.size(); ++t) {
                const double w = spec.weights[t];
                if (w == 0.0) continue;
                f *= powr(eval_unchecked(spec.factors[t], lambda), w);
            }
            return f;
        }
    }
    throw InvalidSpec("unknown curvature family");
}

int product_leaf_depth(const CurvatureSpec& spec, int depth) {
    if (depth > 32) {
        throw InvalidSpec("product nesting too deep");
    }
    if (spec.family != CurvatureFamily::product) return depth;
    int best = -1;
    for (const auto& f : spec.factors) {
        best = std::max(best, product_leaf_depth(f, depth + 1));
    }
    return best;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// CurvatureSpec
// ---------------------------------------------------------------------------

CurvatureSpec CurvatureSpec::sigma(int m, int n) {
    CurvatureSpec s;
    s.family = CurvatureFamily::sigma_m;
    s.n = n;
    s.m = m;
    s.validate();
    return s;
}

CurvatureSpec CurvatureSpec::power_mean(double k, int n) {
    CurvatureSpec s;
    s.family = CurvatureFamily::power_mean;
    s.n = n;
    s.k = k;
    s.validate();
    return s;
}

CurvatureSpec CurvatureSpec::product(std::vector<CurvatureSpec> factors,
                                     std::vector<double> weights, int n) {
    CurvatureSpec s;
    s.family = CurvatureFamily::product;
    s.n = n;
    s.factors = std::move(factors);
    s.weights = std::move(weights);
    s.validate();
    return s;
}

void CurvatureSpec::validate() const {
    if (n < 1) throw InvalidSpec("dimension must be >= 1");
    switch (family) {
        case CurvatureFamily::sigma_m:
            if (m < 1 || m > n) {
                throw InvalidSpec("sigma_m requires 1 <= m <= n, got m=" +
                                  std::to_string(m) + ", n=" + std::to_string(n));
            }
            return;
        case CurvatureFamily::power_mean:
            if (!(k > 0.0)) {
                throw InvalidSpec("power mean requires k > 0");
            }
            return;
        case CurvatureFamily::product: {
            if (factors.empty() || factors.size() != weights.size()) {
                throw InvalidSpec("product needs matching factor/weight lists");
            }
            double sum = 0.0;
            for (double w : weights) {
                if (!(w >= 0.0)) throw InvalidSpec("product weight < 0");
                sum += w;
            }
            if (std::abs(sum - 1.0) > 1e-12) {
                throw InvalidSpec("product weights must sum to 1, got " +
                                  format_double(sum));
            }
            for (const auto& f : factors) {
                if (f.n != n) throw InvalidSpec("product factor dimension mismatch");
                f.validate();
            }
            product_leaf_depth(*this, 0);
            return;
        }
    }
    throw InvalidSpec("unknown curvature family");
}

std::string CurvatureSpec::to_string() const {
    switch (family) {
        case CurvatureFamily::sigma_m:
            return "sigma:" + std::to_string(m);
        case CurvatureFamily::power_mean:
            return "pmean:" + format_double(k);
        case CurvatureFamily::product: {
            std::string out = "product:(";
            for (std::size_t i = 0; i < factors.size(); ++i) {
                if (i) out += ",";
                out += factors[i].to_string() + "*" + format_double(weights[i]);
            }
            return out + ")";
        }
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

double eval_f(const CurvatureSpec& spec, std::span<const double> lambda) {
    if (static_cast<int>(lambda.size()) != spec.n) {
        throw InvalidSpec("radii vector length does not match spec dimension");
    }
    require_positive(lambda);
    return eval_unchecked(spec, lambda);
}

void grad_f(const CurvatureSpec& spec, std::span<const double> lambda,
            std::span<double> out) {
    if (static_cast<int>(lambda.size()) != spec.n ||
        out.size() != lambda.size()) {
        throw InvalidSpec("radii vector length does not match spec dimension");
    }
    require_positive(lambda);
    grad_unchecked(spec, lambda, out);
}

std::vector<double> grad_f(const CurvatureSpec& spec,
                           std::span<const double> lambda) {
    std::vector<double> out(lambda.size());
    grad_f(spec, lambda, out);
    return out;
}

double eval_f_and_grad(const CurvatureSpec& spec, std::span<const double> lambda,
                       std::span<double> grad_out) {
    grad_f(spec, lambda, grad_out);
    return eval_unchecked(spec, lambda);
}

double eval_f_star(const CurvatureSpec& spec, std::span<const double> lambda) {
    require_positive(lambda);
    std::array<double, kMaxStackDim> inv_buf;
    std::vector<double> inv_heap;
    std::span<double> inv;
    const std::size_t n = lambda.size();
    if (n <= kMaxStackDim) {
        inv = std::span<double>(inv_buf.data(), n);
    } else {
        inv_heap.resize(n);
        inv = inv_heap;
    }
    for (std::size_t i = 0; i < n; ++i) inv[i] = 1.0 / lambda[i];
    return 1.0 / eval_f(spec, inv);
}

double gamma_constant(const CurvatureSpec& spec, double beta) {
    spec.validate();
    std::vector<double> ones(spec.n, 1.0);
    return powr(eval_unchecked(spec, ones), beta);
}

// ---------------------------------------------------------------------------
// Sampled inverse-concavity check
// ---------------------------------------------------------------------------

ConcavityReport check_inverse_concavity(const CurvatureSpec& spec, long samples,
                                        std::uint64_t seed) {
    spec.validate();
    if (samples < 1) throw InvalidSpec("need at least one sample");

    ConcavityReport rep;
    rep.samples = samples;
    rep.worst_margin = std::numeric_limits<double>::infinity();

    SplitMix64 rng(seed);
    const int n = spec.n;
    std::vector<double> a(n), b(n), mid(n);
    for (long s = 0; s < samples; ++s) {
        for (int i = 0; i < n; ++i) {
            a[i] = rng.uniform(0.05, 20.0);
            b[i] = rng.uniform(0.05, 20.0);
            mid[i] = 0.5 * (a[i] + b[i]);
        }
        const double lhs = eval_f_star(spec, mid);
        const double rhs = 0.5 * (eval_f_star(spec, a) + eval_f_star(spec, b));
        const double margin = lhs - rhs;
        rep.worst_margin = std::min(rep.worst_margin, margin);
        if (margin < -rep.tol) ++rep.violations;
    }

    // Boundary probe: f_* along (eps, 1, ..., 1) as eps -> 0+.
    std::vector<double> probe(n, 1.0);
    for (double eps = 1e-1; eps >= 0.9e-8; eps *= 0.1) {
        probe[0] = eps;
        rep.boundary_eps.push_back(eps);
        rep.boundary_values.push_back(eval_f_star(spec, probe));
    }
    bool decreasing = true;
    for (std::size_t i = 1; i < rep.boundary_values.size(); ++i) {
        if (rep.boundary_values[i] >= rep.boundary_values[i - 1]) decreasing = false;
    }
    const double first = rep.boundary_values.front();
    const double last = rep.boundary_values.back();
    // seven decades of eps; even a sqrt(eps)-rate dual drops well below this
    rep.boundary_vanishes = decreasing && (last < 0.01 * first) && (last < 0.01);
    return rep;
}

// ---------------------------------------------------------------------------
// Spec-string grammar
// ---------------------------------------------------------------------------

namespace {

// splits "a*w,b*w,..." at top-level commas (parentheses nest).
std::vector<std::string> split_top_level(const std::string& s) {
    std::vector<std::string> parts;
    int depth = 0;
    std::string cur;
    for (char ch : s) {
        if (ch == '(') ++depth;
        if (ch == ')') --depth;
        if (ch == ',' && depth == 0) {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    parts.push_back(cur);
    return parts;
}

double parse_number(const std::string& s, const std::string& what) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw ParseError("cannot parse " + what + " from '" + s + "'");
    }
    if (pos != s.size()) {
        throw ParseError("trailing characters in " + what + " '" + s + "'");
    }
    return v;
}

}  // namespace

CurvatureSpec parse_curvature_spec(const std::string& text, int n) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) {
        throw ParseError("curvature spec '" + text +
                         "' is missing ':' (expected sigma:M, pmean:K or "
                         "product:(...))");
    }
    const std::string head = text.substr(0, colon);
    const std::string rest = text.substr(colon + 1);

    if (head == "sigma") {
        const double mv = parse_number(rest, "sigma order");
        const int m = static_cast<int>(mv);
        if (mv != m) throw ParseError("sigma order must be an integer");
        if (m < 1 || m > n) {
            throw RangeError("sigma:" + rest + " needs 1 <= m <= n (n=" +
                             std::to_string(n) + ")");
        }
        return CurvatureSpec::sigma(m, n);
    }
    if (head == "pmean") {
        const double k = parse_number(rest, "power mean exponent");
        if (!(k > 0.0)) throw RangeError("pmean exponent must be > 0");
        return CurvatureSpec::power_mean(k, n);
    }
    if (head == "product") {
        if (rest.size() < 2 || rest.front() != '(' || rest.back() != ')') {
            throw ParseError("product spec must look like product:(...)");
        }
        const std::string inner = rest.substr(1, rest.size() - 2);
        std::vector<CurvatureSpec> factors;
        std::vector<double> weights;
        for (const std::string& part : split_top_level(inner)) {
            const auto star = part.rfind('*');
            if (star == std::string::npos) {
                throw ParseError("product factor '" + part +
                                 "' is missing '*weight'");
            }
            factors.push_back(parse_curvature_spec(part.substr(0, star), n));
            weights.push_back(parse_number(part.substr(star + 1), "weight"));
        }
        try {
            return CurvatureSpec::product(std::move(factors), std::move(weights), n);
        } catch (const InvalidSpec& e) {
            throw RangeError(e.what());
        }
    }
    throw ParseError("unknown curvature family '" + head + "'");
}

// ---------------------------------------------------------------------------
// Hot-loop kernel
// ---------------------------------------------------------------------------

CurvatureKernel CurvatureKernel::compile(const CurvatureSpec& spec) {
    spec.validate();
    CurvatureKernel ker;
    ker.spec = &spec;
    if (spec.n == 1) {
        ker.tag = Tag::scale1d;
        const double one = 1.0;
        ker.c = eval_f(spec, std::span<const double>(&one, 1));
        return ker;
    }
    if (spec.n == 2) {
        if (spec.family == CurvatureFamily::sigma_m) {
            ker.tag = (spec.m == 1) ? Tag::sigma1 : Tag::sigma2;
            return ker;
        }
        if (spec.family == CurvatureFamily::power_mean) {
            if (spec.k == 2.0) {
                ker.tag = Tag::pmean2;
            } else {
                ker.tag = Tag::pmean_k;
                ker.k = spec.k;
            }
            return ker;
        }
    }
    ker.tag = Tag::generic;
    return ker;
}

double kernel_generic_value(const CurvatureSpec& spec, double l1, double l2) {
    const std::array<double, 2> lam{l1, l2};
    return eval_unchecked(spec, lam);
}

double kernel_generic_grad_sum(const CurvatureSpec& spec, double l1, double l2) {
    const std::array<double, 2> lam{l1, l2};
    std::array<double, 2> g;
    grad_unchecked(spec, lam, g);
    return g[0] + g[1];
}

}  // namespace curveflow

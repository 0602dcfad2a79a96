#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "chorus/error.hpp"

namespace chorus {

// ---- special functions -------------------------------------------------

namespace stats_detail {

// Continued fraction for the incomplete beta (Lentz).
inline double betacf(double a, double b, double x) {
    constexpr double tiny = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 500; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 3e-15) break;
    }
    return h;
}

} // namespace stats_detail

// Regularized incomplete beta I_x(a, b).
inline double reg_inc_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * stats_detail::betacf(a, b, x) / a;
    return 1.0 - front * stats_detail::betacf(b, a, 1.0 - x) / b;
}

// Two-sided p for Student's t with df degrees of freedom.
inline double student_t_two_sided_p(double t, double df) {
    return reg_inc_beta(df / 2.0, 0.5, df / (df + t * t));
}

inline double normal_two_sided_p(double z) {
    return std::erfc(std::fabs(z) / std::sqrt(2.0));
}

// ---- confusion matrix & metrics ----------------------------------------

struct ConfusionMatrix {
    std::size_t n_classes = 0;
    std::vector<std::int64_t> counts; // row = true, col = predicted
    std::vector<std::string> class_names;

    std::int64_t at(std::size_t t, std::size_t p) const { return counts[t * n_classes + p]; }
    std::int64_t& at(std::size_t t, std::size_t p) { return counts[t * n_classes + p]; }

    std::int64_t total() const { return std::accumulate(counts.begin(), counts.end(), std::int64_t{0}); }
    std::int64_t trace() const {
        std::int64_t acc = 0;
        for (std::size_t i = 0; i < n_classes; ++i) acc += at(i, i);
        return acc;
    }
};

inline ConfusionMatrix confusion_matrix(const std::vector<std::size_t>& y_true,
                                        const std::vector<std::size_t>& y_pred, std::size_t n_classes,
                                        std::vector<std::string> class_names = {}) {
    CHORUS_REQUIRE(y_true.size() == y_pred.size(), Err::LengthMismatch,
                   "true/predicted label sequences differ in length");
    ConfusionMatrix cm;
    cm.n_classes = n_classes;
    cm.counts.assign(n_classes * n_classes, 0);
    if (class_names.empty()) {
        for (std::size_t i = 0; i < n_classes; ++i)
            class_names.push_back("class_" + std::to_string(i));
    }
    CHORUS_REQUIRE(class_names.size() == n_classes, Err::LengthMismatch,
                   "class name count differs from n_classes");
    cm.class_names = std::move(class_names);
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        CHORUS_REQUIRE(y_true[i] < n_classes && y_pred[i] < n_classes, Err::LabelOutOfRange,
                       "label outside [0, n_classes)");
        ++cm.at(y_true[i], y_pred[i]);
    }
    return cm;
}

struct ClassMetrics {
    std::string name;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::int64_t support = 0;
    bool degenerate = false; // some denominator was zero
};

struct MetricsReport {
    double accuracy = 0.0;
    double macro_precision = 0.0, macro_recall = 0.0, macro_f1 = 0.0;
    double micro_precision = 0.0, micro_recall = 0.0, micro_f1 = 0.0;
    std::vector<ClassMetrics> per_class;
    ConfusionMatrix confusion;
};

// Per-class precision/recall/F1 plus macro means over classes with support;
// zero denominators yield 0 with the degenerate flag set.
inline MetricsReport metrics_from_confusion(const ConfusionMatrix& cm) {
    CHORUS_REQUIRE(cm.total() > 0, Err::EmptyMatrix, "empty confusion matrix");
    MetricsReport rep;
    rep.confusion = cm;
    rep.accuracy = static_cast<double>(cm.trace()) / static_cast<double>(cm.total());

    double macro_p = 0.0, macro_r = 0.0, macro_f = 0.0;
    std::size_t included = 0;
    for (std::size_t c = 0; c < cm.n_classes; ++c) {
        ClassMetrics m;
        m.name = cm.class_names[c];
        const std::int64_t tp = cm.at(c, c);
        std::int64_t fp = 0, fn = 0;
        for (std::size_t o = 0; o < cm.n_classes; ++o) {
            if (o == c) continue;
            fp += cm.at(o, c);
            fn += cm.at(c, o);
        }
        m.support = tp + fn;
        if (tp + fp > 0) {
            m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        } else {
            m.degenerate = true;
        }
        if (m.support > 0) {
            m.recall = static_cast<double>(tp) / static_cast<double>(m.support);
        } else {
            m.degenerate = true;
        }
        if (m.precision + m.recall > 0.0) {
            m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
        }
        if (m.support > 0) {
            macro_p += m.precision;
            macro_r += m.recall;
            macro_f += m.f1;
            ++included;
        }
        rep.per_class.push_back(std::move(m));
    }
    if (included > 0) {
        rep.macro_precision = macro_p / static_cast<double>(included);
        rep.macro_recall = macro_r / static_cast<double>(included);
        rep.macro_f1 = macro_f / static_cast<double>(included);
    }
    // single-label multiclass: micro precision/recall/f1 all equal accuracy
    rep.micro_precision = rep.micro_recall = rep.micro_f1 = rep.accuracy;
    return rep;
}

inline void to_json(nlohmann::json& j, const MetricsReport& r) {
    nlohmann::json classes = nlohmann::json::array();
    for (const auto& c : r.per_class)
        classes.push_back({{"name", c.name},
                           {"precision", c.precision},
                           {"recall", c.recall},
                           {"f1", c.f1},
                           {"support", c.support},
                           {"degenerate", c.degenerate}});
    nlohmann::json confusion = nlohmann::json::array();
    for (std::size_t t = 0; t < r.confusion.n_classes; ++t) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t p = 0; p < r.confusion.n_classes; ++p) row.push_back(r.confusion.at(t, p));
        confusion.push_back(row);
    }
    j = {{"accuracy", r.accuracy},
         {"macro",
          {{"precision", r.macro_precision}, {"recall", r.macro_recall}, {"f1", r.macro_f1}}},
         {"micro",
          {{"precision", r.micro_precision}, {"recall", r.micro_recall}, {"f1", r.micro_f1}}},
         {"classes", classes},
         {"confusion", confusion}};
}

// ---- significance tests --------------------------------------------------

struct SignificanceResult {
    std::string method;
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;         // pairs used (zeros dropped for wilcoxon)
    std::size_t dropped = 0;   // zero differences removed
    bool degenerate = false;
};

inline void to_json(nlohmann::json& j, const SignificanceResult& r) {
    j = {{"method", r.method},   {"statistic", r.statistic}, {"p_value", r.p_value},
         {"n", r.n},             {"dropped", r.dropped},     {"degenerate", r.degenerate}};
}

// Two-sided paired t-test, sample standard deviation (n-1), Student t
// p-value through the regularized incomplete beta.
inline SignificanceResult paired_t_test(const std::vector<double>& a,
                                        const std::vector<double>& b) {
    CHORUS_REQUIRE(a.size() == b.size(), Err::LengthMismatch, "paired samples differ in length");
    const std::size_t n = a.size();
    CHORUS_REQUIRE(n >= 2, Err::TooFewSamples, "need at least two pairs");

    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
    mean /= static_cast<double>(n);
    double ss = 0.0;
    bool all_zero = true;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        if (d != 0.0) all_zero = false;
        ss += (d - mean) * (d - mean);
    }
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));

    SignificanceResult res;
    res.method = "paired_t";
    res.n = n;
    if (all_zero) {
        res.degenerate = true;
        res.p_value = 1.0;
        return res;
    }
    if (sd == 0.0) {
        // constant nonzero difference: unbounded statistic
        res.degenerate = true;
        res.statistic = mean > 0 ? 1e308 : -1e308;
        res.p_value = 0.0;
        return res;
    }
    res.statistic = mean / (sd / std::sqrt(static_cast<double>(n)));
    res.p_value = student_t_two_sided_p(res.statistic, static_cast<double>(n - 1));
    return res;
}

namespace stats_detail {

// Ranks of |d| with average ranks on ties, scaled by 2 so they are integers.
inline std::vector<std::int64_t> scaled_ranks(const std::vector<double>& abs_d) {
    const std::size_t n = abs_d.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return abs_d[i] < abs_d[j]; });
    std::vector<std::int64_t> r2(n, 0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && abs_d[order[j + 1]] == abs_d[order[i]]) ++j;
        // average rank over the tie run [i, j], doubled: (i+1 + j+1)
        const std::int64_t avg2 = static_cast<std::int64_t>(i + j + 2);
        for (std::size_t k = i; k <= j; ++k) r2[order[k]] = avg2;
        i = j + 1;
    }
    return r2;
}

} // namespace stats_detail

// Wilcoxon signed-rank test: exact two-sided p by enumerating the sign
// distribution for n <= 20 (dynamic program over achievable rank sums,
// identical to full enumeration), normal approximation with continuity
// correction beyond that. Zero differences are dropped and reported.
inline SignificanceResult wilcoxon_signed_rank(const std::vector<double>& a,
                                               const std::vector<double>& b) {
    CHORUS_REQUIRE(a.size() == b.size(), Err::LengthMismatch, "paired samples differ in length");
    std::vector<double> d;
    std::size_t dropped = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double v = a[i] - b[i];
        if (v == 0.0) {
            ++dropped;
        } else {
            d.push_back(v);
        }
    }

    SignificanceResult res;
    res.method = "wilcoxon";
    res.dropped = dropped;
    res.n = d.size();
    if (d.empty()) {
        res.degenerate = true;
        res.p_value = 1.0;
        return res;
    }

    std::vector<double> abs_d(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) abs_d[i] = std::fabs(d[i]);
    const auto r2 = stats_detail::scaled_ranks(abs_d);

    std::int64_t w_plus2 = 0, total2 = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        total2 += r2[i];
        if (d[i] > 0) w_plus2 += r2[i];
    }
    res.statistic = static_cast<double>(w_plus2) / 2.0;

    const std::size_t n = d.size();
    if (n <= 20) {
        // distribution of W+ (doubled) over all 2^n sign assignments
        std::vector<double> count(static_cast<std::size_t>(total2) + 1, 0.0);
        count[0] = 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto r = static_cast<std::size_t>(r2[i]);
            for (std::size_t s = count.size(); s-- > r;) count[s] += count[s - r];
        }
        const double denom = std::pow(2.0, static_cast<double>(n));
        const std::int64_t hi = std::max(w_plus2, total2 - w_plus2);
        const std::int64_t lo = std::min(w_plus2, total2 - w_plus2);
        double tail_hi = 0.0, tail_lo = 0.0;
        for (std::size_t s = 0; s < count.size(); ++s) {
            if (static_cast<std::int64_t>(s) >= hi) tail_hi += count[s];
            if (static_cast<std::int64_t>(s) <= lo) tail_lo += count[s];
        }
        res.p_value = std::min(1.0, (tail_hi + tail_lo) / denom);
    } else {
        const double nn = static_cast<double>(n);
        const double mean = nn * (nn + 1.0) / 4.0;
        double tie_corr = 0.0;
        {
            std::vector<double> sorted = abs_d;
            std::sort(sorted.begin(), sorted.end());
            std::size_t i = 0;
            while (i < sorted.size()) {
                std::size_t j = i;
                while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
                const double t = static_cast<double>(j - i + 1);
                tie_corr += t * t * t - t;
                i = j + 1;
            }
        }
        const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_corr / 48.0;
        const double w = static_cast<double>(w_plus2) / 2.0;
        const double num = std::fabs(w - mean) - 0.5; // continuity correction
        const double z = var > 0.0 ? std::max(num, 0.0) / std::sqrt(var) : 0.0;
        res.statistic = w;
        res.p_value = std::min(1.0, normal_two_sided_p(z));
        if (var <= 0.0) res.degenerate = true;
    }
    return res;
}

} // namespace chorus

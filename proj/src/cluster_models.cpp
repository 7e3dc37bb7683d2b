#include "heavysum/cluster_models.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "heavysum/errors.hpp"

namespace heavysum {

namespace {

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 2.0) || !std::isfinite(alpha)) {
        throw ConfigError("cluster models need alpha in (0,2)");
    }
}

} // namespace

int ClusterDraw::argmax_abs() const {
    Eigen::Index idx = 0;
    values.cwiseAbs().maxCoeff(&idx);  // Eigen returns the first maximizer
    return t_min + static_cast<int>(idx);
}

// --- ClusterShape ------------------------------------------------------------

double ClusterShape::sum() const {
    double s = values.sum();
    if (tail_ratio != 0.0 && values.size() > 0) {
        s += values(values.size() - 1) * tail_ratio / (1.0 - tail_ratio);
    }
    return s;
}

double ClusterShape::max_abs() const {
    return values.size() == 0 ? 0.0 : values.cwiseAbs().maxCoeff();
}

double ClusterShape::pnorm_pow(double p) const {
    double s = values.cwiseAbs().array().pow(p).sum();
    if (tail_ratio != 0.0 && values.size() > 0) {
        const double rp = std::pow(std::abs(tail_ratio), p);
        s += std::pow(std::abs(values(values.size() - 1)), p) * rp / (1.0 - rp);
    }
    return s;
}

ClusterShape ClusterShape::scaled(double c) const {
    return ClusterShape{values * c, tail_ratio};
}

// --- ClusterLaw --------------------------------------------------------------

Estimate ClusterLaw::expect(const std::function<double(const ClusterShape&)>& f) const {
    std::vector<double> vals(shapes.size());
    double total_w = 0.0;
    double mean = 0.0;
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        vals[i] = f(shapes[i]);
        mean += weights[i] * vals[i];
        total_w += weights[i];
    }
    mean /= total_w;
    double se = 0.0;
    if (!exact && shapes.size() > 1) {
        double acc = 0.0;
        for (std::size_t i = 0; i < shapes.size(); ++i) {
            const double w = weights[i] / total_w;
            acc += w * w * (vals[i] - mean) * (vals[i] - mean);
        }
        const double n = static_cast<double>(shapes.size());
        se = std::sqrt(acc * n / (n - 1.0));
    }
    return Estimate{mean, se, static_cast<std::int64_t>(shapes.size()), exact ? "closed_form" : "monte_carlo"};
}

ClusterLaw ClusterLaw::reweighted(const std::function<double(const ClusterShape&)>& w,
                                  const std::function<ClusterShape(const ClusterShape&)>& g) const {
    ClusterLaw out;
    out.exact = exact;
    out.alpha = alpha;
    double total = 0.0;
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        const double wi = weights[i] * w(shapes[i]);
        if (wi <= 0.0) {
            continue;
        }
        out.weights.push_back(wi);
        out.shapes.push_back(g(shapes[i]));
        total += wi;
    }
    for (double& wi : out.weights) {
        wi /= total;
    }
    return out;
}

ClusterLaw ClusterLaw::tilted() const {
    const double a = alpha;
    return reweighted([a](const ClusterShape& s) { return std::pow(s.max_abs(), a); },
                      [](const ClusterShape& s) { return s.scaled(1.0 / s.max_abs()); });
}

// --- ClusterModel ------------------------------------------------------------

ClusterModel ClusterModel::iid(double alpha, double q_plus) {
    check_alpha(alpha);
    if (q_plus < 0.0 || q_plus > 1.0) {
        throw ConfigError("q_plus must lie in [0,1]");
    }
    ClusterModel m;
    m.kind_ = ClusterKind::iid;
    m.alpha_ = alpha;
    m.q_plus_ = q_plus;
    m.p_plus_ = q_plus;
    return m;
}

ClusterModel ClusterModel::ar1(double phi, double alpha, double q_plus) {
    check_alpha(alpha);
    if (!(std::abs(phi) < 1.0) || phi == 0.0) {
        throw ConfigError("AR(1) cluster needs 0 < |phi| < 1");
    }
    if (q_plus < 0.0 || q_plus > 1.0) {
        throw ConfigError("q_plus must lie in [0,1]");
    }
    ClusterModel m;
    m.kind_ = ClusterKind::ar1_analytic;
    m.alpha_ = alpha;
    m.phi_ = phi;
    m.q_plus_ = q_plus;
    m.ratio_alpha_ = std::pow(std::abs(phi), alpha);
    m.qmax_ = std::pow(1.0 - m.ratio_alpha_, 1.0 / alpha);
    if (phi > 0.0) {
        m.p_plus_ = q_plus;
    } else {
        const double r = m.ratio_alpha_;
        m.p_plus_ = (q_plus + (1.0 - q_plus) * r) / (1.0 + r);
    }
    return m;
}

ClusterModel ClusterModel::empirical(const ProcessModel& source, const EmpiricalClusterOptions& options,
                                     std::uint64_t seed) {
    source.validate();
    if (!(options.threshold_quantile > 0.0 && options.threshold_quantile < 1.0)) {
        throw ConfigError("threshold_quantile must lie in (0,1)");
    }
    if (options.half_width < 0) {
        throw ConfigError("half_width must be >= 0");
    }
    if (options.path_length < 2 * options.half_width + 2) {
        throw ConfigError("path_length too short for the block half-width");
    }
    ClusterModel m;
    m.kind_ = ClusterKind::empirical;
    m.alpha_ = source.alpha;
    m.options_ = options;
    m.source_ = std::make_shared<const ProcessModel>(source);

    const Path path = sample_path(source, options.path_length, seed, 0);
    const Eigen::VectorXd& x = path.values;
    std::vector<double> mags(static_cast<std::size_t>(x.size()));
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        mags[static_cast<std::size_t>(i)] = std::abs(x(i));
    }
    const auto k = static_cast<std::size_t>(options.threshold_quantile * static_cast<double>(mags.size()));
    std::nth_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(k), mags.end());
    m.threshold_ = mags[k];

    const int hw = options.half_width;
    const int edge = std::max(1, (2 * hw + 1) / 10);
    auto bank = std::make_shared<std::vector<ClusterDraw>>();
    for (Eigen::Index t = hw; t + hw < x.size(); ++t) {
        if (std::abs(x(t)) <= m.threshold_) {
            continue;
        }
        ClusterDraw q;
        q.t_min = -hw;
        q.alpha = m.alpha_;
        Eigen::VectorXd block = x.segment(t - hw, 2 * hw + 1);
        const double norm_pow = block.cwiseAbs().array().pow(m.alpha_).sum();
        q.values = block / std::pow(norm_pow, 1.0 / m.alpha_);
        const Eigen::ArrayXd mass = q.values.cwiseAbs().array().pow(m.alpha_);
        q.truncation_error = mass.head(edge).sum() + mass.tail(edge).sum();
        bank->push_back(std::move(q));
    }
    if (bank->empty()) {
        throw SamplingError("no exceedances of the threshold; lower threshold_quantile or lengthen the path");
    }
    m.bank_ = std::move(bank);
    // Empirical clusters carry no sign model; p_plus is only used by the analytic kinds.
    m.p_plus_ = 0.5;
    return m;
}

const std::vector<ClusterDraw>& ClusterModel::bank() const {
    if (!bank_) {
        throw UnsupportedError("only empirical cluster models carry a bank of draws");
    }
    return *bank_;
}

int ClusterModel::default_horizon() const {
    switch (kind_) {
    case ClusterKind::iid:
        return 0;
    case ClusterKind::ar1_analytic: {
        const double r = ratio_alpha_;
        int h = 0;
        while (std::pow(r, h) / (1.0 - r) >= 1e-10) {
            ++h;
        }
        return h;
    }
    case ClusterKind::empirical:
        return options_.half_width;
    }
    return 0;
}

std::string ClusterModel::name() const {
    std::ostringstream os;
    switch (kind_) {
    case ClusterKind::iid:
        os << "iid(alpha=" << alpha_ << ", q+=" << q_plus_ << ")";
        break;
    case ClusterKind::ar1_analytic:
        os << "ar1(phi=" << phi_ << ", alpha=" << alpha_ << ", q+=" << q_plus_ << ")";
        break;
    case ClusterKind::empirical:
        os << "empirical(" << source_->name() << ", q=" << options_.threshold_quantile
           << ", hw=" << options_.half_width << ")";
        break;
    }
    return os.str();
}

ClusterLaw ClusterModel::law(std::size_t mc_size, std::uint64_t seed) const {
    ClusterLaw out;
    out.alpha = alpha_;
    switch (kind_) {
    case ClusterKind::iid:
        for (double s : {1.0, -1.0}) {
            const double w = s > 0 ? q_plus_ : 1.0 - q_plus_;
            if (w > 0.0) {
                out.weights.push_back(w);
                out.shapes.push_back(ClusterShape{Eigen::VectorXd::Constant(1, s), 0.0});
            }
        }
        out.exact = true;
        break;
    case ClusterKind::ar1_analytic: {
        double w_plus = p_plus_;
        if (phi_ < 0.0) {
            const double even = 1.0 / (1.0 + ratio_alpha_);
            w_plus = p_plus_ * even + (1.0 - p_plus_) * (1.0 - even);
        }
        for (double s : {1.0, -1.0}) {
            const double w = s > 0 ? w_plus : 1.0 - w_plus;
            if (w > 0.0) {
                out.weights.push_back(w);
                out.shapes.push_back(ClusterShape{Eigen::VectorXd::Constant(1, s * qmax_), phi_});
            }
        }
        out.exact = true;
        break;
    }
    case ClusterKind::empirical: {
        const auto& b = bank();
        out.exact = false;
        if (mc_size == 0 || mc_size >= b.size()) {
            for (const auto& q : b) {
                out.shapes.push_back(ClusterShape{q.values, 0.0});
            }
        } else {
            Philox rng(seed, 0);
            for (std::size_t i = 0; i < mc_size; ++i) {
                out.shapes.push_back(ClusterShape{draw_cluster(rng, 0).values, 0.0});
            }
        }
        out.weights.assign(out.shapes.size(), 1.0 / static_cast<double>(out.shapes.size()));
        break;
    }
    }
    return out;
}

// --- sampling operations -----------------------------------------------------

TailProcessDraw sample_spectral_tail(const ClusterModel& model, int horizon, std::uint64_t seed,
                                     std::uint64_t stream) {
    if (horizon < 0) {
        throw ConfigError("horizon must be >= 0");
    }
    Philox rng(seed, stream);
    return model.draw_tail(rng, horizon);
}

ClusterDraw sample_cluster(const ClusterModel& model, int horizon, std::uint64_t seed, std::uint64_t stream) {
    if (horizon < 0) {
        throw ConfigError("horizon must be >= 0");
    }
    Philox rng(seed, stream);
    return model.draw_cluster(rng, horizon);
}

namespace {

template <typename Engine>
TiltedClusterDraw draw_tilted(const ClusterModel& model, int horizon, Engine& rng) {
    TiltedClusterDraw out;
    out.proposals = 0;
    for (;;) {
        ClusterDraw q = model.draw_cluster(rng, horizon);
        ++out.proposals;
        const double m = q.max_abs();
        if (uniform_open(rng) < std::pow(m, model.alpha())) {
            out.t_min = q.t_min;
            out.alpha = q.alpha;
            out.values = q.values / m;
            out.truncation_error = q.truncation_error / std::pow(m, model.alpha());
            return out;
        }
    }
}

} // namespace

TiltedClusterDraw sample_tilted_cluster(const ClusterModel& model, int horizon, std::uint64_t seed,
                                        std::uint64_t stream) {
    if (horizon < 0) {
        throw ConfigError("horizon must be >= 0");
    }
    Philox rng(seed, stream);
    return draw_tilted(model, horizon, rng);
}

TiltedBatch sample_tilted_clusters(const ClusterModel& model, int horizon, std::size_t count,
                                   std::uint64_t seed) {
    Philox rng(seed, 0);
    TiltedBatch batch;
    batch.draws.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        batch.draws.push_back(draw_tilted(model, horizon, rng));
        batch.proposals += batch.draws.back().proposals;
    }
    const double p = static_cast<double>(count) / static_cast<double>(batch.proposals);
    batch.acceptance = Estimate{p, std::sqrt(p * (1.0 - p) / static_cast<double>(batch.proposals)),
                                batch.proposals, "tilted_acceptance"};
    return batch;
}

Estimate tilted_acceptance_rate(const ClusterModel& model, std::int64_t proposals, std::uint64_t seed) {
    if (proposals < 1) {
        throw ConfigError("need at least one proposal");
    }
    Philox rng(seed, 0);
    const int horizon = model.default_horizon();
    RunningStats acc;
    for (std::int64_t i = 0; i < proposals; ++i) {
        const double m = model.kind() == ClusterKind::empirical ? model.draw_cluster(rng, horizon).max_abs()
                                                                : model.draw_summary(rng, 1.0).max_abs;
        acc.add(uniform_open(rng) < std::pow(m, model.alpha()) ? 1.0 : 0.0);
    }
    return acc.to_estimate("tilted_acceptance");
}

Estimate sre_extremal_index(const ProcessModel& model, std::int64_t reps, std::uint64_t seed, int max_steps) {
    if (model.kind != ProcessKind::sre) {
        throw ConfigError("sre_extremal_index needs an SRE model");
    }
    Philox rng(seed, 0);
    RunningStats acc;
    const double floor_log = std::log(1e-14) / model.alpha;
    for (std::int64_t r = 0; r < reps; ++r) {
        double log_prod = 0.0;
        double sup = 0.0;
        for (int t = 1; t <= max_steps; ++t) {
            const double a = std::abs(model.sre.draw_a(rng));
            if (a == 0.0) {
                break;
            }
            log_prod += std::log(a);
            sup = std::max(sup, std::exp(model.alpha * log_prod));
            if (sup >= 1.0 || log_prod < floor_log) {
                break;
            }
        }
        acc.add(std::max(0.0, 1.0 - sup));
    }
    return acc.to_estimate("kesten_product");
}

Estimate extremal_index_from_clusters(const ClusterModel& model, std::int64_t reps, std::uint64_t seed) {
    Philox rng(seed, 0);
    RunningStats acc;
    const int horizon = model.default_horizon();
    for (std::int64_t i = 0; i < reps; ++i) {
        acc.add(std::pow(model.draw_cluster(rng, horizon).max_abs(), model.alpha()));
    }
    return acc.to_estimate("cluster_max_moment");
}

Estimate extremal_index(const ClusterModel& model, std::int64_t reps, std::uint64_t seed) {
    switch (model.kind()) {
    case ClusterKind::iid:
        return Estimate{1.0, 0.0, 0, "closed_form"};
    case ClusterKind::ar1_analytic:
        return Estimate{1.0 - std::pow(std::abs(model.phi()), model.alpha()), 0.0, 0, "closed_form"};
    case ClusterKind::empirical: {
        const ProcessModel* src = model.source();
        if (src->kind == ProcessKind::sre) {
            return sre_extremal_index(*src, reps, seed);
        }
        RunningStats acc;
        for (const auto& q : model.bank()) {
            acc.add(std::pow(q.max_abs(), model.alpha()));
        }
        return acc.to_estimate("cluster_max_moment");
    }
    }
    return {};
}

Estimate cluster_moment(const ClusterModel& model, double p) {
    if (!(p > 0.0)) {
        throw ConfigError("cluster_moment needs p > 0");
    }
    const double a = model.alpha();
    if (p == a) {
        return Estimate{1.0, 0.0, 0, "closed_form"};
    }
    switch (model.kind()) {
    case ClusterKind::iid:
        return Estimate{1.0, 0.0, 0, "closed_form"};
    case ClusterKind::ar1_analytic: {
        const double r = std::pow(std::abs(model.phi()), a);
        return Estimate{(1.0 - r) / std::pow(1.0 - std::pow(std::abs(model.phi()), p), a / p), 0.0, 0,
                        "closed_form"};
    }
    case ClusterKind::empirical: {
        if (p < a) {
            throw UnsupportedError("Monte Carlo cluster moments need p > alpha");
        }
        RunningStats acc;
        for (const auto& q : model.bank()) {
            acc.add(std::pow(q.pnorm_pow(p), a / p));
        }
        return acc.to_estimate("monte_carlo");
    }
    }
    return {};
}

// --- time-change formula -----------------------------------------------------

TimeChangeReport verify_time_change(const ClusterModel& model, int t,
                                    const std::vector<WindowFunctional>& functionals, std::int64_t reps,
                                    std::uint64_t seed, int h) {
    if (model.kind() == ClusterKind::empirical) {
        throw UnsupportedError("time-change check needs a two-sided analytic tail process");
    }
    if (reps < 2 || h < 0) {
        throw ConfigError("time-change check needs reps >= 2 and h >= 0");
    }
    for (const auto& fn : functionals) {
        if (!std::isfinite(fn.bound) || !fn.f) {
            throw ConfigError("test functional '" + fn.name + "' is not bounded");
        }
    }
    TimeChangeReport report;
    report.t = t;
    report.h = h;
    report.reps = reps;
    if (model.kind() == ClusterKind::iid && t != 0) {
        report.vacuous = true;
        for (const auto& fn : functionals) {
            report.rows.push_back(TimeChangeRow{fn.name, {}, {}, 0.0});
        }
        return report;
    }
    const int horizon = h + std::abs(t);
    const std::size_t nf = functionals.size();
    auto eval = [&](const WindowFunctional& fn, const Eigen::VectorXd& w) {
        const double v = fn.f(w);
        if (!(std::abs(v) <= fn.bound)) {
            throw ConfigError("test functional '" + fn.name + "' exceeded its declared bound");
        }
        return v;
    };

    // Left side: conditional law given Theta_{-t} != 0.
    std::vector<RunningStats> lhs(nf);
    {
        Philox rng(seed, 0);
        Eigen::VectorXd w(2 * h + 1);
        for (std::int64_t r = 0; r < reps; ++r) {
            const TailProcessDraw d = model.draw_tail(rng, horizon);
            if (d.at(-t) == 0.0) {
                continue;
            }
            for (int s = -h; s <= h; ++s) {
                w(s + h) = d.at(s);
            }
            for (std::size_t k = 0; k < nf; ++k) {
                lhs[k].add(eval(functionals[k], w));
            }
        }
    }

    // Right side: |Theta_t|^alpha-weighted law of the window recentred at t.
    std::vector<double> sum_wf(nf, 0.0), sum_wf2(nf, 0.0), sum_wfw(nf, 0.0);
    double sum_w = 0.0, sum_w2 = 0.0;
    {
        Philox rng(seed, 1);
        Eigen::VectorXd w(2 * h + 1);
        for (std::int64_t r = 0; r < reps; ++r) {
            const TailProcessDraw d = model.draw_tail(rng, horizon);
            const double anchor = std::abs(d.at(t));
            const double weight = std::pow(anchor, model.alpha());
            sum_w += weight;
            sum_w2 += weight * weight;
            if (weight == 0.0) {
                continue;
            }
            for (int s = -h; s <= h; ++s) {
                w(s + h) = d.at(t + s) / anchor;
            }
            for (std::size_t k = 0; k < nf; ++k) {
                const double v = weight * eval(functionals[k], w);
                sum_wf[k] += v;
                sum_wf2[k] += v * v;
                sum_wfw[k] += v * weight;
            }
        }
    }

    const double n = static_cast<double>(reps);
    for (std::size_t k = 0; k < nf; ++k) {
        TimeChangeRow row;
        row.functional = functionals[k].name;
        row.conditional = lhs[k].to_estimate("conditional");
        const double ratio = sum_wf[k] / sum_w;
        // Delta-method variance of a ratio of means.
        const double mean_w = sum_w / n;
        const double var_resid = (sum_wf2[k] - 2.0 * ratio * sum_wfw[k] + ratio * ratio * sum_w2) / n;
        const double se = std::sqrt(std::max(0.0, var_resid) / n) / mean_w;
        row.tilted = Estimate{ratio, se, reps, "tilted"};
        const double denom = std::hypot(row.conditional.std_error, row.tilted.std_error);
        row.z = denom > 0.0 ? (row.conditional.estimate - row.tilted.estimate) / denom
                            : (row.conditional.estimate == row.tilted.estimate ? 0.0 : INFINITY);
        report.rows.push_back(std::move(row));
    }
    return report;
}

// --- anti-clustering summability -----------------------------------------------

Eigen::VectorXd tail_summability_profile(const ClusterModel& model, int k_max, std::int64_t reps,
                                         std::uint64_t seed) {
    if (k_max < 0) {
        throw ConfigError("k_max must be >= 0");
    }
    Eigen::VectorXd terms = Eigen::VectorXd::Zero(k_max + 1);
    if (reps <= 0 && model.kind() != ClusterKind::empirical) {
        for (int j = 0; j <= k_max; ++j) {
            terms(j) = model.kind() == ClusterKind::iid ? (j == 0 ? 1.0 : 0.0)
                                                        : std::min(1.0, std::pow(std::abs(model.phi()), j));
        }
    } else {
        Philox rng(seed, 0);
        const std::int64_t n = reps > 0 ? reps : 10'000;
        for (std::int64_t r = 0; r < n; ++r) {
            const TailProcessDraw d = model.draw_tail(rng, k_max);
            for (int j = 0; j <= k_max; ++j) {
                terms(j) += std::min(1.0, std::abs(d.at(j)));
            }
        }
        terms /= static_cast<double>(n);
    }
    Eigen::VectorXd partial(k_max + 1);
    double acc = 0.0;
    for (int j = 0; j <= k_max; ++j) {
        acc += terms(j);
        partial(j) = acc;
    }
    return partial;
}

int tail_summability_cutoff(const ClusterModel& model, double tol) {
    switch (model.kind()) {
    case ClusterKind::iid:
        return 0;
    case ClusterKind::ar1_analytic:
        return static_cast<int>(std::ceil(std::log(tol) / std::log(std::abs(model.phi()))));
    case ClusterKind::empirical: {
        const int k_max = model.options().half_width;
        const Eigen::VectorXd p = tail_summability_profile(model, k_max);
        int cutoff = 0;
        for (int j = 1; j <= k_max; ++j) {
            if (p(j) - p(j - 1) >= tol) {
                cutoff = j;
            }
        }
        return cutoff;
    }
    }
    return 0;
}

Estimate blocks_extremal_index(const Eigen::Ref<const Eigen::VectorXd>& path, double threshold,
                               Eigen::Index block_length) {
    if (block_length < 1) {
        throw ConfigError("block_length must be >= 1");
    }
    std::int64_t exceedances = 0;
    std::int64_t blocks = 0;
    for (Eigen::Index start = 0; start + block_length <= path.size(); start += block_length) {
        std::int64_t in_block = 0;
        for (Eigen::Index i = start; i < start + block_length; ++i) {
            in_block += std::abs(path(i)) > threshold ? 1 : 0;
        }
        exceedances += in_block;
        blocks += in_block > 0 ? 1 : 0;
    }
    if (exceedances == 0) {
        throw SamplingError("no exceedances of the threshold in the path");
    }
    const double theta = static_cast<double>(blocks) / static_cast<double>(exceedances);
    return Estimate{theta, theta / std::sqrt(static_cast<double>(blocks)), exceedances, "blocks"};
}

} // namespace heavysum

#include "heavysum/process_models.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "heavysum/errors.hpp"

namespace heavysum {

namespace {

constexpr double kPi = 3.14159265358979323846;

bool valid_alpha(double alpha) {
    return alpha > 0.0 && alpha < 2.0 && alpha != 1.0 && std::isfinite(alpha);
}

// Monte Carlo mean and standard error of |A|^q.
std::pair<double, double> abs_a_moment(const SreLaw& law, double q, int draws, std::uint64_t seed) {
    Philox rng(seed, 0);
    double mean = 0.0;
    double m2 = 0.0;
    for (int i = 0; i < draws; ++i) {
        const double v = std::pow(std::abs(law.draw_a(rng)), q);
        const double delta = v - mean;
        mean += delta / (i + 1);
        m2 += delta * (v - mean);
    }
    return {mean, std::sqrt(m2 / (draws - 1) / draws)};
}

} // namespace

NoiseSpec NoiseSpec::pareto(double alpha, double q_plus) {
    NoiseSpec s;
    s.kind = NoiseKind::pareto;
    s.alpha = alpha;
    s.q_plus = q_plus;
    s.q_minus = 1.0 - q_plus;
    s.validate();
    return s;
}

NoiseSpec NoiseSpec::symmetric_stable(double alpha) {
    NoiseSpec s;
    s.kind = NoiseKind::symmetric_stable;
    s.alpha = alpha;
    s.q_plus = 0.5;
    s.q_minus = 0.5;
    s.validate();
    return s;
}

void NoiseSpec::validate() const {
    if (!valid_alpha(alpha)) {
        std::ostringstream os;
        os << "noise alpha must lie in (0,1) or (1,2), got " << alpha;
        throw ConfigError(os.str());
    }
    if (q_plus < 0.0 || q_minus < 0.0 || std::abs(q_plus + q_minus - 1.0) > 1e-12) {
        throw ConfigError("tail balance requires q_plus, q_minus >= 0 with q_plus + q_minus = 1");
    }
    if (kind == NoiseKind::symmetric_stable && std::abs(q_plus - 0.5) > 1e-12) {
        throw ConfigError("symmetric stable noise has q_plus = q_minus = 1/2");
    }
}

double NoiseSpec::tail_constant() const {
    if (kind == NoiseKind::pareto) {
        return 1.0;
    }
    return (1.0 - alpha) / (std::tgamma(2.0 - alpha) * std::cos(kPi * alpha / 2.0));
}

double NoiseSpec::mean() const {
    if (alpha <= 1.0) {
        throw UnsupportedError("the noise mean is infinite for alpha < 1");
    }
    if (kind == NoiseKind::symmetric_stable) {
        return 0.0;
    }
    return (q_plus - q_minus) * alpha / (alpha - 1.0);
}

Eigen::VectorXd sample_noise(const NoiseSpec& spec, Eigen::Index count, std::uint64_t seed) {
    spec.validate();
    if (count < 1) {
        throw ConfigError("sample_noise needs count >= 1");
    }
    Philox rng = make_stream(seed, 0);
    Eigen::VectorXd z(count);
    for (Eigen::Index i = 0; i < count; ++i) {
        z(i) = draw_noise(spec, rng);
    }
    return z;
}

double SreLaw::mean_a() const {
    if (a_kind == AKind::constant) {
        return a_value;
    }
    return (1.0 - 2.0 * a_negative_prob) * std::exp(a_mu + 0.5 * a_sigma * a_sigma);
}

double SreLaw::mean_b() const {
    if (b_kind == BKind::normal) {
        return b_location;
    }
    return b_location + b_scale * b_noise.mean();
}

ProcessModel ProcessModel::iid(const NoiseSpec& noise) {
    ProcessModel m;
    m.kind = ProcessKind::iid;
    m.noise = noise;
    m.alpha = noise.alpha;
    m.burn_in = 0;
    m.validate();
    return m;
}

ProcessModel ProcessModel::ar1(const NoiseSpec& noise, double phi, int burn_in) {
    ProcessModel m;
    m.kind = ProcessKind::ar1;
    m.noise = noise;
    m.phi = phi;
    m.alpha = noise.alpha;
    m.burn_in = burn_in;
    m.validate();
    return m;
}

ProcessModel ProcessModel::sre_model(const SreLaw& law, double alpha, int burn_in) {
    ProcessModel m;
    m.kind = ProcessKind::sre;
    m.sre = law;
    m.alpha = law.a_kind == SreLaw::AKind::constant && law.b_kind == SreLaw::BKind::noise
                  ? law.b_noise.alpha
                  : alpha;
    m.burn_in = burn_in;
    m.validate();
    if (law.a_kind == SreLaw::AKind::lognormal) {
        // Kesten moment condition; tolerance is 1e-3 or 4 standard errors,
        // whichever is larger.
        auto [moment, se] = abs_a_moment(law, m.alpha, 1'000'000, 0x4b657374656eULL);
        if (std::abs(moment - 1.0) > std::max(1e-3, 4.0 * se)) {
            std::ostringstream os;
            os << "Kesten condition E|A|^alpha = 1 fails: estimated " << moment << " (se " << se
               << ") at alpha = " << m.alpha;
            throw ModelError(os.str());
        }
    }
    return m;
}

void ProcessModel::validate() const {
    if (burn_in < 0) {
        throw ConfigError("burn_in must be >= 0");
    }
    switch (kind) {
    case ProcessKind::iid:
        noise.validate();
        break;
    case ProcessKind::ar1:
        noise.validate();
        if (!(std::abs(phi) < 1.0) || phi == 0.0) {
            throw ConfigError("AR(1) coefficient must satisfy 0 < |phi| < 1");
        }
        break;
    case ProcessKind::sre:
        if (!valid_alpha(alpha)) {
            throw ConfigError("SRE tail index must lie in (0,1) or (1,2)");
        }
        if (sre.a_kind == SreLaw::AKind::lognormal && !(sre.a_sigma > 0.0)) {
            throw ConfigError("lognormal A needs sigma > 0");
        }
        if (sre.a_negative_prob < 0.0 || sre.a_negative_prob > 1.0) {
            throw ConfigError("a_negative_prob must lie in [0,1]");
        }
        if (sre.b_kind == SreLaw::BKind::noise) {
            sre.b_noise.validate();
        }
        break;
    }
}

std::string ProcessModel::name() const {
    std::ostringstream os;
    switch (kind) {
    case ProcessKind::iid:
        os << "iid";
        break;
    case ProcessKind::ar1:
        os << "ar1(phi=" << phi << ")";
        break;
    case ProcessKind::sre:
        os << "sre";
        break;
    }
    os << "[alpha=" << alpha << "]";
    return os.str();
}

void check_contractive(const ProcessModel& model) {
    if (model.kind != ProcessKind::sre) {
        return;
    }
    const SreLaw& law = model.sre;
    if (law.a_kind == SreLaw::AKind::constant) {
        if (!(std::abs(law.a_value) < 1.0)) {
            throw ModelError("SRE with constant |A| >= 1 is not contractive");
        }
        return;
    }
    for (double frac : {0.25, 0.5, 0.75}) {
        auto [moment, se] = abs_a_moment(law, frac * model.alpha, 100'000, 0x636f6e74ULL);
        (void)se;
        if (moment < 1.0) {
            return;
        }
    }
    throw ModelError("SRE law is not contractive: E|A|^q >= 1 at all probed q < alpha");
}

Path sample_path(const ProcessModel& model, Eigen::Index n, std::uint64_t seed, std::uint64_t stream) {
    if (n < 1) {
        throw ConfigError("sample_path needs n >= 1");
    }
    model.validate();
    check_contractive(model);
    Philox rng = make_stream(seed, stream);
    return Path{simulate(model, n, rng), model, seed, stream};
}

CoupledPaths sample_coupled_paths(const ProcessModel& model, Eigen::Index n, std::uint64_t seed,
                                  std::uint64_t stream) {
    if (!model.is_markov()) {
        throw UnsupportedError("coupling is trivial for an iid model");
    }
    if (n < 1) {
        throw ConfigError("sample_coupled_paths needs n >= 1");
    }
    model.validate();
    check_contractive(model);
    Philox rng = make_stream(seed, stream);
    auto [x, y] = simulate_coupled(model, n, rng);
    return CoupledPaths{Path{std::move(x), model, seed, stream}, Path{std::move(y), model, seed, stream}};
}

double normalizing_an(const ProcessModel& model, double n, Eigen::Index presample, std::uint64_t seed) {
    if (n < 1) {
        throw ConfigError("normalizing_an needs n >= 1");
    }
    model.validate();
    switch (model.kind) {
    case ProcessKind::iid:
        return std::pow(model.noise.tail_constant() * n, 1.0 / model.alpha);
    case ProcessKind::ar1: {
        const double c = model.noise.tail_constant() / (1.0 - std::pow(std::abs(model.phi), model.alpha));
        return std::pow(c * n, 1.0 / model.alpha);
    }
    case ProcessKind::sre: {
        if (static_cast<double>(presample) < 10.0 * n) {
            throw ConfigError("SRE a_n needs a pre-sample of at least 10 n points");
        }
        Path p = sample_path(model, presample, seed, 0);
        std::vector<double> a(p.values.size());
        for (Eigen::Index i = 0; i < p.values.size(); ++i) {
            a[i] = std::abs(p.values(i));
        }
        const auto k = static_cast<std::size_t>(
            std::ceil(static_cast<double>(a.size()) * (1.0 - 1.0 / n))) - 1;
        std::nth_element(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(k), a.end());
        return a[k];
    }
    }
    return 0.0;
}

double stationary_mean(const ProcessModel& model) {
    model.validate();
    if (model.alpha < 1.0) {
        throw UnsupportedError("no centering is needed for alpha < 1");
    }
    switch (model.kind) {
    case ProcessKind::iid:
        return model.noise.mean();
    case ProcessKind::ar1:
        return model.noise.mean() / (1.0 - model.phi);
    case ProcessKind::sre:
        return model.sre.mean_b() / (1.0 - model.sre.mean_a());
    }
    return 0.0;
}

} // namespace heavysum

#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "heavysum/cluster_models.hpp"
#include "heavysum/process_models.hpp"
#include "heavysum/statistics.hpp"

namespace heavysum {

/// Declarative process description; unused fields are ignored for a kind.
struct ModelConfig {
    std::string kind = "iid";      // iid | ar1 | sre
    std::string noise = "pareto";  // pareto | stable
    double alpha = 0.5;
    double q_plus = 1.0;
    double phi = 0.5;
    int burn_in = -1;  // -1: the model's default
    // sre
    std::string a_kind = "lognormal";  // lognormal | constant
    double a_mu = -0.1875;
    double a_sigma = 0.5;
    double a_negative_prob = 0.0;
    double a_value = 0.0;
    std::string b_kind = "normal";  // normal | noise
    double b_location = 0.0;
    double b_scale = 1.0;
};

struct ExperimentConfig {
    std::string name = "experiment";
    std::string kind = "verify";  // simulate | limit | transform | verify | diagnose
    ModelConfig model;
    std::string cluster = "auto";  // auto | iid | ar1 | empirical
    std::vector<double> p_list{2.0};
    std::string centering = "none";  // none | analytic | empirical
    std::vector<std::string> checks;  // verify: which oracles to run
    std::int64_t n = 10'000;
    std::int64_t reps = 1'000;
    int n_terms = 10'000;
    std::int64_t limit_samples = 10'000;
    std::uint64_t seed = 12345;
    int workers = 1;
    // transforms
    std::string transform = "cf";  // cf | laplace | hybrid | joint
    std::vector<double> u_grid{0.5, 1.0, 2.0};
    std::vector<double> x_grid;
    std::vector<double> lambda_grid{0.5, 1.0, 2.0};
    double quad_tol = 1e-10;
    std::int64_t cluster_mc = 10'000;
    // pass criteria
    double z_bound = 3.0;
    double transform_tol = 0.05;
    double ks_level = 0.01;
    double ks_slack = 1.5;
    double ks_bound = 0.0;  // > 0 overrides the level-based bound
    // diagnostics
    double q = 0.4;
    int t_max = 20;
    int r_n = 0;  // 0: floor(n^0.4)
    std::vector<int> k_grid;
    double x_trunc = 1.0;
    double slope_tol = 0.10;
    // output
    std::string out_dir = "out";
    std::int64_t write_paths = 1;

    static ExperimentConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;

    /// Every violated field, one message each; empty when valid.
    std::vector<std::string> validation_errors() const;
    /// Throws ConfigError listing every violation.
    void validate() const;

    /// FNV-1a over the canonical JSON, excluding execution knobs (workers, out_dir).
    std::uint64_t hash() const;
};

ExperimentConfig load_config(const std::string& file);

ProcessModel build_model(const ModelConfig& m);
/// auto: iid for iid processes, ar1 for AR(1), empirical otherwise.
ClusterModel build_cluster(const ExperimentConfig& cfg, const ProcessModel& model);

struct ReportRow {
    std::string name;
    std::string type = "mc";  // mc | quadrature | ks | info
    double analytic = 0.0;
    double mc = 0.0;
    double std_error = 0.0;
    double z = 0.0;
    double diff = 0.0;
    double tol = 0.0;
    bool pass = true;
};

struct Report {
    std::string name;
    std::vector<ReportRow> rows;
    nlohmann::json metadata = nlohmann::json::object();
    std::vector<std::string> artifacts;

    bool all_pass() const;
    nlohmann::json to_json() const;

    /// |z| <= bound with z = (mc - analytic) / combined stderr (floored at 1e-12 relative).
    ReportRow& add_mc(std::string name, double analytic, double mc, double std_error, double bound);
    /// |mc - analytic| <= tol.
    ReportRow& add_tol(std::string name, std::string type, double analytic, double mc, double tol);
    ReportRow& add_info(std::string name, double value);
};

// --- replica batches -------------------------------------------------------------

struct BatchOptions {
    std::int64_t n = 10'000;
    std::int64_t reps = 1'000;
    std::uint64_t seed = 12345;
    int workers = 1;
    std::vector<double> ps{2.0};
    Centering centering = Centering::none;
    bool greenwood = false;  // needs strictly positive paths
    bool kurtosis = false;
};

/// Per-replica statistics of `reps` paths (replica i uses stream i).
struct PathBatch {
    Eigen::VectorXd sum;
    Eigen::VectorXd max_abs;
    std::map<double, Eigen::VectorXd> modulus;    // gamma_{n,p}
    std::map<double, Eigen::VectorXd> greenwood;  // T_{n,p}
    Eigen::VectorXd kurtosis;
    std::int64_t n = 0;

    Eigen::VectorXd ratio_max() const;
    Eigen::VectorXd studentized(double p) const;
};

PathBatch simulate_batch(const ProcessModel& model, const BatchOptions& opt);

/// Mean and standard error of a sample.
Estimate sample_mean(const Eigen::Ref<const Eigen::VectorXd>& v, std::string method = "monte_carlo");

/// KS comparison between a statistic sample and limit-law draws.
/// bound <= 0 selects ks_slack * ks_critical_value(level).
Report compare_to_limit(const Eigen::Ref<const Eigen::VectorXd>& statistic,
                        const Eigen::Ref<const Eigen::VectorXd>& limit, const std::string& name,
                        double bound = 0.0, double level = 0.01, double slack = 1.5);

/// Run one experiment; artifacts go to <out_dir>/<name>/ unless out_dir is empty.
Report run_experiment(const ExperimentConfig& cfg);

/// Write report.json to <dir>/report.json.
void write_report(const Report& report, const std::string& dir);

} // namespace heavysum

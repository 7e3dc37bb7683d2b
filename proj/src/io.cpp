#include "heavysum/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "heavysum/errors.hpp"

namespace heavysum {

namespace {

std::ofstream open_out(const std::string& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) {
        throw ConfigError("cannot open '" + file + "' for writing");
    }
    return out;
}

nlohmann::json number(double v) {
    // JSON has no inf/nan; keep them as strings so round-trips stay lossless.
    if (std::isfinite(v)) {
        return v;
    }
    return format_double(v);
}

} // namespace

std::string format_double(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_path_csv(const std::string& file, const Eigen::Ref<const Eigen::VectorXd>& values) {
    auto out = open_out(file);
    out << "value\n";
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        out << format_double(values(i)) << '\n';
    }
}

void write_cluster_csv(const std::string& file, const ClusterDraw& q) {
    auto out = open_out(file);
    out << "t,value\n";
    for (Eigen::Index i = 0; i < q.values.size(); ++i) {
        out << q.t_min + static_cast<int>(i) << ',' << format_double(q.values(i)) << '\n';
    }
}

void write_stats_csv(const std::string& file, const std::vector<StatRow>& rows) {
    auto out = open_out(file);
    out << "seed,n,statistic,p,value\n";
    for (const auto& r : rows) {
        out << r.seed << ',' << r.n << ',' << r.statistic << ',' << format_double(r.p) << ','
            << format_double(r.value) << '\n';
    }
}

void write_transform_csv(const std::string& file, const TransformGrid& grid) {
    auto out = open_out(file);
    out << "u,x,lambda,re,im,stderr,method\n";
    for (const auto& pt : grid.points) {
        out << format_double(pt.u) << ',' << format_double(pt.x) << ',' << format_double(pt.lambda) << ','
            << format_double(pt.value.real()) << ',' << format_double(pt.value.imag()) << ','
            << format_double(pt.std_error) << ',' << pt.method << '\n';
    }
}

void write_decay_csv(const std::string& file, const DecaySeries& series) {
    auto out = open_out(file);
    out << "index,value,stderr\n";
    for (std::size_t i = 0; i < series.index.size(); ++i) {
        const auto j = static_cast<Eigen::Index>(i);
        out << series.index[i] << ',' << format_double(series.values(j)) << ','
            << format_double(series.std_errors(j)) << '\n';
    }
}

nlohmann::json to_json(const Estimate& e) {
    return {{"estimate", number(e.estimate)}, {"stderr", number(e.std_error)}, {"reps", e.reps},
            {"method", e.method}};
}

nlohmann::json to_json(const MomentReport& r) {
    nlohmann::json comps = nlohmann::json::object();
    for (const auto& [k, v] : r.components) {
        comps[k] = number(v);
    }
    return {{"name", r.name},
            {"analytic", number(r.analytic_value)},
            {"analytic_stderr", number(r.analytic_std_error)},
            {"components", comps},
            {"mc", number(r.mc_value)},
            {"stderr", number(r.std_error)},
            {"reps", r.reps},
            {"z", number(r.z_score)}};
}

nlohmann::json to_json(const DecaySeries& s) {
    return {{"points", s.index.size()},
            {"fitted_log_slope", number(s.fitted_log_slope)},
            {"fitted_intercept", number(s.fitted_intercept)},
            {"r2", number(s.r2)},
            {"fitted_points", s.fitted_points}};
}

nlohmann::json to_json(const TransformGrid& g) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& pt : g.points) {
        arr.push_back({{"u", number(pt.u)},
                       {"x", number(pt.x)},
                       {"lambda", number(pt.lambda)},
                       {"re", number(pt.value.real())},
                       {"im", number(pt.value.imag())},
                       {"stderr", number(pt.std_error)},
                       {"method", pt.method}});
    }
    return arr;
}

} // namespace heavysum

#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "heavysum/cluster_models.hpp"
#include "heavysum/diagnostics.hpp"
#include "heavysum/estimate.hpp"
#include "heavysum/limit_laws.hpp"
#include "heavysum/oracles.hpp"

namespace heavysum {

/// Shortest round-trip text for a double ("%.17g"); "inf"/"-inf"/"nan" otherwise.
std::string format_double(double v);

struct StatRow {
    std::uint64_t seed = 0;
    std::int64_t n = 0;
    std::string statistic;
    double p = 0.0;
    double value = 0.0;
};

// CSV writers; every file starts with a header row.
void write_path_csv(const std::string& file, const Eigen::Ref<const Eigen::VectorXd>& values);
void write_cluster_csv(const std::string& file, const ClusterDraw& q);
void write_stats_csv(const std::string& file, const std::vector<StatRow>& rows);
void write_transform_csv(const std::string& file, const TransformGrid& grid);
void write_decay_csv(const std::string& file, const DecaySeries& series);

nlohmann::json to_json(const Estimate& e);
nlohmann::json to_json(const MomentReport& r);
nlohmann::json to_json(const DecaySeries& s);
nlohmann::json to_json(const TransformGrid& g);

} // namespace heavysum

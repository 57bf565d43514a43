#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "conic/market.hpp"

namespace conic {

// Instance documents carry "schema": 1, the tree (T, d, N, nodes), per-node
// cones (bid-ask matrices or generator lists, per node or shared by time)
// and the return spec. Unknown fields are rejected.
MarketSpec parse_market(const nlohmann::json& doc);
MarketSpec load_market(const std::string& path);

// Serializes a market built from bid-ask or generator cones; oracle returns
// and perturbed markets are not serializable.
nlohmann::json market_to_json(const MarketSpec& market);

// Canonical text form: sorted keys, two-space indent, trailing newline.
std::string dump_instance(const nlohmann::json& doc);

}  // namespace conic

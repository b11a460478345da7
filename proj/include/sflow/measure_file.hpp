#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "json.hpp"
#include "sflow/dyadic_measure.hpp"

namespace sflow {

constexpr int kMeasureFileVersion = 1;

std::uint64_t fnv1a64(std::string_view bytes);
// FNV-1a of the compact dump of `doc` without its "checksum" member, as 0x-prefixed hex.
std::string measure_checksum(const nlohmann::json& doc);

nlohmann::json rule_to_json(const CascadeRule& rule, const CellContext& root);
CascadeRule rule_from_json(const nlohmann::json& j, int d, CellContext& root);

nlohmann::json measure_to_json(const DyadicMeasure& mu);
DyadicMeasure measure_from_json(const nlohmann::json& doc);

std::string persist_string(const DyadicMeasure& mu);
DyadicMeasure restore_string(const std::string& text);
void persist(const DyadicMeasure& mu, const std::string& path);
DyadicMeasure restore(const std::string& path);

}  // namespace sflow

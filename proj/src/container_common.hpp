#pragma once

// Internal helpers for the JSON code containers: index sets are stored as
// positive deltas (first entry absolute) since bins are strictly increasing.

#include <cstdint>
#include <stdexcept>
#include <vector>

#include <json.hpp>

namespace idbc::detail {

inline nlohmann::json index_sets_to_json(
    const std::vector<std::vector<std::uint32_t>>& sets) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& bin : sets) {
        nlohmann::json deltas = nlohmann::json::array();
        std::uint32_t prev = 0;
        for (std::size_t i = 0; i < bin.size(); ++i) {
            deltas.push_back(i == 0 ? bin[i] : bin[i] - prev);
            prev = bin[i];
        }
        arr.push_back(std::move(deltas));
    }
    return arr;
}

inline std::vector<std::vector<std::uint32_t>> index_sets_from_json(
    const nlohmann::json& arr, std::int64_t pool_size) {
    std::vector<std::vector<std::uint32_t>> sets;
    for (const auto& deltas : arr) {
        std::vector<std::uint32_t> bin;
        std::uint64_t acc = 0;
        for (std::size_t i = 0; i < deltas.size(); ++i) {
            const std::uint64_t d = deltas[i].get<std::uint64_t>();
            if (i > 0 && d == 0)
                throw std::runtime_error("code container: index deltas must be positive");
            acc = i == 0 ? d : acc + d;
            if (acc >= static_cast<std::uint64_t>(pool_size))
                throw std::runtime_error("code container: index beyond the pool");
            bin.push_back(static_cast<std::uint32_t>(acc));
        }
        sets.push_back(std::move(bin));
    }
    return sets;
}

}  // namespace idbc::detail

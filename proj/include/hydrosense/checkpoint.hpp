/**
 * @file checkpoint.hpp
 * @brief Versioned text container for a trained model.
 *
 * Layout (one record per line, space separated, see docs/formats.md):
 *
 *   hydrosense-checkpoint 1
 *   shape <hidden> <n_static> <n_dynamic> <lookback>
 *   static <k> <name> <group>               (n_static lines)
 *   dynamic <k> <name>                      (n_dynamic lines)
 *   stats static <k> <mean> <std>
 *   stats dynamic <k> <mean> <std>
 *   stats discharge <mean> <std>
 *   tensor <name> <count> <v0> <v1> ...     (Params::for_each order)
 *   end
 *
 * Numbers use the shortest decimal that round-trips, so save -> load is
 * bit-exact.
 */

#pragma once

#include "hydrosense/dataio.hpp"
#include "hydrosense/ealstm.hpp"

#include <filesystem>

namespace hydrosense {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
    ealstm::Params params;
    std::size_t lookback = 0;
    FeatureCatalog catalog;
    Standardizer standardizer;

    bool operator==(const Checkpoint&) const = default;
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(std::string_view text, const std::string& origin = "<checkpoint>");

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace hydrosense

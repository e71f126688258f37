/**
 * @file dataio.hpp
 * @brief Basin records, CSV ingestion, the static-feature catalog and
 *        standardization statistics.
 *
 * On-disk dataset layout (see docs/formats.md):
 *
 *   <dir>/catalog.csv            name,group
 *   <dir>/attributes.csv         basin_id,<feature>,...
 *   <dir>/forcing/<id>.csv       date,<dynamic feature>,...
 *   <dir>/discharge/<id>.csv     date,discharge
 *
 * Loading is all-or-nothing: a returned BasinRecord satisfies every
 * invariant, otherwise a LoadError names the file, line and cause.
 */

#pragma once

#include "hydrosense/numcore.hpp"
#include "hydrosense/textio.hpp"

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hydrosense {

using Date = std::chrono::sys_days;

/// Strict YYYY-MM-DD parser. Returns nullopt on anything else.
std::optional<Date> parse_date(std::string_view s);
std::string format_date(Date d);

/// Inclusive calendar-day range.
struct DateRange {
    Date first;
    Date last;

    bool contains(Date d) const { return first <= d && d <= last; }
    long days() const { return (last - first).count() + 1; }
};

enum class FeatureGroup { climate, soil, topography, vegetation };

std::string_view group_name(FeatureGroup g);
std::optional<FeatureGroup> parse_group(std::string_view s);

struct Feature {
    std::string name;
    FeatureGroup group;

    bool operator==(const Feature&) const = default;
};

/// Ordered static features. Entry k is x_s[k] everywhere in the code base.
class FeatureCatalog {
public:
    FeatureCatalog() = default;
    explicit FeatureCatalog(std::vector<Feature> entries);

    std::size_t size() const { return entries_.size(); }
    const Feature& operator[](std::size_t k) const { return entries_[k]; }
    const std::vector<Feature>& entries() const { return entries_; }
    std::optional<std::size_t> index_of(std::string_view name) const;
    std::vector<std::string> names() const;

    bool operator==(const FeatureCatalog&) const = default;

private:
    std::vector<Feature> entries_;
};

FeatureCatalog load_catalog(const std::filesystem::path& path);
void write_catalog(const std::filesystem::path& path, const FeatureCatalog& catalog);

struct BasinRecord {
    std::string id;
    Vector x_s;                              ///< ordered per catalog
    std::vector<std::string> forcing_names;  ///< dynamic feature names
    Matrix forcing;                          ///< N_days x n_d
    Vector discharge;                        ///< mm/day
    Date start;                              ///< date of row 0; rows are consecutive days
    bool standardized = false;

    std::size_t days() const { return discharge.size(); }
    Date date(std::size_t row) const { return start + std::chrono::days(static_cast<long>(row)); }
    Date end() const { return date(days() - 1); }
    /// Row index of d, or nullopt when d lies outside the record.
    std::optional<std::size_t> row_of(Date d) const;
    DateRange range() const { return {start, end()}; }
};

BasinRecord load_basin(const std::filesystem::path& forcing_path,
                       const std::filesystem::path& discharge_path,
                       const std::filesystem::path& attributes_path,
                       const FeatureCatalog& catalog, const std::string& id);

/// Basin ids listed in an attributes table, in file order.
std::vector<std::string> list_basins(const std::filesystem::path& attributes_path);

/// Loads every basin of a dataset directory laid out as documented above.
std::vector<BasinRecord> load_dataset(const std::filesystem::path& dir,
                                      const FeatureCatalog& catalog);

/// Writes catalog, attributes table, forcing and discharge files (raw units).
/// Returns every written path in write order.
std::vector<std::filesystem::path> write_dataset(const std::filesystem::path& dir,
                                                 std::span<const BasinRecord> basins,
                                                 const FeatureCatalog& catalog);

/// Throws LoadError unless the record holds at least lookback + 365 days.
void require_history(const BasinRecord& basin, std::size_t lookback);

// ---------------------------------------------------------------------------
// Standardization
// ---------------------------------------------------------------------------

struct ColumnStats {
    double mean = 0.0;
    double std = 1.0;

    bool operator==(const ColumnStats&) const = default;
};

/**
 * Column statistics from the training pool. Dynamic and discharge stats
 * pool every training day of every basin; static stats are taken across
 * basins. Discharge uses one pooled mean/std for all basins.
 */
struct Standardizer {
    std::vector<std::string> dynamic_names;
    std::vector<ColumnStats> dynamic;
    std::vector<std::string> static_names;
    std::vector<ColumnStats> statics;
    ColumnStats discharge;

    double to_discharge(double standardized) const {
        return standardized * discharge.std + discharge.mean;
    }

    bool operator==(const Standardizer&) const = default;
};

/// Throws ContractViolation naming the first zero-variance column.
Standardizer fit_standardizer(std::span<const BasinRecord> train_basins,
                              const FeatureCatalog& catalog,
                              std::optional<DateRange> train_range = std::nullopt);

BasinRecord apply(const Standardizer& s, const BasinRecord& basin);
BasinRecord invert(const Standardizer& s, const BasinRecord& basin);

}  // namespace hydrosense

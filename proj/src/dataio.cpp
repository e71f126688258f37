#include "hydrosense/dataio.hpp"

#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

namespace hydrosense {

namespace fs = std::filesystem;
using namespace std::chrono;

std::optional<Date> parse_date(std::string_view s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    auto num = [&](std::size_t pos, std::size_t len) -> std::optional<int> {
        int v = 0;
        const auto* b = s.data() + pos;
        const auto res = std::from_chars(b, b + len, v);
        if (res.ec != std::errc() || res.ptr != b + len) return std::nullopt;
        return v;
    };
    const auto y = num(0, 4), m = num(5, 2), d = num(8, 2);
    if (!y || !m || !d) return std::nullopt;
    const year_month_day ymd{year{*y}, month{static_cast<unsigned>(*m)},
                             day{static_cast<unsigned>(*d)}};
    if (!ymd.ok()) return std::nullopt;
    return sys_days{ymd};
}

std::string format_date(Date d) {
    const year_month_day ymd{d};
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

std::string_view group_name(FeatureGroup g) {
    switch (g) {
        case FeatureGroup::climate: return "climate";
        case FeatureGroup::soil: return "soil";
        case FeatureGroup::topography: return "topography";
        case FeatureGroup::vegetation: return "vegetation";
    }
    return "unknown";
}

std::optional<FeatureGroup> parse_group(std::string_view s) {
    if (s == "climate") return FeatureGroup::climate;
    if (s == "soil") return FeatureGroup::soil;
    if (s == "topography") return FeatureGroup::topography;
    if (s == "vegetation") return FeatureGroup::vegetation;
    return std::nullopt;
}

FeatureCatalog::FeatureCatalog(std::vector<Feature> entries) : entries_(std::move(entries)) {
    std::set<std::string> seen;
    for (const auto& e : entries_) {
        if (e.name.empty()) throw ContractViolation("catalog: empty feature name");
        // Names travel through CSV headers and the space-delimited checkpoint.
        if (e.name.find_first_of(" \t,\"\r\n") != std::string::npos)
            throw ContractViolation("catalog: feature name '" + e.name + "' contains a separator");
        if (!seen.insert(e.name).second)
            throw ContractViolation("catalog: duplicate feature name '" + e.name + "'");
    }
}

std::optional<std::size_t> FeatureCatalog::index_of(std::string_view name) const {
    for (std::size_t k = 0; k < entries_.size(); ++k)
        if (entries_[k].name == name) return k;
    return std::nullopt;
}

std::vector<std::string> FeatureCatalog::names() const {
    std::vector<std::string> out;
    for (const auto& e : entries_) out.push_back(e.name);
    return out;
}

FeatureCatalog load_catalog(const fs::path& path) {
    const CsvTable t = read_csv(path);
    if (t.header != std::vector<std::string>{"name", "group"})
        throw LoadError(path.string() + ":1: catalog header must be 'name,group'");
    std::vector<Feature> entries;
    std::set<std::string> seen;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& name = t.rows[r][0];
        const auto group = parse_group(t.rows[r][1]);
        if (name.empty()) throw LoadError(t.where(r) + ": empty feature name");
        if (!group)
            throw LoadError(t.where(r) + ": unknown group '" + t.rows[r][1] +
                            "' (expected climate|soil|topography|vegetation)");
        if (!seen.insert(name).second)
            throw LoadError(t.where(r) + ": duplicate feature '" + name + "'");
        entries.push_back({name, *group});
    }
    if (entries.empty()) throw LoadError(path.string() + ": catalog has no features");
    return FeatureCatalog(std::move(entries));
}

void write_catalog(const fs::path& path, const FeatureCatalog& catalog) {
    std::string out = "name,group\n";
    for (const auto& e : catalog.entries())
        out += e.name + "," + std::string(group_name(e.group)) + "\n";
    write_file_atomic(path, out);
}

std::optional<std::size_t> BasinRecord::row_of(Date d) const {
    if (days() == 0 || d < start || d > end()) return std::nullopt;
    return static_cast<std::size_t>((d - start).count());
}

namespace {

struct DatedColumns {
    Date start;
    std::vector<std::string> names;
    std::vector<std::vector<double>> rows;
    std::vector<std::string> where;
};

/// Reads date + numeric columns and checks that dates are consecutive days.
DatedColumns read_dated(const fs::path& path) {
    const CsvTable t = read_csv(path);
    if (t.header.empty() || t.header[0] != "date")
        throw LoadError(path.string() + ":1: first column must be 'date'");
    if (t.header.size() < 2) throw LoadError(path.string() + ":1: no value columns");
    if (t.rows.empty()) throw LoadError(path.string() + ": no data rows");
    DatedColumns out;
    out.names.assign(t.header.begin() + 1, t.header.end());
    Date expected{};
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        const auto d = parse_date(row[0]);
        if (!d) throw LoadError(t.where(r) + ": invalid date '" + row[0] + "'");
        if (r == 0) {
            out.start = *d;
        } else if (*d != expected) {
            if (*d > expected)
                throw LoadError(t.where(r) + ": date gap, missing " + format_date(expected));
            throw LoadError(t.where(r) + ": dates out of order at " + row[0]);
        }
        expected = *d + days(1);
        std::vector<double> vals;
        vals.reserve(row.size() - 1);
        for (std::size_t c = 1; c < row.size(); ++c) {
            const auto v = parse_double(row[c]);
            if (!v)
                throw LoadError(t.where(r) + ": missing or invalid value for '" + t.header[c] +
                                "': '" + row[c] + "'");
            vals.push_back(*v);
        }
        out.rows.push_back(std::move(vals));
        out.where.push_back(t.where(r));
    }
    return out;
}

}  // namespace

std::vector<std::string> list_basins(const fs::path& attributes_path) {
    const CsvTable t = read_csv(attributes_path);
    if (t.header.empty() || t.header[0] != "basin_id")
        throw LoadError(attributes_path.string() + ":1: first column must be 'basin_id'");
    std::vector<std::string> ids;
    std::set<std::string> seen;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        if (!seen.insert(t.rows[r][0]).second)
            throw LoadError(t.where(r) + ": duplicate basin '" + t.rows[r][0] + "'");
        ids.push_back(t.rows[r][0]);
    }
    return ids;
}

BasinRecord load_basin(const fs::path& forcing_path, const fs::path& discharge_path,
                       const fs::path& attributes_path, const FeatureCatalog& catalog,
                       const std::string& id) {
    BasinRecord rec;
    rec.id = id;

    // Static attributes, reordered to catalog order.
    const CsvTable attrs = read_csv(attributes_path);
    if (attrs.header.empty() || attrs.header[0] != "basin_id")
        throw LoadError(attributes_path.string() + ":1: first column must be 'basin_id'");
    std::optional<std::size_t> row;
    for (std::size_t r = 0; r < attrs.rows.size(); ++r)
        if (attrs.rows[r][0] == id) row = r;
    if (!row) throw LoadError(attributes_path.string() + ": no row for basin '" + id + "'");
    rec.x_s.resize(catalog.size());
    for (std::size_t k = 0; k < catalog.size(); ++k) {
        const auto col = attrs.column(catalog[k].name);
        if (!col)
            throw LoadError(attributes_path.string() + ": missing attribute '" + catalog[k].name +
                            "'");
        const auto v = parse_double(attrs.rows[*row][*col]);
        if (!v)
            throw LoadError(attrs.where(*row) + ": missing or invalid value for attribute '" +
                            catalog[k].name + "'");
        rec.x_s[k] = *v;
    }

    const DatedColumns forcing = read_dated(forcing_path);
    const DatedColumns discharge = read_dated(discharge_path);
    if (discharge.names != std::vector<std::string>{"discharge"})
        throw LoadError(discharge_path.string() + ":1: header must be 'date,discharge'");
    if (forcing.start != discharge.start || forcing.rows.size() != discharge.rows.size())
        throw LoadError(forcing_path.string() + " and " + discharge_path.string() +
                        ": date ranges differ (" + format_date(forcing.start) + "+" +
                        std::to_string(forcing.rows.size()) + " vs " +
                        format_date(discharge.start) + "+" +
                        std::to_string(discharge.rows.size()) + ")");

    const std::size_t n = forcing.rows.size();
    rec.start = forcing.start;
    rec.forcing_names = forcing.names;
    rec.forcing = Matrix(n, forcing.names.size());
    rec.discharge.resize(n);
    for (std::size_t r = 0; r < n; ++r) {
        std::copy(forcing.rows[r].begin(), forcing.rows[r].end(), rec.forcing.row(r).begin());
        const double q = discharge.rows[r][0];
        if (q < 0.0)
            throw LoadError(discharge.where[r] + ": negative discharge " + format_double(q));
        rec.discharge[r] = q;
    }
    return rec;
}

std::vector<BasinRecord> load_dataset(const fs::path& dir, const FeatureCatalog& catalog) {
    const auto attrs = dir / "attributes.csv";
    std::vector<BasinRecord> out;
    for (const auto& id : list_basins(attrs))
        out.push_back(load_basin(dir / "forcing" / (id + ".csv"),
                                 dir / "discharge" / (id + ".csv"), attrs, catalog, id));
    if (out.empty()) throw LoadError(attrs.string() + ": no basins listed");
    return out;
}

std::vector<fs::path> write_dataset(const fs::path& dir, std::span<const BasinRecord> basins,
                                    const FeatureCatalog& catalog) {
    std::vector<fs::path> written;
    write_catalog(dir / "catalog.csv", catalog);
    written.push_back(dir / "catalog.csv");

    std::string attrs = "basin_id";
    for (const auto& e : catalog.entries()) attrs += "," + e.name;
    attrs += "\n";
    for (const auto& b : basins) {
        if (b.x_s.size() != catalog.size())
            throw ContractViolation("write_dataset: basin '" + b.id + "' static size != catalog");
        attrs += b.id;
        for (double v : b.x_s) attrs += "," + format_double(v);
        attrs += "\n";
    }
    write_file_atomic(dir / "attributes.csv", attrs);
    written.push_back(dir / "attributes.csv");

    for (const auto& b : basins) {
        std::string f = "date";
        for (const auto& n : b.forcing_names) f += "," + n;
        f += "\n";
        std::string q = "date,discharge\n";
        for (std::size_t r = 0; r < b.days(); ++r) {
            const auto d = format_date(b.date(r));
            f += d;
            for (double v : b.forcing.row(r)) f += "," + format_double(v);
            f += "\n";
            q += d + "," + format_double(b.discharge[r]) + "\n";
        }
        write_file_atomic(dir / "forcing" / (b.id + ".csv"), f);
        write_file_atomic(dir / "discharge" / (b.id + ".csv"), q);
        written.push_back(dir / "forcing" / (b.id + ".csv"));
        written.push_back(dir / "discharge" / (b.id + ".csv"));
    }
    return written;
}

void require_history(const BasinRecord& basin, std::size_t lookback) {
    if (basin.days() < lookback + 365)
        throw LoadError("basin '" + basin.id + "': " + std::to_string(basin.days()) +
                        " days, need at least lookback + 365 = " +
                        std::to_string(lookback + 365));
}

// ---------------------------------------------------------------------------

namespace {

ColumnStats column_stats(std::span<const double> v, const std::string& name) {
    if (v.empty()) throw ContractViolation("standardizer: no values for column '" + name + "'");
    ColumnStats s{mean(v), stddev(v)};
    if (!(s.std > 0.0))
        throw ContractViolation("standardizer: zero-variance column '" + name + "'");
    return s;
}

}  // namespace

Standardizer fit_standardizer(std::span<const BasinRecord> train_basins,
                              const FeatureCatalog& catalog,
                              std::optional<DateRange> train_range) {
    if (train_basins.empty()) throw ContractViolation("standardizer: no training basins");
    Standardizer s;
    s.dynamic_names = train_basins.front().forcing_names;
    s.static_names = catalog.names();
    const std::size_t nd = s.dynamic_names.size();

    std::vector<Vector> dyn(nd);
    Vector q;
    std::vector<Vector> stat(catalog.size());
    for (const auto& b : train_basins) {
        if (b.standardized) throw ContractViolation("standardizer: basin already standardized");
        if (b.forcing_names != s.dynamic_names)
            throw ContractViolation("standardizer: basin '" + b.id +
                                    "' has different forcing columns");
        if (b.x_s.size() != catalog.size())
            throw ContractViolation("standardizer: basin '" + b.id + "' static size != catalog");
        for (std::size_t k = 0; k < catalog.size(); ++k) stat[k].push_back(b.x_s[k]);
        for (std::size_t r = 0; r < b.days(); ++r) {
            if (train_range && !train_range->contains(b.date(r))) continue;
            for (std::size_t c = 0; c < nd; ++c) dyn[c].push_back(b.forcing(r, c));
            q.push_back(b.discharge[r]);
        }
    }
    for (std::size_t c = 0; c < nd; ++c) s.dynamic.push_back(column_stats(dyn[c], s.dynamic_names[c]));
    for (std::size_t k = 0; k < catalog.size(); ++k)
        s.statics.push_back(column_stats(stat[k], s.static_names[k]));
    s.discharge = column_stats(q, "discharge");
    return s;
}

namespace {

void check_compatible(const Standardizer& s, const BasinRecord& b) {
    if (b.forcing_names != s.dynamic_names)
        throw ContractViolation("standardizer: basin '" + b.id + "' forcing columns differ");
    if (b.x_s.size() != s.statics.size())
        throw ContractViolation("standardizer: basin '" + b.id + "' static size differs");
}

}  // namespace

BasinRecord apply(const Standardizer& s, const BasinRecord& basin) {
    check_compatible(s, basin);
    if (basin.standardized) throw ContractViolation("standardizer: basin already standardized");
    BasinRecord out = basin;
    for (std::size_t k = 0; k < out.x_s.size(); ++k)
        out.x_s[k] = (basin.x_s[k] - s.statics[k].mean) / s.statics[k].std;
    for (std::size_t r = 0; r < out.days(); ++r) {
        for (std::size_t c = 0; c < s.dynamic.size(); ++c)
            out.forcing(r, c) = (basin.forcing(r, c) - s.dynamic[c].mean) / s.dynamic[c].std;
        out.discharge[r] = (basin.discharge[r] - s.discharge.mean) / s.discharge.std;
    }
    out.standardized = true;
    return out;
}

BasinRecord invert(const Standardizer& s, const BasinRecord& basin) {
    check_compatible(s, basin);
    if (!basin.standardized) throw ContractViolation("standardizer: basin is not standardized");
    BasinRecord out = basin;
    for (std::size_t k = 0; k < out.x_s.size(); ++k)
        out.x_s[k] = basin.x_s[k] * s.statics[k].std + s.statics[k].mean;
    for (std::size_t r = 0; r < out.days(); ++r) {
        for (std::size_t c = 0; c < s.dynamic.size(); ++c)
            out.forcing(r, c) = basin.forcing(r, c) * s.dynamic[c].std + s.dynamic[c].mean;
        out.discharge[r] = s.to_discharge(basin.discharge[r]);
    }
    out.standardized = false;
    return out;
}

}  // namespace hydrosense

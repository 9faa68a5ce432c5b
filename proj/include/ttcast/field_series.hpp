#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ttcast/calendar.hpp"
#include "ttcast/geo.hpp"
#include "ttcast/tensor.hpp"

namespace ttcast {

/// Gridded daily measurements: values(i, j, t) at (lats[i], lons[j]) on
/// dates[t]. Dates are consecutive days.
struct FieldSeries {
    GeoGrid grid;
    std::vector<Date> dates;
    DenseTensor values;
    std::string variable;

    [[nodiscard]] std::size_t steps() const noexcept { return dates.size(); }

    /// Throws DataError unless the extents match the grid, the dates are
    /// consecutive and every value is finite.
    void validate() const;

    friend bool operator==(const FieldSeries&, const FieldSeries&) = default;
};

/// Consecutive dates starting at `start`, one per slice of `values`.
FieldSeries make_field_series(GeoGrid grid, Date start, DenseTensor values, std::string variable);

/// CSV with header `lat,lon,date,value`; rows ordered by date, then
/// longitude, then latitude. Numbers use the shortest round-trip form.
void write_grid_csv(std::ostream& os, const FieldSeries& fs);
FieldSeries read_grid_csv(std::istream& is, std::string variable = "TMAX");
void save_grid_csv(const FieldSeries& fs, const std::filesystem::path& path);
FieldSeries load_grid_csv(const std::filesystem::path& path, std::string variable = "TMAX");

/// Binary dataset, version 1:
///
///   "TTDS"  magic, u8 version
///   variable  u32 length + bytes
///   M, lats   u64 + f64 each
///   N, lons   u64 + f64 each
///   start     i64 days since 1970-01-01
///   values    embedded binary tensor (M x N x T)
inline constexpr std::uint8_t kDatasetFormatVersion = 1;

void write_dataset(std::ostream& os, const FieldSeries& fs);
FieldSeries read_dataset(std::istream& is);
void save_dataset(const FieldSeries& fs, const std::filesystem::path& path);
FieldSeries load_dataset(const std::filesystem::path& path);

/// Loads by extension: ".csv" as CSV, anything else as the binary format.
FieldSeries load_field_series(const std::filesystem::path& path);

struct SplitSpec {
    Date train_start;
    Date train_end;  // inclusive
    Date test_start;
    Date test_end;   // inclusive
};

/// Contiguous sub-range [first, last] of the series, inclusive.
FieldSeries slice_dates(const FieldSeries& fs, Date first, Date last);

/// Train and test halves. Requires train_start <= train_end < test_start <=
/// test_end, all inside the series.
std::pair<FieldSeries, FieldSeries> split(const FieldSeries& fs, const SplitSpec& spec);

}  // namespace ttcast

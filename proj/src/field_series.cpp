#include "ttcast/field_series.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ttcast/binary_io.hpp"
#include "ttcast/tensor_io.hpp"

namespace ttcast {

namespace {

constexpr std::string_view kCsvHeader = "lat,lon,date,value";

void append_number(std::string& out, double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, ptr);
}

double parse_number(std::string_view field, std::size_t line, std::string_view name) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
        throw DataError("line " + std::to_string(line) + ": invalid " + std::string(name) + " '" +
                        std::string(field) + "'");
    }
    return v;
}

std::size_t index_of(const std::vector<double>& axis, double v) {
    return static_cast<std::size_t>(std::lower_bound(axis.begin(), axis.end(), v) - axis.begin());
}

std::vector<double> sorted_unique(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

std::string format_point(double lat, double lon) {
    std::string s = "(";
    append_number(s, lat);
    s += ", ";
    append_number(s, lon);
    s += ")";
    return s;
}

void check_dates(const std::vector<Date>& dates) {
    for (std::size_t t = 1; t < dates.size(); ++t) {
        if (dates[t] - dates[t - 1] != 1) {
            if (dates[t] <= dates[t - 1]) {
                throw DataError("dates are not strictly increasing at " + dates[t].iso());
            }
            throw DataError("missing date " + dates[t - 1].plus_days(1).iso());
        }
    }
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw IoError("cannot open " + path.string());
    }
    return is;
}

}  // namespace

void FieldSeries::validate() const {
    if (values.order() != 3) {
        throw DataError("field values must be M x N x T, got " + shape_to_string(values.shape()));
    }
    if (values.extent(0) != grid.rows() || values.extent(1) != grid.cols() || values.extent(2) != dates.size()) {
        throw DataError("field values " + shape_to_string(values.shape()) + " do not match grid " +
                        std::to_string(grid.rows()) + "x" + std::to_string(grid.cols()) + " and " +
                        std::to_string(dates.size()) + " dates");
    }
    check_dates(dates);
    const auto& data = values.data();
    const auto bad = std::find_if(data.begin(), data.end(), [](double v) { return !std::isfinite(v); });
    if (bad != data.end()) {
        const auto flat = static_cast<std::size_t>(bad - data.begin());
        const std::size_t cells = grid.size();
        const GeoPoint p = grid.point(flat % cells);
        throw DataError("non-finite value at " + format_point(p.lat, p.lon) + " on " + dates[flat / cells].iso());
    }
}

FieldSeries make_field_series(GeoGrid grid, Date start, DenseTensor values, std::string variable) {
    if (values.order() != 3) {
        throw DataError("field values must be M x N x T, got " + shape_to_string(values.shape()));
    }
    FieldSeries fs{std::move(grid), {}, std::move(values), std::move(variable)};
    fs.dates.reserve(fs.values.extent(2));
    for (std::size_t t = 0; t < fs.values.extent(2); ++t) {
        fs.dates.push_back(start.plus_days(static_cast<std::int64_t>(t)));
    }
    fs.validate();
    return fs;
}

void write_grid_csv(std::ostream& os, const FieldSeries& fs) {
    fs.validate();
    const std::size_t m = fs.grid.rows();
    const std::size_t n = fs.grid.cols();
    std::string out(kCsvHeader);
    out += '\n';
    for (std::size_t t = 0; t < fs.steps(); ++t) {
        const std::string date = fs.dates[t].iso();
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t i = 0; i < m; ++i) {
                append_number(out, fs.grid.lats()[i]);
                out += ',';
                append_number(out, fs.grid.lons()[j]);
                out += ',';
                out += date;
                out += ',';
                append_number(out, fs.values.data()[i + m * (j + n * t)]);
                out += '\n';
            }
        }
    }
    os.write(out.data(), static_cast<std::streamsize>(out.size()));
}

FieldSeries read_grid_csv(std::istream& is, std::string variable) {
    struct Row {
        double lat;
        double lon;
        std::int64_t day;
        double value;
        std::size_t line;
    };
    std::string line;
    if (!std::getline(is, line)) {
        throw DataError("empty CSV file");
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    if (line != kCsvHeader) {
        throw DataError("CSV header must be '" + std::string(kCsvHeader) + "', got '" + line + "'");
    }

    std::vector<Row> rows;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        std::string_view rest(line);
        std::string_view fields[4];
        for (int f = 0; f < 4; ++f) {
            const auto comma = rest.find(',');
            if ((f < 3) == (comma == std::string_view::npos)) {
                throw DataError("line " + std::to_string(line_no) + ": expected 4 fields");
            }
            fields[f] = rest.substr(0, comma);
            rest = f < 3 ? rest.substr(comma + 1) : std::string_view{};
        }
        Row row{parse_number(fields[0], line_no, "latitude"), parse_number(fields[1], line_no, "longitude"), 0,
                parse_number(fields[3], line_no, "value"), line_no};
        try {
            row.day = Date::parse(fields[2]).days_since_epoch();
        } catch (const DataError& e) {
            throw DataError("line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!std::isfinite(row.value)) {
            throw DataError("line " + std::to_string(line_no) + ": value is not a finite number");
        }
        if (!std::isfinite(row.lat) || !std::isfinite(row.lon)) {
            throw DataError("line " + std::to_string(line_no) + ": non-finite coordinate");
        }
        rows.push_back(row);
    }
    if (rows.empty()) {
        throw DataError("CSV file has no data rows");
    }

    std::vector<double> lats;
    std::vector<double> lons;
    std::vector<std::int64_t> days;
    for (const auto& r : rows) {
        lats.push_back(r.lat);
        lons.push_back(r.lon);
        days.push_back(r.day);
    }
    lats = sorted_unique(std::move(lats));
    lons = sorted_unique(std::move(lons));
    std::sort(days.begin(), days.end());
    days.erase(std::unique(days.begin(), days.end()), days.end());

    std::vector<Date> dates;
    for (auto d : days) {
        dates.push_back(Date::from_days(d));
    }
    check_dates(dates);

    const std::size_t m = lats.size();
    const std::size_t n = lons.size();
    const std::size_t steps = dates.size();
    DenseTensor values({m, n, steps});
    std::vector<std::size_t> seen(m * n * steps, 0);  // line number, 0 = unset
    for (const auto& r : rows) {
        const std::size_t flat = index_of(lats, r.lat) +
                                 m * (index_of(lons, r.lon) + n * static_cast<std::size_t>(r.day - days.front()));
        if (seen[flat] != 0) {
            throw DataError("line " + std::to_string(r.line) + ": duplicate entry for " + format_point(r.lat, r.lon) +
                            " on " + Date::from_days(r.day).iso() + " (first at line " + std::to_string(seen[flat]) +
                            ")");
        }
        seen[flat] = r.line;
        values.data()[flat] = r.value;
    }
    const auto hole = std::find(seen.begin(), seen.end(), std::size_t{0});
    if (hole != seen.end()) {
        const auto flat = static_cast<std::size_t>(hole - seen.begin());
        throw DataError("ragged grid: no value for " + format_point(lats[flat % m], lons[(flat / m) % n]) + " on " +
                        dates[flat / (m * n)].iso());
    }
    FieldSeries fs{GeoGrid(std::move(lats), std::move(lons)), std::move(dates), std::move(values),
                   std::move(variable)};
    fs.validate();
    return fs;
}

void save_grid_csv(const FieldSeries& fs, const std::filesystem::path& path) {
    std::ostringstream os;
    write_grid_csv(os, fs);
    write_file_atomic(path, os.str());
}

FieldSeries load_grid_csv(const std::filesystem::path& path, std::string variable) {
    auto is = open_in(path);
    return read_grid_csv(is, std::move(variable));
}

void write_dataset(std::ostream& os, const FieldSeries& fs) {
    fs.validate();
    BinaryWriter w(os);
    w.raw("TTDS");
    w.u8(kDatasetFormatVersion);
    w.str(fs.variable);
    w.u64(fs.grid.rows());
    for (double v : fs.grid.lats()) {
        w.f64(v);
    }
    w.u64(fs.grid.cols());
    for (double v : fs.grid.lons()) {
        w.f64(v);
    }
    w.i64(fs.dates.front().days_since_epoch());
    write_tensor(os, fs.values);
}

FieldSeries read_dataset(std::istream& is) {
    BinaryReader r(is);
    r.expect_magic("TTDS", "dataset");
    const auto version = r.u8();
    if (version != kDatasetFormatVersion) {
        throw DataError("unsupported dataset version " + std::to_string(version));
    }
    std::string variable = r.str();
    auto read_axis = [&r] {
        const auto count = r.u64();
        if (count > (std::uint64_t{1} << 24)) {
            throw DataError("implausible grid axis length");
        }
        std::vector<double> axis(count);
        for (auto& v : axis) {
            v = r.f64();
        }
        return axis;
    };
    std::vector<double> lats = read_axis();
    std::vector<double> lons = read_axis();
    const Date start = Date::from_days(r.i64());
    DenseTensor values = read_tensor(is);
    GeoGrid grid;
    try {
        grid = GeoGrid(std::move(lats), std::move(lons));
    } catch (const Error& e) {
        throw DataError(std::string("dataset grid: ") + e.what());
    }
    return make_field_series(std::move(grid), start, std::move(values), std::move(variable));
}

void save_dataset(const FieldSeries& fs, const std::filesystem::path& path) {
    std::ostringstream os;
    write_dataset(os, fs);
    write_file_atomic(path, os.str());
}

FieldSeries load_dataset(const std::filesystem::path& path) {
    auto is = open_in(path);
    return read_dataset(is);
}

FieldSeries load_field_series(const std::filesystem::path& path) {
    return path.extension() == ".csv" ? load_grid_csv(path) : load_dataset(path);
}

FieldSeries slice_dates(const FieldSeries& fs, Date first, Date last) {
    if (fs.dates.empty() || first > last || first < fs.dates.front() || last > fs.dates.back()) {
        throw DataError("date range " + first.iso() + ".." + last.iso() + " is outside the series" +
                        (fs.dates.empty() ? std::string() : " (" + fs.dates.front().iso() + ".." + fs.dates.back().iso() + ")"));
    }
    const auto begin = static_cast<std::size_t>(first - fs.dates.front());
    const auto count = static_cast<std::size_t>(last - first) + 1;
    FieldSeries out{fs.grid,
                    std::vector<Date>(fs.dates.begin() + static_cast<std::ptrdiff_t>(begin),
                                      fs.dates.begin() + static_cast<std::ptrdiff_t>(begin + count)),
                    fs.values.last_mode_range(begin, count), fs.variable};
    return out;
}

std::pair<FieldSeries, FieldSeries> split(const FieldSeries& fs, const SplitSpec& spec) {
    if (spec.train_start > spec.train_end || spec.test_start > spec.test_end) {
        throw DataError("split ranges must have start <= end");
    }
    if (spec.train_end >= spec.test_start) {
        throw DataError("training range " + spec.train_start.iso() + ".." + spec.train_end.iso() +
                        " overlaps or follows the test range starting " + spec.test_start.iso());
    }
    return {slice_dates(fs, spec.train_start, spec.train_end), slice_dates(fs, spec.test_start, spec.test_end)};
}

}  // namespace ttcast

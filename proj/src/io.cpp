#include "emos/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "emos/dates.hpp"
#include "emos/errors.hpp"
#include "emos/log.hpp"

namespace emos {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

bool is_missing(std::string_view f) { return f.empty() || f == "NA" || f == "NaN" || f == "nan"; }

double parse_number(std::string_view f, long line, std::string_view column) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
    if (ec != std::errc() || ptr != f.data() + f.size())
        throw ParseError("column " + std::string(column) + ": '" + std::string(f) + "' is not a number", line);
    if (!std::isfinite(v)) throw ParseError("column " + std::string(column) + ": value is not finite", line);
    if (v < 0.0) throw ParseError("column " + std::string(column) + ": wind speeds must be nonnegative", line);
    return v;
}

int check_header(std::string_view line) {
    const auto fields = split_fields(line);
    if (fields.size() < 4 || fields[0] != "date" || fields[1] != "station" || fields[2] != "obs")
        throw ParseError("header must be date,station,obs,m1,...,mM", 1);
    for (std::size_t i = 3; i < fields.size(); ++i)
        if (fields[i] != "m" + std::to_string(i - 2))
            throw ParseError("header column " + std::to_string(i + 1) + " should be m" + std::to_string(i - 2), 1);
    return static_cast<int>(fields.size() - 3);
}

}  // namespace

std::filesystem::path group_map_path(const std::filesystem::path& data) {
    std::filesystem::path p = data;
    p += ".groups";
    return p;
}

GroupSpec parse_group_map(const std::string& text) {
    std::vector<int> sizes;
    std::istringstream in(text);
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view s(line);
        if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
        std::string cleaned(s);
        std::replace(cleaned.begin(), cleaned.end(), ',', ' ');
        std::istringstream tokens(cleaned);
        std::string tok;
        while (tokens >> tok) {
            int v = 0;
            const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
            if (ec != std::errc() || ptr != tok.data() + tok.size() || v < 1)
                throw ParseError("group size '" + tok + "' is not a positive integer", line_no);
            sizes.push_back(v);
        }
    }
    if (sizes.empty()) throw ParseError("group map lists no groups", line_no);
    return GroupSpec(std::move(sizes));
}

Dataset ingest(std::istream& in, const GroupSpec* groups) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty file", 1);
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    const int members = check_header(line);

    Dataset ds;
    if (groups) {
        if (groups->members() != members)
            throw ConfigError("group map covers " + std::to_string(groups->members()) + " members, data has " +
                              std::to_string(members));
        ds.groups = *groups;
    } else {
        ds.groups = GroupSpec::distinguishable(members);
    }

    long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != static_cast<std::size_t>(members) + 3)
            throw ParseError("expected " + std::to_string(members + 3) + " fields, found " +
                                 std::to_string(fields.size()),
                             line_no);
        const auto date = parse_date(fields[0]);
        if (!date) throw ParseError("'" + std::string(fields[0]) + "' is not a YYYY-MM-DD date", line_no);
        if (fields[1].empty()) throw ParseError("empty station", line_no);
        if (std::any_of(fields.begin() + 2, fields.end(), is_missing)) {
            ++ds.dropped_rows;
            continue;
        }
        EnsembleForecast f{*date, std::string(fields[1]), Eigen::VectorXd(members), std::nullopt};
        f.obs = parse_number(fields[2], line_no, "obs");
        for (int m = 0; m < members; ++m)
            f.members[m] = parse_number(fields[static_cast<std::size_t>(m) + 3], line_no, "m" + std::to_string(m + 1));
        ds.cases.push_back(std::move(f));
    }
    std::stable_sort(ds.cases.begin(), ds.cases.end(),
                     [](const EnsembleForecast& a, const EnsembleForecast& b) { return a.date < b.date; });
    if (ds.dropped_rows > 0)
        log::info("dropped " + std::to_string(ds.dropped_rows) + " rows with missing members or observation");
    return ds;
}

Dataset ingest(const std::filesystem::path& path, const std::optional<std::filesystem::path>& groups) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    std::optional<GroupSpec> g;
    const std::filesystem::path map = groups ? *groups : group_map_path(path);
    if (groups || std::filesystem::exists(map)) {
        std::ifstream gin(map);
        if (!gin) throw InputError("cannot open group map " + map.string());
        std::ostringstream text;
        text << gin.rdbuf();
        g = parse_group_map(text.str());
    }
    return ingest(in, g ? &*g : nullptr);
}

std::string format_number(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

void write_dataset(std::ostream& out, std::span<const EnsembleForecast> cases) {
    if (cases.empty()) throw InputError("write_dataset: no cases");
    const Eigen::Index members = cases.front().members.size();
    out << "date,station,obs";
    for (Eigen::Index m = 1; m <= members; ++m) out << ",m" << m;
    out << '\n';
    for (const auto& c : cases) {
        if (c.members.size() != members) throw InputError("write_dataset: ensemble size differs between cases");
        out << format_date(c.date) << ',' << c.station << ',' << (c.obs ? format_number(*c.obs) : "NA");
        for (Eigen::Index m = 0; m < members; ++m) out << ',' << format_number(c.members[m]);
        out << '\n';
    }
}

void write_dataset(const std::filesystem::path& path, std::span<const EnsembleForecast> cases, const GroupSpec& g) {
    {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw InputError("cannot write " + path.string());
        write_dataset(out, cases);
        if (!out) throw InputError("write failed for " + path.string());
    }
    std::ofstream gout(group_map_path(path), std::ios::binary);
    if (!gout) throw InputError("cannot write " + group_map_path(path).string());
    for (int k = 0; k < g.groups(); ++k) gout << (k ? "," : "") << g.sizes()[k];
    gout << '\n';
}

}  // namespace emos

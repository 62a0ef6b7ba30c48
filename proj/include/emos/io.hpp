#pragma once

// Delimited-text datasets.
//
//   date,station,obs,m1,...,mM
//   2020-01-01,ST01,5.3,4.9,6.1,...
//
// The group map sits next to the data in `<path>.groups`: group sizes in
// member order, separated by commas or whitespace, '#' starting a comment.
// Without a group map every member is its own group.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "emos/models.hpp"

namespace emos {

struct Dataset {
    std::vector<EnsembleForecast> cases;
    GroupSpec groups = GroupSpec({1});
    /// Rows dropped for a missing member or observation.
    std::size_t dropped_rows = 0;
};

/// Sidecar path for a data file.
std::filesystem::path group_map_path(const std::filesystem::path& data);

/// Parses a group map. Throws ParseError on malformed text.
GroupSpec parse_group_map(const std::string& text);

/// Reads a dataset and its group map (`groups`, else the sidecar when it
/// exists). Cases come back stably sorted by date. Throws ParseError with
/// the offending line for malformed input and ConfigError when the group map
/// does not match the member count.
Dataset ingest(const std::filesystem::path& path, const std::optional<std::filesystem::path>& groups = std::nullopt);
Dataset ingest(std::istream& in, const GroupSpec* groups);

/// Shortest decimal text that reads back to the same double.
std::string format_number(double v);

/// Writes the dataset and its sidecar group map.
void write_dataset(const std::filesystem::path& path, std::span<const EnsembleForecast> cases, const GroupSpec& g);
void write_dataset(std::ostream& out, std::span<const EnsembleForecast> cases);

}  // namespace emos

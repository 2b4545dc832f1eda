#pragma once

#include "romkit/core.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace romkit {

/// Column-stacked state vectors, with optional uniformly spaced timestamps and
/// one parameter point per snapshot column.
struct SnapshotSet {
    Matrix data;                                // n_dof x m
    std::optional<std::vector<double>> times;   // length m, strictly increasing, uniform
    std::optional<Matrix> params;               // n_params x m
    std::optional<double> dt_explicit;          // overrides the spacing inferred from times

    std::size_t n_dof() const { return data.rows(); }
    std::size_t m() const { return data.cols(); }
    double dt() const;
};

/// Throws unless the set satisfies all invariants (finite data, consistent
/// lengths, strictly increasing uniformly spaced times).
void validate(const SnapshotSet& set);

enum class SnapshotFormat { Csv, RomkBinary };

/// Picks Csv for .csv, RomkBinary for .romk; anything else is a format error.
SnapshotFormat format_from_extension(const std::filesystem::path& path);

SnapshotSet load_snapshots(const std::filesystem::path& path, SnapshotFormat format);
void save_snapshots(const SnapshotSet& set, const std::filesystem::path& path,
                    SnapshotFormat format);

/// S = columns 1..m-1, Sdot = columns 2..m (1-based), both n_dof x (m-1).
std::pair<Matrix, Matrix> split_shifted(const SnapshotSet& set);

/// Sidecar description of a dataset: `<data file>.manifest`, key=value lines.
struct DatasetManifest {
    std::size_t n_dof = 0;
    std::size_t m = 0;
    std::optional<double> dt;
    std::vector<std::string> param_names;
    std::uint64_t checksum = 0;
};

DatasetManifest manifest_for(const SnapshotSet& set);
std::uint64_t content_checksum(const SnapshotSet& set);

} // namespace romkit

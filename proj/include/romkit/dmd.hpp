#pragma once

#include "romkit/core.hpp"
#include "romkit/snapshots.hpp"

#include <filesystem>

namespace romkit {
namespace dmd {

/// Fitted spectral surrogate of the best-fit linear map between shifted
/// snapshot matrices: exact modes, discrete-time eigenvalues, and the
/// amplitudes that expand the first snapshot in the mode basis.
struct DmdModel {
    ComplexMatrix modes;  // n_dof x r
    CVector eigenvalues;  // r, discrete time
    CVector amplitudes;   // r
    std::size_t rank = 0;
    double dt = 1.0;
    std::size_t n_dof = 0;
    std::size_t m_snapshots = 0;
};

void validate(const DmdModel& model);

/// Fits the rank-r surrogate: split snapshots, truncated SVD of the first
/// block, reduced operator, its eigendecomposition, exact modes, amplitudes
/// from a least-squares fit of the first snapshot.
DmdModel fit(const SnapshotSet& set, RankSpec rank_spec);

/// State at integer step k plus the imaginary-leakage diagnostic
/// ||Im|| / ||Re|| of the complex reconstruction.
struct StateResult {
    Vector state;
    double imag_ratio = 0.0;
};

StateResult reconstruct(const DmdModel& model, std::size_t k);

/// Continuous-time evaluation via the principal-branch logarithm of the
/// spectrum; zero eigenvalues are skipped and counted.
struct ForecastResult {
    Vector state;
    double imag_ratio = 0.0;
    std::size_t excluded_modes = 0;
};

ForecastResult forecast(const DmdModel& model, double t);

struct SpectrumRow {
    Complex eigenvalue;
    Complex omega;     // log(lambda)/dt, principal branch
    double magnitude;  // |lambda|
    double frequency;  // arg(lambda) / (2 pi dt)
};

std::vector<SpectrumRow> spectrum(const DmdModel& model);

/// romk container, section tag "DMD1".
void save_model(const DmdModel& model, const std::filesystem::path& path);
DmdModel load_model(const std::filesystem::path& path);

/// Frobenius-relative error of the reconstruction against the training data.
double training_residual(const DmdModel& model, const SnapshotSet& set);

} // namespace dmd
} // namespace romkit

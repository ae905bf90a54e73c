#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ericson/analysis.hpp"
#include "ericson/scattering.hpp"

namespace ericson {

/// Writes `# {json header}`, a CSV header `abscissa,s21_re,s21_im,...` and one
/// row per grid point with 17 significant digits.
void write_spectrum(const std::filesystem::path& path, const SMatrixSpectrum& spectrum);
/// Inverse of write_spectrum.
SMatrixSpectrum read_spectrum(const std::filesystem::path& path);

enum class ImportFormat { automatic, complex, abs2 };
ImportFormat import_format_from_string(const std::string& s);

/// Reads an external S21 spectrum: CSV with header `abscissa,s21_re,s21_im`
/// or `abscissa,s21_abs2`. An abs2 column is stored as the real amplitude
/// sqrt(abs2). Errors carry the offending line number.
SMatrixSpectrum import_spectrum(const std::filesystem::path& path,
                                ImportFormat format = ImportFormat::automatic);

/// `lag,corr`.
void write_curve(const std::filesystem::path& path, const CorrelationCurve& curve);
/// `gamma,product,stderr,model_tag`.
void write_products(const std::filesystem::path& path, std::span<const ProductPoint> points);
std::vector<ProductPoint> read_products(const std::filesystem::path& path);
/// Per-window bookkeeping including dropped windows.
void write_windows(const std::filesystem::path& path, std::span<const WindowResult> windows);
/// `gamma,chi`.
void write_chi(const std::filesystem::path& path, std::span<const std::pair<double, double>> chi);

/// 17 significant digits, enough to read back the same double.
std::string format_double(double v);
/// Writes through a temporary file in the same directory and renames.
void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

} // namespace ericson

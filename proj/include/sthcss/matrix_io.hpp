#pragma once

#include <filesystem>
#include <string>

#include "sthcss/tensor.hpp"

namespace sthcss {

/// Formats a double with 17 significant digits ('.' decimal point), enough
/// for an exact round trip.
std::string format_double(double v);

/// Row-major CSV, no header, comma separator, '\n' row terminator.
void write_matrix_csv(const std::filesystem::path& path, const Tensor& m);

Tensor read_matrix_csv(const std::filesystem::path& path);

/// Plain-text PGM ("P2", maxval 255), values scaled from [min,max] to
/// [0,255]; a constant matrix maps to mid-gray 128.
void write_matrix_pgm(const std::filesystem::path& path, const Tensor& m);

}  // namespace sthcss

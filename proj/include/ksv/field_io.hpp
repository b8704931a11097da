#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ksv/field.hpp"

namespace ksv {

/// Writes one `<stem>_species<k>.bin` per species (k = 1..n) plus a `<stem>.txt` sidecar.
///
/// Each binary file holds a 32-byte header (8-byte magic "KSVFIELD", uint64 N,
/// float64 L, uint64 species index) followed by N*N little-endian float64 values
/// in row-major order. The sidecar lists grid, species count, target masses
/// (hexadecimal floats, so reload is bit-exact) and the binary file names.
std::vector<std::filesystem::path> write_field_dump(const DensityField& field, const std::filesystem::path& dir,
                                                    const std::string& stem);

/// Reloads a dump written by write_field_dump. Throws Error on malformed files.
DensityField read_field_dump(const std::filesystem::path& dir, const std::string& stem);

}  // namespace ksv

#pragma once

#include <string>

#include "qdetect/boundary.hpp"

namespace qdetect::io {

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

// Inverse of fredholm::boundary_csv.
Boundary2D parse_boundary_csv(const std::string& text);

}  // namespace qdetect::io

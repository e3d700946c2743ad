#include "qdetect/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "qdetect/error.hpp"

namespace qdetect::io {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::InvalidArgument, "cannot read " + path);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::InvalidArgument, "cannot write " + path);
    f << content;
    if (!f) throw Error(ErrorCode::InvalidArgument, "write failed for " + path);
}

Boundary2D parse_boundary_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    Boundary2D b;
    bool have_zero = false;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto k = line.find("phi_zero=");
            if (k != std::string::npos) {
                b.phi_zero = std::stod(line.substr(k + 9));
                have_zero = true;
            }
            continue;
        }
        if (line.rfind("phi1", 0) == 0) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw Error(ErrorCode::InvalidArgument, "boundary row without comma: " + line);
        b.phi1_grid.push_back(std::stod(line.substr(0, comma)));
        b.b_values.push_back(std::stod(line.substr(comma + 1)));
    }
    if (b.phi1_grid.size() < 2) throw Error(ErrorCode::InvalidArgument, "boundary file needs at least two rows");
    for (size_t i = 0; i < b.b_values.size(); ++i) {
        if (!std::isfinite(b.phi1_grid[i]) || std::isnan(b.b_values[i]) || b.b_values[i] < 0.0)
            throw Error(ErrorCode::InvalidArgument, "boundary row " + std::to_string(i) + " out of range");
        if (i > 0 && (b.phi1_grid[i] <= b.phi1_grid[i - 1] || b.b_values[i] > b.b_values[i - 1]))
            throw Error(ErrorCode::InvalidArgument,
                        "boundary file must have increasing phi1 and nonincreasing b (row " + std::to_string(i) + ")");
    }
    if (!have_zero) b.phi_zero = region_curve(b.phi1_grid, b.b_values).zero();
    b.std_error.assign(b.phi1_grid.size(), 0.0);
    return b;
}

}  // namespace qdetect::io

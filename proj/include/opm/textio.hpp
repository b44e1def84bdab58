#ifndef OPM_TEXTIO_HPP
#define OPM_TEXTIO_HPP

#include <cstdio>
#include <string>
#include <vector>

namespace opm::textio {

// Doubles in text outputs carry 17 significant digits so they round-trip.
inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> split_csv_line(const std::string& line);

std::string read_file(const std::string& path);       // throws IoError
void write_file(const std::string& path, const std::string& text);

} // namespace opm::textio

#endif

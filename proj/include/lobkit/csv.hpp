#pragma once

#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "lobkit/errors.hpp"

namespace lobkit {

// Round-trip-exact decimal formatting for machine-readable files.
inline std::string format_full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string format_short(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

class CsvWriter {
  public:
    CsvWriter(std::ostream& out, std::vector<std::string> header) : out_(out) {
        for (std::size_t i = 0; i < header.size(); ++i)
            out_ << (i ? "," : "") << header[i];
        out_ << "\n";
        columns_ = header.size();
    }

    void row(const std::vector<double>& values) {
        if (values.size() != columns_) throw ShapeError("csv row width mismatch");
        for (std::size_t i = 0; i < values.size(); ++i)
            out_ << (i ? "," : "") << format_full(values[i]);
        out_ << "\n";
    }

  private:
    std::ostream& out_;
    std::size_t columns_;
};

inline std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open output file: " + path);
    return out;
}

}  // namespace lobkit

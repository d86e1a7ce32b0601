#pragma once

#include "qgraph/errors.hpp"

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

namespace qgraph {

/// Doubles are rendered with 17 significant digits so that every CSV value
/// round-trips to the exact bit pattern.
inline std::string format_double17(double v) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.17g", v);
    return buffer;
}

/// Line-oriented CSV emitter with a fixed column order.
class CsvWriter {
  public:
    explicit CsvWriter(const std::string& path) : out_(path, std::ios::binary) {
        if (!out_) throw ConfigError("cannot open output file '" + path + "'");
    }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
    }

  private:
    std::ofstream out_;
};

}  // namespace qgraph

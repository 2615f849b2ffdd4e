#pragma once
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "wptsim/errors.hpp"

namespace wptsim {

// Shortest round-trip decimal form. All numeric output funnels through here
// so that rerun outputs are byte-identical.
inline std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    // trim to the shortest representation that still round-trips
    for (int prec = 1; prec < 17; ++prec) {
        char s[40];
        std::snprintf(s, sizeof s, "%.*g", prec, v);
        double back = 0.0;
        std::sscanf(s, "%lf", &back);
        if (back == v) return s;
    }
    return buf;
}

class Csv {
  public:
    explicit Csv(std::vector<std::string> header) {
        for (size_t i = 0; i < header.size(); ++i) {
            if (i) out_ << ',';
            out_ << header[i];
        }
        out_ << '\n';
        cols_ = header.size();
    }

    void row(const std::vector<std::string>& cells) {
        for (size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
    }

    std::string str() const { return out_.str(); }

    void write(const std::string& path) const {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw ConfigError("cannot write " + path);
        f << out_.str();
    }

    size_t cols() const { return cols_; }

  private:
    std::ostringstream out_;
    size_t cols_ = 0;
};

inline std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot read " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

} // namespace wptsim

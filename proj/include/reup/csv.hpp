// Copyright 2026 The reupload Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <type_traits>
#include <vector>

namespace reup {

/// Raised for unreadable or unwritable files.
class IoError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Shortest decimal text that parses back to exactly the same double.
inline std::string format_double(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return {buf, res.ptr};
}

inline bool parse_double(std::string_view s, double &out) {
    if (s == "nan") {
        out = std::nan("");
        return true;
    }
    // from_chars rejects a leading '+'
    if (!s.empty() && s.front() == '+') {
        s.remove_prefix(1);
    }
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

template <class Int> bool parse_integer(std::string_view s, Int &out) {
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

inline std::vector<std::string_view> split_fields(std::string_view line, char sep = ',') {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

/// Incremental CSV text with a fixed header.
class CsvWriter {
  public:
    explicit CsvWriter(std::initializer_list<std::string_view> header) {
        bool first = true;
        for (const auto h : header) {
            if (!first) {
                out_ << ',';
            }
            out_ << h;
            first = false;
        }
        out_ << '\n';
    }

    CsvWriter &cell(std::string_view s) {
        sep();
        out_ << s;
        return *this;
    }
    CsvWriter &cell(double v) { return cell(format_double(v)); }
    template <class Int>
        requires std::is_integral_v<Int>
    CsvWriter &cell(Int v) {
        return cell(std::to_string(v));
    }
    CsvWriter &end_row() {
        out_ << '\n';
        first_in_row_ = true;
        return *this;
    }

    [[nodiscard]] std::string str() const { return out_.str(); }

  private:
    void sep() {
        if (!first_in_row_) {
            out_ << ',';
        }
        first_in_row_ = false;
    }

    std::ostringstream out_;
    bool first_in_row_{true};
};

inline void write_text(const std::filesystem::path &path, std::string_view text) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) {
        throw IoError("cannot open '" + path.string() + "' for writing");
    }
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!f) {
        throw IoError("failed writing '" + path.string() + "'");
    }
}

inline std::string read_text(const std::filesystem::path &path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        throw IoError("cannot open '" + path.string() + "' for reading");
    }
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

} // namespace reup

#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace bess::csv {

// Line-oriented CSV reader. Gzip-compressed files are decompressed transparently.
// Supports double-quoted fields with "" escapes; a quoted field may not span lines.
class Reader {
public:
    explicit Reader(const std::string& path);
    ~Reader();
    Reader(const Reader&) = delete;
    Reader& operator=(const Reader&) = delete;

    // Reads the header and checks it equals `expected` exactly.
    void expect_header(const std::vector<std::string>& expected);

    // Next non-blank row; false at end of file.
    bool next(std::vector<std::string>& fields);

    std::size_t line() const { return line_; }
    const std::string& path() const { return path_; }

    // Field conversions that raise ParseError tagged with the current line.
    double to_double(const std::string& field, std::string_view column) const;
    long long to_int(const std::string& field, std::string_view column) const;

private:
    bool read_line(std::string& out);

    std::string path_;
    struct Handle;
    std::unique_ptr<Handle> handle_;
    std::size_t line_ = 0;
    std::size_t width_ = 0;
};

std::vector<std::string> split_line(std::string_view line);

// Quotes a field when it contains a delimiter or quote.
std::string escape(std::string_view field);

// Shortest representation that round-trips to the same double.
std::string num(double v);

}  // namespace bess::csv

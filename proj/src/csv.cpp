#include "bess/csv.hpp"

#include <charconv>
#include <cmath>

#include <fmt/format.h>
#include <zlib.h>

#include "bess/errors.hpp"

namespace bess::csv {

struct Reader::Handle {
    gzFile file = nullptr;
};

Reader::Reader(const std::string& path) : path_(path), handle_(std::make_unique<Handle>()) {
    handle_->file = gzopen(path.c_str(), "rb");
    if (handle_->file == nullptr) {
        throw InvalidInput(fmt::format("cannot open '{}'", path));
    }
    gzbuffer(handle_->file, 1 << 16);
}

Reader::~Reader() {
    if (handle_ && handle_->file) gzclose(handle_->file);
}

bool Reader::read_line(std::string& out) {
    out.clear();
    char buf[4096];
    bool got = false;
    while (gzgets(handle_->file, buf, sizeof buf) != nullptr) {
        got = true;
        out.append(buf);
        if (!out.empty() && out.back() == '\n') break;
    }
    if (!got) return false;
    ++line_;
    while (!out.empty() && (out.back() == '\n' || out.back() == '\r')) out.pop_back();
    return true;
}

void Reader::expect_header(const std::vector<std::string>& expected) {
    std::string line;
    if (!read_line(line)) {
        throw ParseError(path_, 1, "missing header row");
    }
    // tolerate a UTF-8 byte-order mark
    if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    const auto got = split_line(line);
    if (got != expected) {
        std::string want;
        for (const auto& e : expected) want += (want.empty() ? "" : ",") + e;
        throw ParseError(path_, line_, fmt::format("header mismatch, expected '{}'", want));
    }
    width_ = expected.size();
}

bool Reader::next(std::vector<std::string>& fields) {
    std::string line;
    while (read_line(line)) {
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        fields = split_line(line);
        if (width_ != 0 && fields.size() != width_) {
            throw ParseError(path_, line_,
                             fmt::format("expected {} fields, found {}", width_, fields.size()));
        }
        return true;
    }
    return false;
}

double Reader::to_double(const std::string& field, std::string_view column) const {
    double value = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    while (first < last && *first == ' ') ++first;
    while (last > first && last[-1] == ' ') --last;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || first == last) {
        throw ParseError(path_, line_, fmt::format("column {}: '{}' is not a number", column, field));
    }
    if (!std::isfinite(value)) {
        throw ParseError(path_, line_, fmt::format("column {}: non-finite value '{}'", column, field));
    }
    return value;
}

long long Reader::to_int(const std::string& field, std::string_view column) const {
    long long value = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty()) {
        throw ParseError(path_, line_, fmt::format("column {}: '{}' is not an integer", column, field));
    }
    return value;
}

std::vector<std::string> split_line(std::string_view line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(std::move(cur));
    return out;
}

std::string escape(std::string_view field) {
    if (field.find_first_of(",\"\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string num(double v) {
    if (v == 0.0) return "0";  // folds -0
    return fmt::format("{}", v);
}

}  // namespace bess::csv

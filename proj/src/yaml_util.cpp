#include "yaml_util.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace sepm::detail {

std::string format_number(double value) {
    char buffer[32];
    const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
    std::string text(buffer, result.ptr);
    // Keep floats recognisable as floats when they happen to be integral.
    if (text.find_first_of(".eEn") == std::string::npos) text += ".0";
    return text;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::io, "cannot open '" + path.string() + "'");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorCode::io, "cannot write '" + path.string() + "'");
    }
    out << text;
    if (!out) {
        throw Error(ErrorCode::io, "write failed for '" + path.string() + "'");
    }
}

// -----------------------------------------------------------------------------

Reader Reader::parse(const std::string& text, const std::string& source) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ParseError(source, e.mark.line + 1, e.msg);
    }
    if (!root.IsMap()) {
        throw ParseError(source, 1, "top level must be a mapping");
    }
    return Reader(root, source);
}

bool Reader::has(const std::string& key) const { return node_.IsMap() && node_[key].IsDefined(); }

Reader Reader::value(const std::string& key) const {
    if (!has(key)) fail("missing key '" + key + "'");
    return Reader(node_[key], source_);
}

Reader Reader::child(const std::string& key) const {
    auto r = value(key);
    if (!r.node_.IsMap()) fail(key, "expected a mapping");
    return r;
}

Reader Reader::sequence(const std::string& key) const {
    auto r = value(key);
    if (!r.node_.IsSequence()) fail(key, "expected a list");
    return r;
}

Reader Reader::at(std::size_t i) const { return Reader(node_[i], source_); }

double Reader::number(std::size_t i) const { return at(i).as_number(); }

std::vector<std::string> Reader::keys() const {
    std::vector<std::string> out;
    for (const auto& kv : node_) out.push_back(kv.first.as<std::string>());
    return out;
}

std::string Reader::as_string() const {
    if (!node_.IsScalar()) fail("expected a scalar");
    return node_.Scalar();
}

double Reader::as_number() const {
    const auto text = as_string();
    double value = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (first != last && *first == '+') ++first;
    const auto result = std::from_chars(first, last, value);
    if (result.ec != std::errc{} || result.ptr != last) {
        fail("expected a number, got '" + text + "'");
    }
    return value;
}

long Reader::as_long() const {
    const auto text = as_string();
    long value = 0;
    const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
    if (result.ec != std::errc{} || result.ptr != text.data() + text.size()) {
        fail("expected an integer, got '" + text + "'");
    }
    return value;
}

std::string Reader::get_string(const std::string& key) const { return value(key).as_string(); }

std::string Reader::get_string(const std::string& key, const std::string& fallback) const {
    return has(key) ? get_string(key) : fallback;
}

double Reader::get_number(const std::string& key) const { return value(key).as_number(); }

double Reader::get_number(const std::string& key, double fallback) const {
    return has(key) ? get_number(key) : fallback;
}

int Reader::get_int(const std::string& key, int fallback) const {
    return has(key) ? static_cast<int>(value(key).as_long()) : fallback;
}

long Reader::get_long(const std::string& key) const { return value(key).as_long(); }

bool Reader::get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const auto text = get_string(key);
    if (text == "true") return true;
    if (text == "false") return false;
    fail(key, "expected true or false");
}

void Reader::allow_keys(std::initializer_list<const char*> allowed) const {
    if (!node_.IsMap()) fail("expected a mapping");
    for (const auto& kv : node_) {
        const auto key = kv.first.as<std::string>();
        const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
        if (!known) {
            throw ParseError(source_, kv.first.Mark().line + 1, "unknown key '" + key + "'");
        }
    }
}

void Reader::fail(const std::string& message) const { throw ParseError(source_, line(), message); }

void Reader::fail(const std::string& key, const std::string& message) const {
    int at_line = line();
    if (node_.IsMap() && node_[key].IsDefined()) at_line = node_[key].Mark().line + 1;
    throw ParseError(source_, at_line, key + ": " + message);
}

// -----------------------------------------------------------------------------

std::string Writer::quote(const std::string& text) {
    std::string out = "\"";
    for (const char c : text) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    out += '"';
    return out;
}

void Writer::open(const std::string& key) {
    out_ += indent() + key + ":\n";
    ++depth_;
}

void Writer::close() {
    if (depth_ > 0) --depth_;
}

void Writer::scalar(const std::string& key, const std::string& value) { raw(key, quote(value)); }

void Writer::raw(const std::string& key, const std::string& value) { out_ += indent() + key + ": " + value + "\n"; }

void Writer::pair(const std::string& key, double lo, double hi) {
    raw(key, "[" + format_number(lo) + ", " + format_number(hi) + "]");
}

void Writer::list(const std::string& key, const std::vector<std::string>& quoted_items) {
    std::string text = "[";
    for (std::size_t i = 0; i < quoted_items.size(); ++i) {
        if (i > 0) text += ", ";
        text += quote(quoted_items[i]);
    }
    raw(key, text + "]");
}

void Writer::rows(const std::string& key, const std::vector<Fields>& rows) {
    if (rows.empty()) {
        raw(key, "[]");
        return;
    }
    open(key);
    for (const auto& fields : rows) {
        std::string text = indent() + "- {";
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i > 0) text += ", ";
            text += fields[i].first + ": " + fields[i].second;
        }
        out_ += text + "}\n";
    }
    close();
}

}  // namespace sepm::detail

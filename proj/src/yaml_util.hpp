#pragma once

// Small helpers over yaml-cpp: strict key checking and typed reads that
// report file:line on failure, plus a deterministic block-style writer.

#include "sepm/errors.hpp"

#include <yaml-cpp/yaml.h>

#include <filesystem>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

namespace sepm::detail {

[[nodiscard]] std::string format_number(double value);
[[nodiscard]] std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& text);

class Reader {
public:
    Reader(YAML::Node node, std::string source) : node_(std::move(node)), source_(std::move(source)) {}

    [[nodiscard]] static Reader parse(const std::string& text, const std::string& source);

    [[nodiscard]] int line() const noexcept { return node_.Mark().line + 1; }
    [[nodiscard]] const std::string& source() const noexcept { return source_; }
    [[nodiscard]] const YAML::Node& node() const noexcept { return node_; }

    [[nodiscard]] bool is_map() const { return node_.IsMap(); }
    [[nodiscard]] bool is_sequence() const { return node_.IsSequence(); }
    [[nodiscard]] bool has(const std::string& key) const;
    [[nodiscard]] Reader child(const std::string& key) const;     // map
    [[nodiscard]] Reader sequence(const std::string& key) const;  // sequence
    [[nodiscard]] Reader value(const std::string& key) const;     // any node
    [[nodiscard]] std::size_t size() const { return node_.size(); }
    [[nodiscard]] Reader at(std::size_t i) const;
    [[nodiscard]] double number(std::size_t i) const;
    [[nodiscard]] std::vector<std::string> keys() const;

    [[nodiscard]] std::string as_string() const;
    [[nodiscard]] double as_number() const;
    [[nodiscard]] long as_long() const;

    [[nodiscard]] std::string get_string(const std::string& key) const;
    [[nodiscard]] std::string get_string(const std::string& key, const std::string& fallback) const;
    [[nodiscard]] double get_number(const std::string& key) const;
    [[nodiscard]] double get_number(const std::string& key, double fallback) const;
    [[nodiscard]] int get_int(const std::string& key, int fallback) const;
    [[nodiscard]] long get_long(const std::string& key) const;
    [[nodiscard]] bool get_bool(const std::string& key, bool fallback) const;

    /// Rejects keys outside `allowed`, naming the offending line.
    void allow_keys(std::initializer_list<const char*> allowed) const;

    [[noreturn]] void fail(const std::string& message) const;
    [[noreturn]] void fail(const std::string& key, const std::string& message) const;

private:
    YAML::Node node_;
    std::string source_;
};

/// Block-style YAML writer with two-space indentation.
class Writer {
public:
    void open(const std::string& key);
    void close();
    void scalar(const std::string& key, const std::string& value);  // quoted string
    void raw(const std::string& key, const std::string& value);     // unquoted
    void number(const std::string& key, double value) { raw(key, format_number(value)); }
    void integer(const std::string& key, long value) { raw(key, std::to_string(value)); }
    void boolean(const std::string& key, bool value) { raw(key, value ? "true" : "false"); }
    void pair(const std::string& key, double lo, double hi);
    void list(const std::string& key, const std::vector<std::string>& quoted_items);
    using Fields = std::vector<std::pair<std::string, std::string>>;
    /// `key:` followed by one flow map per row (`key: []` when empty);
    /// values are written verbatim.
    void rows(const std::string& key, const std::vector<Fields>& rows);

    [[nodiscard]] const std::string& str() const noexcept { return out_; }

    [[nodiscard]] static std::string quote(const std::string& text);

private:
    [[nodiscard]] std::string indent() const { return std::string(2 * depth_, ' '); }
    std::string out_;
    std::size_t depth_ = 0;
};

}  // namespace sepm::detail

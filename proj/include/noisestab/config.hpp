#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace noisestab {

/// A malformed or invalid configuration. what() reads
/// "<source>:<line>: <field>: <message>"; line is 0 when the problem is a
/// missing field.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string source, int line, std::string field, const std::string& message);

  int line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  int line_;
  std::string field_;
};

/// Flat structured-text document:
///
///   # comment
///   key = value
///   [section]
///   key = a, b, c
///
/// Values are kept verbatim (trimmed, inline comments removed), so emit()
/// reproduces any document it parsed bit for bit after one round trip.
class ConfigDocument {
 public:
  struct Entry {
    std::string key;
    std::string value;
    int line = 0;
  };
  struct Section {
    std::string name;  // empty for the top level
    int line = 0;
    std::vector<Entry> entries;

    const Entry* find(std::string_view key) const;
  };

  static ConfigDocument parse(std::string_view text, std::string source = "<config>");
  static ConfigDocument load(const std::string& path);

  /// Canonical text: top-level entries, then sections in document order, each
  /// entry as "key = value".
  std::string emit() const;

  const std::string& source() const { return source_; }
  const Section& top() const { return sections_.front(); }
  const std::vector<Section>& sections() const { return sections_; }
  const Section* section(std::string_view name) const;

  /// Adds or replaces an entry; sections are created on demand. Used to
  /// write resolved defaults back into the document.
  void set(std::string_view section, std::string_view key, std::string value);

  bool operator==(const ConfigDocument& other) const;

 private:
  std::string source_;
  std::vector<Section> sections_{Section{}};
};

/// Typed access to one section with errors anchored to the entry's line.
class SectionReader {
 public:
  SectionReader(const ConfigDocument& doc, const ConfigDocument::Section* section, std::string name);

  bool present() const { return section_ != nullptr; }
  bool has(std::string_view key) const;
  int line_of(std::string_view key) const;

  std::string string(std::string_view key) const;
  std::optional<std::string> optional_string(std::string_view key) const;
  double real(std::string_view key) const;
  std::optional<double> optional_real(std::string_view key) const;
  std::uint64_t count(std::string_view key) const;
  std::optional<std::uint64_t> optional_count(std::string_view key) const;
  std::vector<double> reals(std::string_view key) const;
  std::vector<std::string> names(std::string_view key) const;

  /// Throws for any key not in `allowed`.
  void restrict_keys(std::initializer_list<std::string_view> allowed) const;

  [[noreturn]] void fail(std::string_view key, const std::string& message) const;

 private:
  const ConfigDocument::Entry& entry(std::string_view key) const;
  std::string field(std::string_view key) const;

  const ConfigDocument& doc_;
  const ConfigDocument::Section* section_;
  std::string name_;
};

/// Splits a comma-separated list, trimming each item. An empty string gives
/// an empty list.
std::vector<std::string> split_list(std::string_view value);

}  // namespace noisestab

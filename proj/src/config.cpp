#include "noisestab/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace noisestab {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool valid_name(std::string_view s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
  });
}

}  // namespace

ConfigError::ConfigError(std::string source, int line, std::string field, const std::string& message)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " + field + ": " + message),
      line_(line),
      field_(std::move(field)) {}

const ConfigDocument::Entry* ConfigDocument::Section::find(std::string_view key) const {
  for (const auto& e : entries) {
    if (e.key == key) return &e;
  }
  return nullptr;
}

ConfigDocument ConfigDocument::parse(std::string_view text, std::string source) {
  ConfigDocument doc;
  doc.source_ = std::move(source);
  Section* current = &doc.sections_.front();
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(doc.source_, line_no, "section", "missing ']'");
      const std::string_view name = trim(line.substr(1, line.size() - 2));
      if (!valid_name(name)) {
        throw ConfigError(doc.source_, line_no, "section", "invalid section name '" + std::string(name) + "'");
      }
      if (doc.section(name) != nullptr) {
        throw ConfigError(doc.source_, line_no, std::string(name), "duplicate section");
      }
      doc.sections_.push_back(Section{std::string(name), line_no, {}});
      current = &doc.sections_.back();
    } else {
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) {
        throw ConfigError(doc.source_, line_no, std::string(line), "expected 'key = value'");
      }
      const std::string_view key = trim(line.substr(0, eq));
      const std::string_view value = trim(line.substr(eq + 1));
      const std::string qualified =
          current->name.empty() ? std::string(key) : current->name + "." + std::string(key);
      if (!valid_name(key)) throw ConfigError(doc.source_, line_no, qualified, "invalid key");
      if (current->find(key) != nullptr) throw ConfigError(doc.source_, line_no, qualified, "duplicate key");
      current->entries.push_back(Entry{std::string(key), std::string(value), line_no});
    }
    if (end == text.size()) break;
  }
  return doc;
}

ConfigDocument ConfigDocument::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, 0, "file", "cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

std::string ConfigDocument::emit() const {
  std::string out;
  for (const auto& e : top().entries) out += e.key + " = " + e.value + "\n";
  for (std::size_t s = 1; s < sections_.size(); ++s) {
    if (!out.empty()) out += "\n";
    out += "[" + sections_[s].name + "]\n";
    for (const auto& e : sections_[s].entries) out += e.key + " = " + e.value + "\n";
  }
  return out;
}

const ConfigDocument::Section* ConfigDocument::section(std::string_view name) const {
  for (const auto& s : sections_) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

void ConfigDocument::set(std::string_view section, std::string_view key, std::string value) {
  auto it = std::find_if(sections_.begin(), sections_.end(), [&](const Section& s) { return s.name == section; });
  if (it == sections_.end()) {
    sections_.push_back(Section{std::string(section), 0, {}});
    it = sections_.end() - 1;
  }
  for (auto& e : it->entries) {
    if (e.key == key) {
      e.value = std::move(value);
      return;
    }
  }
  it->entries.push_back(Entry{std::string(key), std::move(value), 0});
}

bool ConfigDocument::operator==(const ConfigDocument& other) const { return emit() == other.emit(); }

std::vector<std::string> split_list(std::string_view value) {
  std::vector<std::string> out;
  if (trim(value).empty()) return out;
  std::size_t pos = 0;
  for (;;) {
    const std::size_t comma = value.find(',', pos);
    out.emplace_back(trim(value.substr(pos, comma == std::string_view::npos ? value.npos : comma - pos)));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

SectionReader::SectionReader(const ConfigDocument& doc, const ConfigDocument::Section* section, std::string name)
    : doc_(doc), section_(section), name_(std::move(name)) {}

std::string SectionReader::field(std::string_view key) const {
  return name_.empty() ? std::string(key) : name_ + "." + std::string(key);
}

bool SectionReader::has(std::string_view key) const { return section_ && section_->find(key); }

int SectionReader::line_of(std::string_view key) const {
  const auto* e = section_ ? section_->find(key) : nullptr;
  return e ? e->line : (section_ ? section_->line : 0);
}

void SectionReader::fail(std::string_view key, const std::string& message) const {
  throw ConfigError(doc_.source(), line_of(key), field(key), message);
}

const ConfigDocument::Entry& SectionReader::entry(std::string_view key) const {
  const auto* e = section_ ? section_->find(key) : nullptr;
  if (!e) fail(key, "required field missing");
  return *e;
}

std::string SectionReader::string(std::string_view key) const {
  const auto& e = entry(key);
  if (e.value.empty()) fail(key, "empty value");
  return e.value;
}

std::optional<std::string> SectionReader::optional_string(std::string_view key) const {
  if (!has(key)) return std::nullopt;
  return string(key);
}

namespace {

std::optional<double> to_real(std::string_view s) {
  if (s == "inf" || s == "+inf") return HUGE_VAL;
  if (s == "-inf") return -HUGE_VAL;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || std::isnan(v)) return std::nullopt;
  return v;
}

}  // namespace

double SectionReader::real(std::string_view key) const {
  const auto v = to_real(string(key));
  if (!v) fail(key, "expected a number, got '" + entry(key).value + "'");
  return *v;
}

std::optional<double> SectionReader::optional_real(std::string_view key) const {
  if (!has(key)) return std::nullopt;
  return real(key);
}

std::uint64_t SectionReader::count(std::string_view key) const {
  const std::string s = string(key);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    fail(key, "expected a nonnegative integer, got '" + s + "'");
  }
  return v;
}

std::optional<std::uint64_t> SectionReader::optional_count(std::string_view key) const {
  if (!has(key)) return std::nullopt;
  return count(key);
}

std::vector<double> SectionReader::reals(std::string_view key) const {
  std::vector<double> out;
  for (const auto& item : split_list(string(key))) {
    const auto v = to_real(item);
    if (!v) fail(key, "expected a list of numbers, bad item '" + item + "'");
    out.push_back(*v);
  }
  return out;
}

std::vector<std::string> SectionReader::names(std::string_view key) const {
  auto out = split_list(string(key));
  for (const auto& item : out) {
    if (!valid_name(item)) fail(key, "bad name '" + item + "'");
  }
  return out;
}

void SectionReader::restrict_keys(std::initializer_list<std::string_view> allowed) const {
  if (!section_) return;
  for (const auto& e : section_->entries) {
    if (std::find(allowed.begin(), allowed.end(), e.key) == allowed.end()) {
      throw ConfigError(doc_.source(), e.line, field(e.key), "unknown field");
    }
  }
}

}  // namespace noisestab

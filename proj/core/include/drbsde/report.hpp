#pragma once

// Check reports and deterministic text output.  Every real number is
// written as a decimal with 17 significant digits.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "drbsde/lattice.hpp"

namespace drbsde {

/// "%.17g", with inf, -inf and nan spelled out.
std::string format_number(double v);

struct Violation {
  Node node;
  double y = 0.0;
  double z = 0.0;
  double magnitude = 0.0;
  std::string what;
};

/// Outcome of one named check: the worst excess over the allowed bound and
/// the point where it occurred.
class CheckReport {
 public:
  CheckReport(std::string name, double tolerance) : name_(std::move(name)), tolerance_(tolerance) {}

  /// excess <= 0 means the bound holds at this point.
  void observe(double excess, const Violation& where);
  void observe(double excess, Node node) { observe(excess, Violation{node, 0.0, 0.0, excess, name_}); }
  void fail(const std::string& why);
  /// Folds another report of the same check into this one.
  void merge(const CheckReport& other);
  void set_note(std::string note) { note_ = std::move(note); }

  const std::string& name() const { return name_; }
  double tolerance() const { return tolerance_; }
  bool passed() const { return !failed_ && !(worst_ > tolerance_); }
  double worst() const { return worst_; }
  std::size_t checked() const { return checked_; }
  const std::optional<Violation>& violation() const { return violation_; }
  const std::string& note() const { return note_; }

  /// One-line human summary.
  std::string summary() const;

 private:
  std::string name_;
  double tolerance_;
  double worst_ = 0.0;
  std::size_t checked_ = 0;
  bool failed_ = false;
  std::optional<Violation> violation_;
  std::string note_;
};

bool all_passed(const std::vector<CheckReport>& reports);

/// Minimal ordered JSON document builder.
class Json {
 public:
  using Array = std::vector<Json>;
  using Object = std::vector<std::pair<std::string, Json>>;

  Json() : value_(nullptr) {}
  Json(std::nullptr_t) : value_(nullptr) {}
  Json(bool v) : value_(v) {}
  Json(double v) : value_(v) {}
  Json(int v) : value_(static_cast<std::int64_t>(v)) {}
  Json(std::int64_t v) : value_(v) {}
  Json(std::size_t v) : value_(static_cast<std::int64_t>(v)) {}
  Json(const char* v) : value_(std::string(v)) {}
  Json(std::string v) : value_(std::move(v)) {}
  Json(Array v) : value_(std::move(v)) {}
  Json(Object v) : value_(std::move(v)) {}

  static Json array() { return Json(Array{}); }
  static Json object() { return Json(Object{}); }

  /// Appends to an object (keys keep insertion order).
  Json& set(const std::string& key, Json value);
  /// Appends to an array.
  Json& push(Json value);

  std::string dump(int indent = 2) const;

 private:
  void dump_to(std::string& out, int indent, int depth) const;
  std::variant<std::nullptr_t, bool, double, std::int64_t, std::string, Array, Object> value_;
};

Json to_json(const CheckReport& report);
Json to_json(const std::vector<CheckReport>& reports);

/// Simple CSV table with a fixed header.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}
  void add_row(std::vector<std::string> row);
  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace drbsde

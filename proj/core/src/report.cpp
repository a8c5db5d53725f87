#include "drbsde/report.hpp"

#include <cmath>
#include <cstdio>

#include "drbsde/error.hpp"

namespace drbsde {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void CheckReport::observe(double excess, const Violation& where) {
  ++checked_;
  if (std::isnan(excess)) {
    failed_ = true;
    if (!violation_) violation_ = where;
    return;
  }
  if (excess > worst_) {
    worst_ = excess;
    violation_ = where;
    violation_->magnitude = excess;
  }
}

void CheckReport::fail(const std::string& why) {
  failed_ = true;
  if (note_.empty()) note_ = why;
}

void CheckReport::merge(const CheckReport& other) {
  checked_ += other.checked_;
  if (other.failed_) {
    failed_ = true;
    if (note_.empty()) note_ = other.note_;
    if (!violation_ && other.violation_) violation_ = other.violation_;
  }
  if (other.worst_ > worst_) {
    worst_ = other.worst_;
    violation_ = other.violation_;
  }
}

std::string CheckReport::summary() const {
  std::string s = (passed() ? "PASS " : "FAIL ") + name_ + " worst=" + format_number(worst_) +
                  " tol=" + format_number(tolerance_) + " checked=" + std::to_string(checked_);
  if (!passed() && violation_) {
    s += " at (" + std::to_string(violation_->node.step) + "," + std::to_string(violation_->node.level) + ")";
    if (!violation_->what.empty() && violation_->what != name_) s += " " + violation_->what;
  }
  if (!note_.empty()) s += " [" + note_ + "]";
  return s;
}

bool all_passed(const std::vector<CheckReport>& reports) {
  for (const auto& r : reports)
    if (!r.passed()) return false;
  return true;
}

// Json ---------------------------------------------------------------------

Json& Json::set(const std::string& key, Json value) {
  auto* obj = std::get_if<Object>(&value_);
  if (!obj) throw Error("Json::set on a non-object");
  obj->emplace_back(key, std::move(value));
  return *this;
}

Json& Json::push(Json value) {
  auto* arr = std::get_if<Array>(&value_);
  if (!arr) throw Error("Json::push on a non-array");
  arr->push_back(std::move(value));
  return *this;
}

namespace {

void escape(std::string& out, const std::string& s) {
  out += '"';
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  out += '"';
}

void newline(std::string& out, int indent, int depth) {
  if (indent <= 0) return;
  out += '\n';
  out.append(static_cast<std::size_t>(indent * depth), ' ');
}

}  // namespace

void Json::dump_to(std::string& out, int indent, int depth) const {
  if (std::holds_alternative<std::nullptr_t>(value_)) {
    out += "null";
  } else if (const bool* b = std::get_if<bool>(&value_)) {
    out += *b ? "true" : "false";
  } else if (const double* d = std::get_if<double>(&value_)) {
    // JSON has no infinities; write them as strings.
    if (std::isfinite(*d)) out += format_number(*d);
    else escape(out, format_number(*d));
  } else if (const std::int64_t* i = std::get_if<std::int64_t>(&value_)) {
    out += std::to_string(*i);
  } else if (const std::string* s = std::get_if<std::string>(&value_)) {
    escape(out, *s);
  } else if (const Array* a = std::get_if<Array>(&value_)) {
    out += '[';
    for (std::size_t k = 0; k < a->size(); ++k) {
      if (k) out += ',';
      newline(out, indent, depth + 1);
      (*a)[k].dump_to(out, indent, depth + 1);
    }
    if (!a->empty()) newline(out, indent, depth);
    out += ']';
  } else {
    const Object& o = std::get<Object>(value_);
    out += '{';
    for (std::size_t k = 0; k < o.size(); ++k) {
      if (k) out += ',';
      newline(out, indent, depth + 1);
      escape(out, o[k].first);
      out += indent > 0 ? ": " : ":";
      o[k].second.dump_to(out, indent, depth + 1);
    }
    if (!o.empty()) newline(out, indent, depth);
    out += '}';
  }
}

std::string Json::dump(int indent) const {
  std::string out;
  dump_to(out, indent, 0);
  return out;
}

Json to_json(const CheckReport& r) {
  Json j = Json::object();
  j.set("name", r.name()).set("passed", r.passed()).set("worst", r.worst()).set("tolerance", r.tolerance());
  j.set("checked", r.checked());
  if (r.violation() && !r.passed()) {
    const Violation& v = *r.violation();
    Json vj = Json::object();
    vj.set("step", v.node.step).set("level", v.node.level).set("y", v.y).set("z", v.z);
    vj.set("magnitude", v.magnitude).set("what", v.what);
    j.set("violation", vj);
  }
  if (!r.note().empty()) j.set("note", r.note());
  return j;
}

Json to_json(const std::vector<CheckReport>& reports) {
  Json a = Json::array();
  for (const auto& r : reports) a.push(to_json(r));
  return a;
}

// CSV ----------------------------------------------------------------------

void CsvTable::add_row(std::vector<std::string> row) {
  if (row.size() != header_.size()) throw Error("csv row width mismatch");
  rows_.push_back(std::move(row));
}

std::string CsvTable::str() const {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t k = 0; k < cells.size(); ++k) {
      if (k) out += ',';
      out += cells[k];
    }
    out += '\n';
  };
  line(header_);
  for (const auto& r : rows_) line(r);
  return out;
}

}  // namespace drbsde

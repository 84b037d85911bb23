#include "vcl/text_io.h"

#include <charconv>
#include <fstream>
#include <sstream>

#include "vcl/error.h"

namespace vcl {

std::string FormatDouble(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

std::vector<std::string_view> Split(std::string_view text, char sep) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    size_t pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(text.substr(start));
      break;
    }
    out.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::string_view Trim(std::string_view text) {
  const char* ws = " \t\r\n";
  size_t b = text.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  size_t e = text.find_last_not_of(ws);
  return text.substr(b, e - b + 1);
}

namespace {

[[noreturn]] void Fail(std::string_view field, std::string_view what,
                       const char* kind) {
  throw Error(ErrorCode::kParseError, std::string(what) + ": expected " +
                                          kind + ", got '" +
                                          std::string(field) + "'");
}

template <typename T>
T ParseNumber(std::string_view field, std::string_view what, const char* kind) {
  T value{};
  if (field.empty()) Fail(field, what, kind);
  const char* begin = field.data();
  if (*begin == '+') ++begin;
  auto res = std::from_chars(begin, field.data() + field.size(), value);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    Fail(field, what, kind);
  }
  return value;
}

}  // namespace

double ParseDouble(std::string_view field, std::string_view what) {
  return ParseNumber<double>(field, what, "a number");
}

int64_t ParseInt(std::string_view field, std::string_view what) {
  return ParseNumber<int64_t>(field, what, "an integer");
}

uint64_t ParseUint(std::string_view field, std::string_view what) {
  return ParseNumber<uint64_t>(field, what, "a non-negative integer");
}

bool ParseBool(std::string_view field, std::string_view what) {
  if (field == "1" || field == "true" || field == "on" || field == "yes") {
    return true;
  }
  if (field == "0" || field == "false" || field == "off" || field == "no") {
    return false;
  }
  Fail(field, what, "a boolean");
}

std::vector<double> ParseDoubleList(std::string_view field,
                                    std::string_view what) {
  std::vector<double> out;
  if (field.empty()) return out;
  for (auto part : Split(field, ',')) out.push_back(ParseDouble(part, what));
  return out;
}

std::vector<int> ParseIntList(std::string_view field, std::string_view what) {
  std::vector<int> out;
  if (field.empty()) return out;
  for (auto part : Split(field, ',')) {
    out.push_back(static_cast<int>(ParseInt(part, what)));
  }
  return out;
}

std::string JoinDoubles(const std::vector<double>& values, char sep) {
  std::string out;
  for (size_t i = 0; i < values.size(); ++i) {
    if (i) out.push_back(sep);
    out += FormatDouble(values[i]);
  }
  return out;
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteFile(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path);
  out << contents;
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path);
}

}  // namespace vcl

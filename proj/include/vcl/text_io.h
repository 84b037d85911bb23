#ifndef VCL_TEXT_IO_H_
#define VCL_TEXT_IO_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace vcl {

// Shortest decimal form that parses back to the identical double.
std::string FormatDouble(double value);

std::vector<std::string_view> Split(std::string_view text, char sep);
std::string_view Trim(std::string_view text);

// Strict parsers: the whole field must be consumed. Throw
// Error(kParseError) naming `what` on failure.
double ParseDouble(std::string_view field, std::string_view what);
int64_t ParseInt(std::string_view field, std::string_view what);
uint64_t ParseUint(std::string_view field, std::string_view what);
bool ParseBool(std::string_view field, std::string_view what);

std::vector<double> ParseDoubleList(std::string_view field, std::string_view what);
std::vector<int> ParseIntList(std::string_view field, std::string_view what);

std::string JoinDoubles(const std::vector<double>& values, char sep);

// Whole-file helpers; throw Error(kIoError).
std::string ReadFile(const std::string& path);
void WriteFile(const std::string& path, const std::string& contents);

}  // namespace vcl

#endif  // VCL_TEXT_IO_H_

#pragma once

#include "lgc/core.hpp"

#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lgc {

/// Malformed field or report file.
class FormatError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using MetaList = std::vector<std::pair<std::string, std::string>>;

/// Header of a field file.
///
///   lgc-field 1
///   kind section|multiplier
///   n <n>
///   components <c>        (sections only)
///   grid <W> <H>
///   meta <key> <value>    (any number)
///   records <count>
///   <id> <i> <j> <row-major entries of each component, %.17g>
struct FieldHeader {
  std::string kind;
  int n = 0;
  int components = 0;
  GridLayout grid;
  MetaList meta;
  int records = 0;
};

void write_section(std::ostream& os, const GridLayout& grid, const Section& y, const MetaList& meta = {});
Section read_section(std::istream& is, FieldHeader* header = nullptr);

void write_multiplier(std::ostream& os, const GridLayout& grid, const Multiplier& lambda,
                      const MetaList& meta = {});
Multiplier read_multiplier(std::istream& is, FieldHeader* header = nullptr);

/// Key-value records followed by CSV tables, written in insertion order.
class Report {
 public:
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);
  void set(const std::string& key, long long value);
  void set(const std::string& key, int value) { set(key, static_cast<long long>(value)); }
  void set(const std::string& key, bool value);

  void add_table(std::string name, std::vector<std::string> columns,
                 std::vector<std::vector<std::string>> rows);

  void write(std::ostream& os) const;

  /// Value of a key, or empty when absent.
  std::string get(const std::string& key) const;

 private:
  struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
  };
  MetaList entries_;
  std::vector<Table> tables_;
};

/// %.17g rendering used by every file writer.
std::string format_real(double x);

}  // namespace lgc

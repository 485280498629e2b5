#ifndef INNERATT_IO_METRICS_HPP_
#define INNERATT_IO_METRICS_HPP_

#include <iosfwd>
#include <string>
#include <vector>

namespace inneratt::io {

// A numeric CSV with a header row; "nan" cells read as NaN.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  // Index of a column, or throws std::out_of_range.
  std::size_t column(const std::string& name) const;
  std::vector<double> values(const std::string& name) const;
};

CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

// SVG 1.1 line chart of every entropy_h* column against episode, one
// polyline per head, with a dashed ln(N-1) reference when `ceiling` > 0.
void write_entropy_svg(std::ostream& out, const CsvTable& metrics, double ceiling);

}  // namespace inneratt::io

#endif  // INNERATT_IO_METRICS_HPP_

#include "inneratt/io/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "inneratt/nn/errors.hpp"

namespace inneratt::io {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_cell(const std::string& cell, std::size_t line_no) {
  if (cell == "nan" || cell == "-nan" || cell.empty()) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != cell.size()) {
    throw ContractError("CSV line " + std::to_string(line_no) + ": '" + cell +
                        "' is not a number");
  }
  return v;
}

}  // namespace

std::size_t CsvTable::column(const std::string& name) const {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw std::out_of_range("no CSV column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

std::vector<double> CsvTable::values(const std::string& name) const {
  const std::size_t c = column(name);
  std::vector<double> out;
  for (const auto& row : rows) out.push_back(row[c]);
  return out;
}

CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw ContractError("CSV is empty");
  t.header = split(line);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != t.header.size()) {
      throw ContractError("CSV line " + std::to_string(line_no) + " has " +
                          std::to_string(cells.size()) + " cells, header has " +
                          std::to_string(t.header.size()));
    }
    std::vector<double> row;
    for (const auto& c : cells) row.push_back(parse_cell(c, line_no));
    t.rows.push_back(std::move(row));
  }
  return t;
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ContractError("cannot open " + path);
  return read_csv(in);
}

void write_entropy_svg(std::ostream& out, const CsvTable& metrics, double ceiling) {
  std::vector<std::string> heads;
  for (const auto& h : metrics.header) {
    if (h.rfind("entropy_h", 0) == 0) heads.push_back(h);
  }
  if (heads.empty()) throw ContractError("metrics have no entropy_h* columns");
  const std::vector<double> x = metrics.values("episode");

  const double width = 640, height = 400, left = 60, right = 20, top = 30, bottom = 50;
  double x_lo = 0.0, x_hi = 1.0, y_lo = 0.0, y_hi = std::max(ceiling, 0.0);
  if (!x.empty()) {
    x_lo = *std::min_element(x.begin(), x.end());
    x_hi = *std::max_element(x.begin(), x.end());
  }
  for (const auto& h : heads) {
    for (double v : metrics.values(h)) {
      if (std::isfinite(v)) y_hi = std::max(y_hi, v);
    }
  }
  if (x_hi <= x_lo) x_hi = x_lo + 1.0;
  if (y_hi <= y_lo) y_hi = y_lo + 1.0;
  y_hi *= 1.05;
  auto px = [&](double v) { return left + (v - x_lo) / (x_hi - x_lo) * (width - left - right); };
  auto py = [&](double v) {
    return height - bottom - (v - y_lo) / (y_hi - y_lo) * (height - top - bottom);
  };

  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                 "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << width / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">"
      << "Attention entropy per head</text>\n"
      << "<line x1=\"" << left << "\" y1=\"" << py(y_lo) << "\" x2=\"" << width - right
      << "\" y2=\"" << py(y_lo) << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << left << "\" y1=\"" << py(y_lo) << "\" x2=\"" << left << "\" y2=\""
      << top << "\" stroke=\"black\"/>\n"
      << "<text x=\"" << width / 2 << "\" y=\"" << height - 12
      << "\" text-anchor=\"middle\" font-size=\"12\">episode</text>\n"
      << "<text x=\"" << left - 8 << "\" y=\"" << py(y_lo) << "\" text-anchor=\"end\" "
      << "font-size=\"10\">" << y_lo << "</text>\n"
      << "<text x=\"" << left - 8 << "\" y=\"" << py(y_hi) + 10 << "\" text-anchor=\"end\" "
      << "font-size=\"10\">" << y_hi << "</text>\n"
      << "<text x=\"" << left << "\" y=\"" << py(y_lo) + 16 << "\" font-size=\"10\">" << x_lo
      << "</text>\n"
      << "<text x=\"" << width - right << "\" y=\"" << py(y_lo) + 16
      << "\" text-anchor=\"end\" font-size=\"10\">" << x_hi << "</text>\n";
  if (ceiling > 0.0) {
    out << "<line x1=\"" << left << "\" y1=\"" << py(ceiling) << "\" x2=\"" << width - right
        << "\" y2=\"" << py(ceiling) << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
  }
  for (std::size_t k = 0; k < heads.size(); ++k) {
    const std::vector<double> y = metrics.values(heads[k]);
    out << "<polyline fill=\"none\" stroke=\"" << colors[k % 8]
        << "\" stroke-width=\"1.5\" points=\"";
    bool first = true;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (!std::isfinite(y[i]) || !std::isfinite(x[i])) continue;
      out << (first ? "" : " ") << px(x[i]) << ',' << py(y[i]);
      first = false;
    }
    out << "\"/>\n";
    out << "<text x=\"" << width - right - 80 << "\" y=\"" << top + 14 * (k + 1)
        << "\" font-size=\"11\" fill=\"" << colors[k % 8] << "\">" << heads[k] << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace inneratt::io

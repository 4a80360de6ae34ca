#include "so3me/plots.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "so3me/config.hpp"
#include "so3me/errors.hpp"

namespace so3me {

namespace {

struct Series {
  const char* label;
  const char* color;
  std::vector<double> y;
};

struct Columns {
  std::vector<double> t, phi;
  std::array<std::vector<double>, 3> omega;
};

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

Columns read_trajectory(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read trajectory " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty trajectory " + path.string());
  const auto header = split_csv(line);
  auto column = [&](const char* name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw IoError(path.string() + ": missing column " + std::string(name));
    }
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t ct = column("time_s"), cp = column("phi_rad");
  const std::array<std::size_t, 3> cw = {column("omega_err_x"), column("omega_err_y"),
                                         column("omega_err_z")};
  Columns out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": wrong column count");
    }
    try {
      out.t.push_back(std::stod(cells[ct]));
      out.phi.push_back(std::stod(cells[cp]));
      for (int k = 0; k < 3; ++k) out.omega[k].push_back(std::stod(cells[cw[k]]));
    } catch (const std::exception&) {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": bad number");
    }
  }
  if (out.t.empty()) throw IoError("trajectory has no rows: " + path.string());
  return out;
}

void write_chart(const std::filesystem::path& file, const std::string& title,
                 const std::string& y_label, const std::vector<double>& x,
                 const std::vector<Series>& series) {
  constexpr double kWidth = 720, kHeight = 420;
  constexpr double kLeft = 80, kRight = 20, kTop = 40, kBottom = 50;
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;

  const auto [xmin_it, xmax_it] = std::minmax_element(x.begin(), x.end());
  double x0 = *xmin_it, x1 = *xmax_it;
  double y0 = std::numeric_limits<double>::infinity(), y1 = -y0;
  for (const Series& s : series) {
    const auto [lo, hi] = std::minmax_element(s.y.begin(), s.y.end());
    y0 = std::min(y0, *lo);
    y1 = std::max(y1, *hi);
  }
  if (x1 == x0) x1 = x0 + 1;
  const double pad = y1 > y0 ? 0.05 * (y1 - y0) : std::max(1e-12, 0.05 * std::abs(y0));
  y0 -= pad;
  y1 += pad;

  auto sx = [&](double v) { return kLeft + (v - x0) / (x1 - x0) * pw; };
  auto sy = [&](double v) { return kTop + (y1 - v) / (y1 - y0) * ph; };

  std::ofstream out(file);
  if (!out) throw IoError("cannot write " + file.string());
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" data-x-min=\""
      << format_real(x0) << "\" data-x-max=\"" << format_real(x1) << "\" data-y-min=\""
      << format_real(y0) << "\" data-y-max=\"" << format_real(y1) << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
      << title << "</text>\n";
  out << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";

  for (int k = 0; k <= 5; ++k) {
    const double xv = x0 + (x1 - x0) * k / 5, yv = y0 + (y1 - y0) * k / 5;
    out << "<text x=\"" << sx(xv) << "\" y=\"" << kTop + ph + 18
        << "\" text-anchor=\"middle\" font-size=\"11\">" << xv << "</text>\n";
    out << "<text x=\"" << kLeft - 6 << "\" y=\"" << sy(yv) + 4
        << "\" text-anchor=\"end\" font-size=\"11\">" << yv << "</text>\n";
    out << "<line x1=\"" << kLeft << "\" x2=\"" << kLeft + pw << "\" y1=\"" << sy(yv)
        << "\" y2=\"" << sy(yv) << "\" stroke=\"#ddd\"/>\n";
  }
  out << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 10
      << "\" text-anchor=\"middle\" font-size=\"13\">t (s)</text>\n";
  out << "<text x=\"18\" y=\"" << kTop + ph / 2 << "\" text-anchor=\"middle\" font-size=\"13\" "
      << "transform=\"rotate(-90 18 " << kTop + ph / 2 << ")\">" << y_label << "</text>\n";

  int legend = 0;
  for (const Series& s : series) {
    out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.2\" points=\"";
    for (std::size_t i = 0; i < x.size(); ++i) {
      out << sx(x[i]) << ',' << sy(s.y[i]) << (i + 1 < x.size() ? " " : "");
    }
    out << "\"/>\n";
    if (series.size() > 1) {
      const double ly = kTop + 16 + 16 * legend++;
      out << "<text x=\"" << kLeft + pw - 10 << "\" y=\"" << ly
          << "\" text-anchor=\"end\" font-size=\"12\" fill=\"" << s.color << "\">" << s.label
          << "</text>\n";
    }
  }
  out << "</svg>\n";
  if (!out) throw IoError("write failed for " + file.string());
}

}  // namespace

PlotFiles emit_plots(const std::filesystem::path& trajectory, const std::filesystem::path& out_dir) {
  const Columns c = read_trajectory(trajectory);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  PlotFiles files{out_dir / "phi.svg", out_dir / "omega.svg"};
  write_chart(files.phi, "Principal angle of the attitude estimation error", "phi (rad)", c.t,
              {{"phi", "#1f77b4", c.phi}});
  write_chart(files.omega, "Angular velocity estimation error", "omega (rad/s)", c.t,
              {{"omega_x", "#d62728", c.omega[0]},
               {"omega_y", "#2ca02c", c.omega[1]},
               {"omega_z", "#1f77b4", c.omega[2]}});
  return files;
}

}  // namespace so3me

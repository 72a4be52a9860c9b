#include "pvmincq/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

namespace pvmincq {

void LabeledSample::validate() const {
  if (labels.empty()) throw std::invalid_argument("labeled sample is empty");
  if (static_cast<std::size_t>(points.rows()) != labels.size())
    throw std::invalid_argument("labeled sample: point and label counts differ");
  for (int y : labels)
    if (y != 1 && y != -1) throw std::invalid_argument("label must be -1 or +1");
}

LabeledSample LabeledSample::subset(const std::vector<std::size_t>& indices) const {
  LabeledSample out;
  out.points.resize(static_cast<Eigen::Index>(indices.size()), points.cols());
  out.labels.reserve(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    out.points.row(static_cast<Eigen::Index>(r)) = points.row(static_cast<Eigen::Index>(indices[r]));
    out.labels.push_back(labels.at(indices[r]));
  }
  return out;
}

Eigen::RowVector2d moons_rotation_center() {
  // Upper arc centroid (0, 2/pi), lower arc centroid (1, 0.5 - 2/pi).
  return {0.5, 0.25};
}

LabeledSample generate_moons(const MoonsParams& params) {
  if (params.n_per_class == 0) throw std::invalid_argument("n_per_class must be positive");
  if (!(params.noise_std >= 0.0)) throw std::invalid_argument("noise_std must be nonnegative");

  const auto n = static_cast<Eigen::Index>(params.n_per_class);
  std::mt19937_64 rng(params.seed);
  std::uniform_real_distribution<double> arc(0.0, std::numbers::pi);
  std::normal_distribution<double> noise(0.0, 1.0);

  LabeledSample sample;
  sample.points.resize(2 * n, 2);
  sample.labels.resize(static_cast<std::size_t>(2 * n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = arc(rng);
    sample.points.row(i) << std::cos(t), std::sin(t);
    sample.labels[static_cast<std::size_t>(i)] = 1;
  }
  for (Eigen::Index i = n; i < 2 * n; ++i) {
    const double t = arc(rng);
    sample.points.row(i) << 1.0 - std::cos(t), 0.5 - std::sin(t);
    sample.labels[static_cast<std::size_t>(i)] = -1;
  }
  if (params.noise_std > 0.0) {
    for (Eigen::Index i = 0; i < 2 * n; ++i)
      for (Eigen::Index k = 0; k < 2; ++k) sample.points(i, k) += params.noise_std * noise(rng);
  }

  // Reducing first makes multiples of 360 degrees an exact identity.
  const double deg = std::fmod(params.rotation_deg, 360.0);
  if (deg != 0.0) {
    const double a = deg * std::numbers::pi / 180.0;
    const double c = std::cos(a), s = std::sin(a);
    const Eigen::RowVector2d center = moons_rotation_center();
    for (Eigen::Index i = 0; i < 2 * n; ++i) {
      const double x = sample.points(i, 0) - center(0);
      const double y = sample.points(i, 1) - center(1);
      sample.points(i, 0) = center(0) + c * x - s * y;
      sample.points(i, 1) = center(1) + s * x + c * y;
    }
  }
  return sample;
}

namespace {

struct CsvTable {
  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> line_numbers;
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_field(std::string_view field, std::size_t line) {
  field = trim(field);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size())
    throw parse_error("non-numeric field '" + std::string(field) + "' (row " + std::to_string(line) + ")");
  return value;
}

CsvTable read_table(const std::filesystem::path& path, bool has_header) {
  std::ifstream in(path);
  if (!in) throw parse_error("cannot open " + path.string());

  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (has_header && line_no == 1) continue;
    const std::string_view view = trim(line);
    if (view.empty()) continue;

    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = view.find(',', start);
      row.push_back(parse_field(view.substr(start, comma - start), line_no));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (width == 0) width = row.size();
    if (row.size() != width)
      throw parse_error("ragged row: expected " + std::to_string(width) + " fields, got " +
                        std::to_string(row.size()) + " (row " + std::to_string(line_no) + ")");
    table.rows.push_back(std::move(row));
    table.line_numbers.push_back(line_no);
  }
  if (table.rows.empty()) throw parse_error("empty dataset");
  return table;
}

}  // namespace

LabeledSample read_labeled_csv(const std::filesystem::path& path, bool has_header) {
  const CsvTable table = read_table(path, has_header);
  const std::size_t width = table.rows.front().size();
  if (width < 2) throw parse_error("labeled rows need at least one coordinate and a label (row " +
                                   std::to_string(table.line_numbers.front()) + ")");

  LabeledSample sample;
  sample.points.resize(static_cast<Eigen::Index>(table.rows.size()), static_cast<Eigen::Index>(width - 1));
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    for (std::size_t k = 0; k + 1 < width; ++k)
      sample.points(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = row[k];
    const double label = row.back();
    if (label != 1.0 && label != -1.0)
      throw parse_error("label must be -1 or +1 (row " + std::to_string(table.line_numbers[r]) + ")");
    sample.labels.push_back(label > 0 ? 1 : -1);
  }
  return sample;
}

UnlabeledSample read_unlabeled_csv(const std::filesystem::path& path, bool has_header,
                                   bool drop_last_column) {
  const CsvTable table = read_table(path, has_header);
  const std::size_t width = table.rows.front().size() - (drop_last_column ? 1 : 0);
  if (width == 0) throw parse_error("rows have no coordinates");

  UnlabeledSample sample;
  sample.points.resize(static_cast<Eigen::Index>(table.rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t r = 0; r < table.rows.size(); ++r)
    for (std::size_t k = 0; k < width; ++k)
      sample.points(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = table.rows[r][k];
  return sample;
}

std::string format_double(double value) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

namespace {

void write_points(std::ostream& out, const PointMatrix& points, const std::vector<int>* labels,
                  bool with_header) {
  if (with_header) {
    for (Eigen::Index k = 0; k < points.cols(); ++k) out << (k ? "," : "") << 'x' << (k + 1);
    if (labels) out << ",label";
    out << '\n';
  }
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (Eigen::Index k = 0; k < points.cols(); ++k) out << (k ? "," : "") << format_double(points(i, k));
    if (labels) out << ',' << (*labels)[static_cast<std::size_t>(i)];
    out << '\n';
  }
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace

void write_csv(const LabeledSample& sample, const std::filesystem::path& path, bool with_header) {
  sample.validate();
  auto out = open_for_write(path);
  write_points(out, sample.points, &sample.labels, with_header);
}

void write_csv(const UnlabeledSample& sample, const std::filesystem::path& path, bool with_header) {
  auto out = open_for_write(path);
  write_points(out, sample.points, nullptr, with_header);
}

}  // namespace pvmincq

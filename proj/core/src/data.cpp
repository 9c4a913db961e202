#include "vdp/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <queue>
#include <sstream>

#include "json.hpp"
#include "vdp/error.hpp"
#include "vdp/stats.hpp"

namespace vdp {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    cells.push_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return cells;
}

bool parse_number(std::string_view cell, double& out) {
  if (cell.empty()) return false;
  if (cell.front() == '+') cell.remove_prefix(1);
  const auto* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), end, out);
  return ec == std::errc() && ptr == end;
}

struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

RawTable read_table(const std::filesystem::path& path, HeaderMode mode) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, 0, "cannot open " + path.string());

  RawTable table;
  std::string line;
  int line_no = 0;
  std::size_t width = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_commas(line);

    if (first) {
      first = false;
      bool numeric = true;
      double dummy = 0.0;
      for (auto c : cells) numeric = numeric && parse_number(c, dummy);
      const bool is_header =
          mode == HeaderMode::Present || (mode == HeaderMode::Auto && !numeric);
      width = cells.size();
      if (is_header) {
        for (auto c : cells) table.header.emplace_back(c);
        continue;
      }
    }

    if (cells.size() != width) {
      std::ostringstream os;
      os << path.string() << ":" << line_no << ": expected " << width
         << " fields, found " << cells.size();
      throw ParseError(line_no, 0, os.str());
    }
    std::vector<double> row(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (!parse_number(cells[c], row[c]) || !std::isfinite(row[c])) {
        std::ostringstream os;
        os << path.string() << ":" << line_no << ":" << c + 1
           << ": not a finite number: '" << cells[c] << "'";
        throw ParseError(line_no, static_cast<int>(c + 1), os.str());
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

Eigen::MatrixXd to_matrix(const RawTable& t) {
  const auto rows = static_cast<Eigen::Index>(t.rows.size());
  const auto cols = rows ? static_cast<Eigen::Index>(t.rows.front().size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = t.rows[r][c];
  }
  return m;
}

}  // namespace

void DataMatrix::validate() const {
  if (values.size() == 0) throw ContractError("data matrix is empty");
  if (!values.allFinite()) throw ContractError("data matrix has non-finite entries");
  if (spatial_shape &&
      spatial_shape->first * spatial_shape->second != values.rows()) {
    throw ContractError("spatial shape does not match the number of locations");
  }
}

DataMatrix load_csv(const std::filesystem::path& path, const CsvLayout& layout) {
  RawTable t = read_table(path, layout.header);
  DataMatrix d;
  d.values = to_matrix(t);
  if (layout.orientation == Orientation::RowsAreTime) {
    d.values.transposeInPlace();
  }
  d.names = std::move(t.header);
  if (d.values.size() == 0) throw ParseError(0, 0, path.string() + ": no data rows");
  return d;
}

Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path,
                                std::vector<std::string>* header) {
  RawTable t = read_table(path, HeaderMode::Auto);
  if (header) *header = std::move(t.header);
  return to_matrix(t);
}

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw NumericError("cannot format number");
  return std::string(buf, ptr);
}

void save_csv(const std::filesystem::path& path, const Eigen::MatrixXd& values,
              const std::vector<std::string>& header) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  if (!header.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      out << (c ? "," : "") << header[c];
    }
    out << '\n';
  }
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      out << (c ? "," : "") << format_double(values(r, c));
    }
    out << '\n';
  }
}

SvdComponents svd_components(const DataMatrix& data, int m) {
  data.validate();
  const int p = data.locations();
  const int t = data.samples();
  if (m < 1 || m > std::min(p, t)) {
    std::ostringstream os;
    os << "requested " << m << " components but min(P, T) = " << std::min(p, t);
    throw ContractError(os.str());
  }

  Eigen::MatrixXd centered = data.values;
  centered.colwise() -= centered.rowwise().mean();

  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered,
                                     Eigen::ComputeThinU | Eigen::ComputeThinV);
  SvdComponents out;
  out.singular_values = svd.singularValues().head(m);
  out.spatial = svd.matrixU().leftCols(m).transpose();
  out.temporal = (svd.matrixV().leftCols(m) * out.singular_values.asDiagonal())
                     .transpose();
  out.mean_removed = true;

  for (int i = 0; i < m; ++i) {
    Eigen::Index arg = 0;
    out.spatial.row(i).cwiseAbs().maxCoeff(&arg);
    if (out.spatial(i, arg) < 0.0) {
      out.spatial.row(i) *= -1.0;
      out.temporal.row(i) *= -1.0;
    }
  }
  return out;
}

SvdComponents normalize_components(SvdComponents comps) {
  if (comps.components() == 0) throw ContractError("no components to normalize");
  double mean_std = 0.0;
  for (int i = 0; i < comps.components(); ++i) {
    mean_std += stats::population_std(comps.temporal.row(i).transpose());
  }
  mean_std /= comps.components();
  if (!(mean_std > 0.0)) {
    throw NumericError("mean of component standard deviations is zero");
  }
  comps.temporal /= mean_std;
  comps.normalization_scale *= mean_std;
  return comps;
}

void save_components(const std::filesystem::path& dir, const SvdComponents& comps) {
  std::filesystem::create_directories(dir);
  save_csv(dir / "temporal.csv", comps.temporal);
  save_csv(dir / "spatial.csv", comps.spatial);
  save_csv(dir / "sigma.csv", comps.singular_values);
  nlohmann::ordered_json meta{
      {"schema_version", 1},
      {"components", comps.components()},
      {"samples", comps.samples()},
      {"locations", comps.locations()},
      {"mean_removed", comps.mean_removed},
      {"normalization_scale", comps.normalization_scale},
  };
  std::ofstream(dir / "meta.json", std::ios::binary) << meta.dump(2) << '\n';
}

SvdComponents load_components(const std::filesystem::path& dir) {
  SvdComponents c;
  c.temporal = read_matrix_csv(dir / "temporal.csv");
  c.spatial = read_matrix_csv(dir / "spatial.csv");
  const Eigen::MatrixXd sigma = read_matrix_csv(dir / "sigma.csv");
  c.singular_values = Eigen::Map<const Eigen::VectorXd>(sigma.data(), sigma.size());

  std::ifstream in(dir / "meta.json");
  if (!in) throw ParseError(0, 0, "missing " + (dir / "meta.json").string());
  const auto meta = nlohmann::json::parse(in);
  c.mean_removed = meta.at("mean_removed").get<bool>();
  c.normalization_scale = meta.at("normalization_scale").get<double>();

  if (c.spatial.rows() != c.temporal.rows() ||
      c.singular_values.size() != c.temporal.rows()) {
    throw ContractError("component files disagree on the number of components");
  }
  return c;
}

namespace {

// Strict weak order: true if a ranks ahead of b. `sign` is +1 for the
// excitatory list and -1 for the inhibitory one.
struct EdgeRank {
  double sign;
  bool operator()(const Edge& a, const Edge& b) const {
    const double wa = sign * a.weight;
    const double wb = sign * b.weight;
    if (wa != wb) return wa > wb;
    if (a.target != b.target) return a.target < b.target;
    return a.source < b.source;
  }
};

class TopK {
 public:
  TopK(int k, double sign) : k_(static_cast<std::size_t>(k)), rank_{sign}, heap_(rank_) {}

  void offer(const Edge& e) {
    if (!(rank_.sign * e.weight > 0.0)) return;
    if (heap_.size() < k_) {
      heap_.push(e);
    } else if (rank_(e, heap_.top())) {
      heap_.pop();
      heap_.push(e);
    }
  }

  std::vector<Edge> take() {
    std::vector<Edge> out;
    while (!heap_.empty()) {
      out.push_back(heap_.top());
      heap_.pop();
    }
    std::sort(out.begin(), out.end(), rank_);
    return out;
  }

 private:
  std::size_t k_;
  EdgeRank rank_;
  // Top of the heap is the lowest-ranked retained edge.
  std::priority_queue<Edge, std::vector<Edge>, EdgeRank> heap_;
};

}  // namespace

EdgeList connectivity_projection(const Eigen::MatrixXd& spatial,
                                 const Eigen::VectorXd& singular_values,
                                 const std::vector<Eigen::MatrixXd>& couplings,
                                 int top_k) {
  const auto m = spatial.rows();
  if (top_k < 1) throw ContractError("top_k must be at least 1");
  if (singular_values.size() != m) {
    throw ContractError("singular values do not match the spatial components");
  }
  if ((singular_values.array() < 0.0).any()) {
    throw ContractError("singular values must be nonnegative");
  }
  if (couplings.empty()) throw ContractError("no coupling matrices given");
  Eigen::MatrixXd summed = Eigen::MatrixXd::Zero(m, m);
  for (const auto& w : couplings) {
    if (w.rows() != m || w.cols() != m) {
      std::ostringstream os;
      os << "coupling matrix is " << w.rows() << "x" << w.cols() << ", expected "
         << m << "x" << m;
      throw ContractError(os.str());
    }
    summed += w;
  }

  const Eigen::VectorXd root = singular_values.cwiseSqrt();
  const Eigen::MatrixXd mixed = root.asDiagonal() * summed * root.asDiagonal();

  TopK positive(top_k, 1.0);
  TopK negative(top_k, -1.0);
  const auto p_count = spatial.cols();
  Eigen::RowVectorXd row(p_count);
  for (Eigen::Index p = 0; p < p_count; ++p) {
    row.noalias() = (spatial.col(p).transpose() * mixed) * spatial;
    for (Eigen::Index q = 0; q < p_count; ++q) {
      const Edge e{static_cast<int>(q), static_cast<int>(p), row(q)};
      positive.offer(e);
      negative.offer(e);
    }
  }
  return {positive.take(), negative.take()};
}

void save_edges(const std::filesystem::path& path, const EdgeList& edges) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "src,dst,weight,polarity\n";
  for (const auto& e : edges.excitatory) {
    out << e.source << ',' << e.target << ',' << format_double(e.weight)
        << ",excitatory\n";
  }
  for (const auto& e : edges.inhibitory) {
    out << e.source << ',' << e.target << ',' << format_double(e.weight)
        << ",inhibitory\n";
  }
}

SegmentSplit split_segments(int samples, int train_len, int test_len,
                            int n_segments, const std::vector<int>& offsets) {
  if (train_len < 1 || test_len < 1 || n_segments < 1) {
    throw ContractError("segment lengths and count must be positive");
  }
  const int span = train_len + test_len;
  std::vector<int> starts;
  if (offsets.empty()) {
    const long required = static_cast<long>(n_segments) * span;
    if (required > samples) {
      std::ostringstream os;
      os << "segmentation needs " << required << " samples (" << n_segments
         << " x (" << train_len << " + " << test_len << ")), only " << samples
         << " available";
      throw ContractError(os.str());
    }
    for (int s = 0; s < n_segments; ++s) starts.push_back(s * span);
  } else {
    if (static_cast<int>(offsets.size()) != n_segments) {
      throw ContractError("number of offsets must equal the segment count");
    }
    for (std::size_t s = 0; s < offsets.size(); ++s) {
      if (offsets[s] < 0) throw ContractError("segment offsets must be nonnegative");
      if (s > 0 && offsets[s] < offsets[s - 1] + span) {
        std::ostringstream os;
        os << "segment at offset " << offsets[s] << " overlaps the segment at offset "
           << offsets[s - 1] << " (each spans " << span << " samples)";
        throw ContractError(os.str());
      }
      if (offsets[s] + span > samples) {
        std::ostringstream os;
        os << "segment at offset " << offsets[s] << " needs " << offsets[s] + span
           << " samples, only " << samples << " available";
        throw ContractError(os.str());
      }
    }
    starts = offsets;
  }

  SegmentSplit split;
  for (int start : starts) {
    split.segments.push_back(
        {{start, start + train_len}, {start + train_len, start + span}, start});
  }
  return split;
}

}  // namespace vdp

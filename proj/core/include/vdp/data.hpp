#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace vdp {

/// P x T data: one row per spatial location (pixel or cell), one column per
/// time sample.
struct DataMatrix {
  Eigen::MatrixXd values;
  std::optional<std::pair<int, int>> spatial_shape;  // rows * cols == P
  std::optional<double> sample_rate_hz;
  std::vector<std::string> names;  // header names, if any

  int locations() const noexcept { return static_cast<int>(values.rows()); }
  int samples() const noexcept { return static_cast<int>(values.cols()); }
  void validate() const;
};

enum class HeaderMode { Auto, Present, Absent };
enum class Orientation { RowsAreSpace, RowsAreTime };

struct CsvLayout {
  Orientation orientation = Orientation::RowsAreSpace;
  HeaderMode header = HeaderMode::Auto;
};

/// Comma-separated, '.' decimal point, blank lines ignored. With
/// HeaderMode::Auto the first nonblank line is a header if any of its cells
/// fails to parse as a number. Throws ParseError with 1-based file line and
/// column for ragged rows or non-numeric cells.
DataMatrix load_csv(const std::filesystem::path& path, const CsvLayout& layout = {});

/// Reads a plain numeric matrix exactly as laid out in the file.
Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path,
                                std::vector<std::string>* header = nullptr);

/// Writes the matrix row by row with shortest round-trip number formatting.
void save_csv(const std::filesystem::path& path, const Eigen::MatrixXd& values,
              const std::vector<std::string>& header = {});

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);

/// Truncated SVD factors of the mean-removed data.
struct SvdComponents {
  Eigen::MatrixXd temporal;         // m x T, row i = sigma_i * v_i (then scaled)
  Eigen::MatrixXd spatial;          // m x P, row i = u_i
  Eigen::VectorXd singular_values;  // m, descending
  bool mean_removed = true;
  /// Product of every divisor applied by normalize_components.
  double normalization_scale = 1.0;

  int components() const noexcept { return static_cast<int>(temporal.rows()); }
  int samples() const noexcept { return static_cast<int>(temporal.cols()); }
  int locations() const noexcept { return static_cast<int>(spatial.cols()); }
};

/// Removes each location's temporal mean and keeps the top-m singular
/// triplets. Sign convention: each spatial row's largest-magnitude entry is
/// positive (flipping the temporal row with it).
SvdComponents svd_components(const DataMatrix& data, int m);

/// Divides every temporal row by the mean of the rows' standard deviations.
SvdComponents normalize_components(SvdComponents comps);

/// Directory with temporal.csv, spatial.csv, sigma.csv and meta.json.
void save_components(const std::filesystem::path& dir, const SvdComponents& comps);
SvdComponents load_components(const std::filesystem::path& dir);

struct Edge {
  int source = 0;
  int target = 0;
  double weight = 0.0;
};

struct EdgeList {
  std::vector<Edge> excitatory;  // most positive first
  std::vector<Edge> inhibitory;  // most negative first
};

/// Pixel-to-pixel weights
///   C(p, q) = sum_ij Wsum_ij * sqrt(s_i) * sqrt(s_j) * u_i(p) * u_j(q)
/// with Wsum the sum of the given coupling matrices. Since W_ij is the input
/// into component i from component j, q is reported as the source and p as
/// the target. Returns up to top_k strictly positive and top_k strictly
/// negative entries; ties break on (target, source) ascending.
///
/// Rows of C are generated one at a time and reduced into bounded heaps, so
/// memory is O(P + top_k) regardless of P.
EdgeList connectivity_projection(const Eigen::MatrixXd& spatial,
                                 const Eigen::VectorXd& singular_values,
                                 const std::vector<Eigen::MatrixXd>& couplings,
                                 int top_k);

void save_edges(const std::filesystem::path& path, const EdgeList& edges);

/// Half-open index range [begin, end).
struct Range {
  int begin = 0;
  int end = 0;
  int size() const noexcept { return end - begin; }
};

struct Segment {
  Range train;
  Range test;
  int offset = 0;
};

struct SegmentSplit {
  std::vector<Segment> segments;
};

/// Contiguous (train, test) pairs laid end to end from t = 0, or starting at
/// the given increasing offsets. Segments may not overlap.
SegmentSplit split_segments(int samples, int train_len, int test_len,
                            int n_segments,
                            const std::vector<int>& offsets = {});
inline SegmentSplit split_segments(const SvdComponents& comps, int train_len,
                                   int test_len, int n_segments,
                                   const std::vector<int>& offsets = {}) {
  return split_segments(comps.samples(), train_len, test_len, n_segments, offsets);
}

}  // namespace vdp

#include "atdoc/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "atdoc/detail/sealed_access.hpp"
#include "atdoc/rng.hpp"

namespace atdoc {

namespace {

constexpr double kPi = 3.14159265358979323846;

Matrix rows_to_matrix(const std::vector<RowVector>& rows, int dim) {
  Matrix m(static_cast<Index>(rows.size()), dim);
  for (Index i = 0; i < m.rows(); ++i) m.row(i) = rows[static_cast<std::size_t>(i)];
  return m;
}

}  // namespace

SealedLabels SealedLabels::permuted(std::uint64_t seed) const {
  std::vector<int> shuffled = labels_;
  Rng rng(derive_seed(seed, 0xA0D17));
  rng.shuffle(shuffled);
  return SealedLabels(std::move(shuffled));
}

std::string task_name(Task task) {
  switch (task) {
    case Task::Uda: return "uda";
    case Task::Ssda: return "ssda";
    case Task::Pda: return "pda";
    case Task::Ssl: return "ssl";
  }
  throw std::logic_error("task_name: unknown task");
}

Task task_from_name(const std::string& name) {
  if (name == "uda") return Task::Uda;
  if (name == "ssda") return Task::Ssda;
  if (name == "pda") return Task::Pda;
  if (name == "ssl") return Task::Ssl;
  throw std::invalid_argument("unknown task: " + name);
}

DomainDataset gen_two_moons_shift(int n_per_domain, double rotation_deg, double noise_sigma,
                                  std::uint64_t seed) {
  if (n_per_domain < 2) throw std::invalid_argument("gen_two_moons_shift: n must be >= 2");
  if (noise_sigma < 0.0) throw std::invalid_argument("gen_two_moons_shift: negative noise");

  Rng rng(derive_seed(seed, 1));
  const double theta = rotation_deg * kPi / 180.0;
  const double c = std::cos(theta);
  const double s = std::sin(theta);

  auto draw_domain = [&](bool rotate, Matrix& x, std::vector<int>& y) {
    const int n0 = n_per_domain / 2;
    x.resize(n_per_domain, 2);
    y.resize(static_cast<std::size_t>(n_per_domain));
    for (int i = 0; i < n_per_domain; ++i) {
      const int cls = i < n0 ? 0 : 1;
      const double t = rng.uniform(0.0, kPi);
      // Interleaved half-circles centered at the origin, so rotating about
      // the origin rotates the distribution in place.
      double px, py;
      if (cls == 0) {
        px = std::cos(t) - 0.5;
        py = std::sin(t) - 0.25;
      } else {
        px = 0.5 - std::cos(t);
        py = 0.25 - std::sin(t);
      }
      px += noise_sigma * rng.normal();
      py += noise_sigma * rng.normal();
      if (rotate) {
        const double rx = c * px - s * py;
        const double ry = s * px + c * py;
        px = rx;
        py = ry;
      }
      x(i, 0) = px;
      x(i, 1) = py;
      y[static_cast<std::size_t>(i)] = cls;
    }
  };

  DomainDataset ds;
  ds.class_count = 2;
  ds.feature_dim = 2;
  draw_domain(false, ds.source_x, ds.source_y);
  std::vector<int> target_y;
  draw_domain(true, ds.target_unlabeled_x, target_y);
  ds.target_unlabeled_eval = SealedLabels(std::move(target_y));
  return ds;
}

DomainDataset gen_gaussian_blobs_shift(int class_count, int dim, int n_per_class,
                                       const RowVector& shift, std::uint64_t seed) {
  if (class_count < 2) throw std::invalid_argument("gen_gaussian_blobs_shift: need K >= 2");
  if (dim < 2) throw std::invalid_argument("gen_gaussian_blobs_shift: need d >= 2");
  if (n_per_class < 1) throw std::invalid_argument("gen_gaussian_blobs_shift: need n >= 1");
  if (shift.size() != dim) {
    throw std::invalid_argument("gen_gaussian_blobs_shift: shift dimension mismatch");
  }

  // Circle layout in dims (0, 1): adjacent means sit exactly 4 apart.
  const double radius = 2.0 / std::sin(kPi / class_count);
  Matrix means = Matrix::Zero(class_count, dim);
  for (int j = 0; j < class_count; ++j) {
    means(j, 0) = radius * std::cos(2.0 * kPi * j / class_count);
    means(j, 1) = radius * std::sin(2.0 * kPi * j / class_count);
  }

  Rng rng(derive_seed(seed, 2));
  auto draw_domain = [&](bool shifted, Matrix& x, std::vector<int>& y) {
    const int n = class_count * n_per_class;
    x.resize(n, dim);
    y.resize(static_cast<std::size_t>(n));
    int row = 0;
    for (int j = 0; j < class_count; ++j) {
      for (int i = 0; i < n_per_class; ++i, ++row) {
        for (int k = 0; k < dim; ++k) {
          x(row, k) = means(j, k) + rng.normal() + (shifted ? shift[k] : 0.0);
        }
        y[static_cast<std::size_t>(row)] = j;
      }
    }
  };

  DomainDataset ds;
  ds.class_count = class_count;
  ds.feature_dim = dim;
  draw_domain(false, ds.source_x, ds.source_y);
  std::vector<int> target_y;
  draw_domain(true, ds.target_unlabeled_x, target_y);
  ds.target_unlabeled_eval = SealedLabels(std::move(target_y));
  return ds;
}

namespace {

/// Move `shots` seeded-random samples per class out of target_unlabeled.
DomainDataset move_shots(const DomainDataset& ds, int shots, std::uint64_t seed) {
  const auto& truth = SealedAccess::labels(ds.target_unlabeled_eval);
  Rng rng(derive_seed(seed, 3));
  std::vector<bool> moved(truth.size(), false);
  std::vector<Index> labeled_rows;
  for (int cls = 0; cls < ds.class_count; ++cls) {
    std::vector<Index> candidates;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      if (truth[i] == cls) candidates.push_back(static_cast<Index>(i));
    }
    if (static_cast<int>(candidates.size()) < shots) {
      throw std::runtime_error("apply_split: insufficient samples for class " +
                               std::to_string(cls));
    }
    rng.shuffle(candidates);
    for (int k = 0; k < shots; ++k) {
      moved[static_cast<std::size_t>(candidates[static_cast<std::size_t>(k)])] = true;
      labeled_rows.push_back(candidates[static_cast<std::size_t>(k)]);
    }
  }
  std::sort(labeled_rows.begin(), labeled_rows.end());

  DomainDataset out;
  out.class_count = ds.class_count;
  out.feature_dim = ds.feature_dim;
  out.source_x = ds.source_x;
  out.source_y = ds.source_y;

  out.target_labeled_x.resize(static_cast<Index>(labeled_rows.size()), ds.feature_dim);
  for (Index i = 0; i < static_cast<Index>(labeled_rows.size()); ++i) {
    const Index row = labeled_rows[static_cast<std::size_t>(i)];
    out.target_labeled_x.row(i) = ds.target_unlabeled_x.row(row);
    out.target_labeled_y.push_back(truth[static_cast<std::size_t>(row)]);
  }

  std::vector<int> kept_truth;
  std::vector<Index> kept_rows;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (moved[i]) continue;
    kept_rows.push_back(static_cast<Index>(i));
    kept_truth.push_back(truth[i]);
  }
  out.target_unlabeled_x.resize(static_cast<Index>(kept_rows.size()), ds.feature_dim);
  for (Index i = 0; i < static_cast<Index>(kept_rows.size()); ++i) {
    out.target_unlabeled_x.row(i) = ds.target_unlabeled_x.row(kept_rows[static_cast<std::size_t>(i)]);
  }
  out.target_unlabeled_eval = SealedLabels(std::move(kept_truth));
  return out;
}

}  // namespace

DomainDataset apply_split(const DomainDataset& ds, const SplitSpec& spec) {
  if (ds.target_labeled_count() != 0) {
    throw std::invalid_argument("apply_split: expected a pre-split dataset");
  }
  switch (spec.task) {
    case Task::Uda:
      return ds;
    case Task::Ssda: {
      if (spec.shots_per_class < 1) {
        throw std::invalid_argument("apply_split: SSDA needs shots_per_class >= 1");
      }
      return move_shots(ds, spec.shots_per_class, spec.seed);
    }
    case Task::Ssl: {
      if (spec.shots_per_class < 1) {
        throw std::invalid_argument("apply_split: SSL needs shots_per_class >= 1");
      }
      DomainDataset out = move_shots(ds, spec.shots_per_class, spec.seed);
      out.source_x.resize(0, ds.feature_dim);
      out.source_y.clear();
      return out;
    }
    case Task::Pda: {
      if (spec.target_class_count < 1 || spec.target_class_count > ds.class_count) {
        throw std::invalid_argument("apply_split: PDA needs 1 <= C_t <= K");
      }
      const auto& truth = SealedAccess::labels(ds.target_unlabeled_eval);
      DomainDataset out;
      out.class_count = ds.class_count;  // source label space is untouched
      out.feature_dim = ds.feature_dim;
      out.source_x = ds.source_x;
      out.source_y = ds.source_y;
      std::vector<int> kept_truth;
      std::vector<Index> kept_rows;
      for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] >= 0 && truth[i] < spec.target_class_count) {
          kept_rows.push_back(static_cast<Index>(i));
          kept_truth.push_back(truth[i]);
        }
      }
      out.target_unlabeled_x.resize(static_cast<Index>(kept_rows.size()), ds.feature_dim);
      for (Index i = 0; i < static_cast<Index>(kept_rows.size()); ++i) {
        out.target_unlabeled_x.row(i) =
            ds.target_unlabeled_x.row(kept_rows[static_cast<std::size_t>(i)]);
      }
      out.target_unlabeled_eval = SealedLabels(std::move(kept_truth));
      return out;
    }
  }
  throw std::logic_error("apply_split: unknown task");
}

namespace {

void write_row(std::ostream& out, const char* domain, int label,
               const Eigen::Ref<const RowVector>& x) {
  out << domain << ',' << label;
  for (Index k = 0; k < x.size(); ++k) out << ',' << x[k];
  out << '\n';
}

}  // namespace

void save_csv(const DomainDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_csv: cannot open " + path);
  out << std::setprecision(17);
  out << "domain,label";
  for (int k = 0; k < ds.feature_dim; ++k) out << ",f" << k;
  out << '\n';
  for (Index i = 0; i < ds.source_count(); ++i) {
    write_row(out, "source", ds.source_y[static_cast<std::size_t>(i)], ds.source_x.row(i));
  }
  for (Index i = 0; i < ds.target_labeled_count(); ++i) {
    write_row(out, "target", ds.target_labeled_y[static_cast<std::size_t>(i)],
              ds.target_labeled_x.row(i));
  }
  const auto& truth = SealedAccess::labels(ds.target_unlabeled_eval);
  for (Index i = 0; i < ds.target_unlabeled_count(); ++i) {
    write_row(out, "target", truth[static_cast<std::size_t>(i)], ds.target_unlabeled_x.row(i));
  }
}

DomainDataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_csv: cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("load_csv: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.size() < 3 || header[0] != "domain" || header[1] != "label") {
    throw std::runtime_error("load_csv: bad header, expected domain,label,f0,...");
  }
  const int dim = static_cast<int>(header.size()) - 2;

  std::vector<Sample> samples;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (static_cast<int>(cells.size()) != dim + 2) {
      throw std::runtime_error("load_csv: line " + std::to_string(line_no) +
                               ": expected " + std::to_string(dim + 2) + " columns, got " +
                               std::to_string(cells.size()));
    }
    Sample sample;
    if (cells[0] == "source") {
      sample.domain = Domain::Source;
    } else if (cells[0] == "target") {
      sample.domain = Domain::Target;
    } else {
      throw std::runtime_error("load_csv: line " + std::to_string(line_no) +
                               ": unknown domain '" + cells[0] + "'");
    }
    try {
      std::size_t pos = 0;
      sample.y = std::stoi(cells[1], &pos);
      if (pos != cells[1].size()) throw std::invalid_argument("trailing characters");
      sample.x.resize(dim);
      for (int k = 0; k < dim; ++k) {
        sample.x[k] = std::stod(cells[static_cast<std::size_t>(k + 2)], &pos);
        if (pos != cells[static_cast<std::size_t>(k + 2)].size()) {
          throw std::invalid_argument("trailing characters");
        }
      }
    } catch (const std::exception&) {
      throw std::runtime_error("load_csv: line " + std::to_string(line_no) +
                               ": malformed value");
    }
    if (sample.y < kUnlabeled) {
      throw std::runtime_error("load_csv: line " + std::to_string(line_no) +
                               ": label must be >= -1");
    }
    if (sample.domain == Domain::Source && sample.y == kUnlabeled) {
      throw std::runtime_error("load_csv: line " + std::to_string(line_no) +
                               ": source rows must be labeled");
    }
    samples.push_back(std::move(sample));
  }

  std::vector<RowVector> source_rows, target_rows;
  std::vector<int> source_y, target_y;
  int max_label = -1;
  for (auto& sample : samples) {
    max_label = std::max(max_label, sample.y);
    if (sample.domain == Domain::Source) {
      source_rows.push_back(std::move(sample.x));
      source_y.push_back(sample.y);
    } else {
      target_rows.push_back(std::move(sample.x));
      target_y.push_back(sample.y);
    }
  }
  if (max_label < 0) throw std::runtime_error("load_csv: no labeled rows");

  DomainDataset ds;
  ds.feature_dim = dim;
  ds.class_count = max_label + 1;
  ds.source_x = rows_to_matrix(source_rows, dim);
  ds.source_y = std::move(source_y);
  ds.target_labeled_x.resize(0, dim);
  ds.target_unlabeled_x = rows_to_matrix(target_rows, dim);
  ds.target_unlabeled_eval = SealedLabels(std::move(target_y));
  return ds;
}

}  // namespace atdoc

#include "freqrise/masks.hpp"

#include <charconv>
#include <cmath>

#include "freqrise/error.hpp"
#include "freqrise/rng.hpp"

namespace freqrise {
namespace {

constexpr std::uint64_t kShiftStream = 0x5348494654ULL;  // "SHIFT"

void check_probability(double p) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("Bernoulli probability must lie strictly inside (0, 1)");
}

double bernoulli(std::uint64_t seed, std::uint64_t index, std::uint64_t element, double p) {
  return to_unit(hash_combine(seed, index, element)) < p ? 1.0 : 0.0;
}

// Position of target coordinate t on a grid axis, as (node, fraction).
struct AxisPoint {
  std::size_t node;
  double frac;
};

AxisPoint locate(std::size_t t, std::size_t target, std::size_t nodes, double offset, bool extended) {
  if (target == 1) return {0, 0.0};
  // Spacing between grid nodes measured in target samples.
  const std::size_t intervals = extended ? nodes - 2 : nodes - 1;
  double g = static_cast<double>(t) * static_cast<double>(intervals) / static_cast<double>(target - 1) + offset;
  auto node = static_cast<std::size_t>(std::floor(g));
  if (node >= nodes - 1) return {nodes - 2, 1.0};
  return {node, g - static_cast<double>(node)};
}

}  // namespace

std::string to_string(const GridSpec& g) {
  std::string out;
  for (std::size_t i = 0; i < g.dims.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(g.dims[i]);
  }
  return out;
}

GridSpec parse_grid(std::string_view text) {
  GridSpec g;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto next = text.find('x', pos);
    auto part = text.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos);
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (part.empty() || ec != std::errc{} || ptr != part.data() + part.size())
      throw InvalidGrid("grid must look like 200 or 25x25, got '" + std::string(text) + "'");
    g.dims.push_back(v);
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  if (g.dims.size() > 2) throw InvalidGrid("grid must have one or two dimensions");
  return g;
}

void validate_grid(const GridSpec& grid, const DomainShape& target) {
  if (grid.dims.empty() || grid.dims.size() > 2) throw InvalidGrid("grid must have one or two dimensions");
  const bool two_d = grid.dims.size() == 2;
  if (two_d != (target.rows > 1))
    throw InvalidGrid("grid dimensionality " + std::to_string(grid.dims.size()) +
                      " does not match the target shape");
  const std::size_t target_dims[2] = {two_d ? target.rows : target.cols, target.cols};
  for (std::size_t d = 0; d < grid.dims.size(); ++d) {
    if (grid.dims[d] < 2) throw InvalidGrid("grid dimensions must be at least 2");
    if (grid.dims[d] > target_dims[d]) throw InvalidGrid("grid dimension exceeds the target dimension");
  }
}

void upsample_grid(std::span<const double> grid_values, const GridSpec& grid, const DomainShape& target,
                   std::span<double> out, std::span<const double> offset) {
  const bool extended = !offset.empty();
  if (out.size() != target.size()) throw ShapeError("upsample output size does not match target");
  if (extended && offset.size() != grid.dims.size()) throw ShapeError("one offset per grid dimension required");
  const std::size_t extra = extended ? 1 : 0;

  if (grid.dims.size() == 1) {
    const std::size_t nodes = grid.dims[0] + extra;
    if (grid_values.size() != nodes) throw ShapeError("grid value count mismatch");
    for (std::size_t t = 0; t < target.cols; ++t) {
      auto [j, a] = locate(t, target.cols, nodes, extended ? offset[0] : 0.0, extended);
      out[t] = (1.0 - a) * grid_values[j] + a * grid_values[j + 1];
    }
    return;
  }

  const std::size_t rows = grid.dims[0] + extra;
  const std::size_t cols = grid.dims[1] + extra;
  if (grid_values.size() != rows * cols) throw ShapeError("grid value count mismatch");
  std::vector<AxisPoint> col_points(target.cols);
  for (std::size_t c = 0; c < target.cols; ++c)
    col_points[c] = locate(c, target.cols, cols, extended ? offset[1] : 0.0, extended);
  for (std::size_t r = 0; r < target.rows; ++r) {
    auto [i, a] = locate(r, target.rows, rows, extended ? offset[0] : 0.0, extended);
    const double* g0 = grid_values.data() + i * cols;
    const double* g1 = g0 + cols;
    for (std::size_t c = 0; c < target.cols; ++c) {
      auto [j, b] = col_points[c];
      const double top = (1.0 - b) * g0[j] + b * g0[j + 1];
      const double bottom = (1.0 - b) * g1[j] + b * g1[j + 1];
      out[r * target.cols + c] = (1.0 - a) * top + a * bottom;
    }
  }
}

MaskSampler::MaskSampler(MaskSpec spec) : spec_(std::move(spec)) {
  check_probability(spec_.p);
  if (spec_.shape.size() == 0) throw ShapeError("mask shape must be non-empty");
  if (spec_.grid) validate_grid(*spec_.grid, spec_.shape);
}

void MaskSampler::generate(std::uint64_t index, std::span<double> out) const {
  if (out.size() != mask_size()) throw ShapeError("mask buffer size mismatch");
  if (!spec_.grid) {
    for (std::size_t e = 0; e < out.size(); ++e) out[e] = bernoulli(spec_.seed, index, e, spec_.p);
    return;
  }
  const auto& dims = spec_.grid->dims;
  const std::size_t extra = spec_.shift ? 1 : 0;
  std::size_t nodes = 1;
  for (std::size_t d : dims) nodes *= d + extra;
  std::vector<double> values(nodes);
  for (std::size_t e = 0; e < nodes; ++e) values[e] = bernoulli(spec_.seed, index, e, spec_.p);
  std::vector<double> offset;
  if (spec_.shift) {
    for (std::size_t d = 0; d < dims.size(); ++d)
      offset.push_back(to_unit(hash_combine(spec_.seed ^ kShiftStream, index, d)));
  }
  upsample_grid(values, *spec_.grid, spec_.shape, out, offset);
}

namespace {

MaskBatch materialize(const MaskSampler& sampler, std::size_t n) {
  if (n == 0) throw InvalidArgument("mask count must be at least 1");
  const auto& spec = sampler.spec();
  MaskBatch batch;
  batch.shape = spec.shape;
  batch.count = n;
  batch.seed = spec.seed;
  batch.bernoulli_p = spec.p;
  batch.grid = spec.grid;
  batch.values.resize(n * spec.shape.size());
  for (std::size_t i = 0; i < n; ++i)
    sampler.generate(i, std::span(batch.values).subspan(i * spec.shape.size(), spec.shape.size()));
  return batch;
}

}  // namespace

MaskBatch sample_binary_masks(const DomainShape& shape, double p, std::size_t n, std::uint64_t seed) {
  return materialize(MaskSampler({shape, p, std::nullopt, false, seed}), n);
}

MaskBatch sample_grid_masks(const GridSpec& grid, const DomainShape& target, double p, std::size_t n,
                            std::uint64_t seed, bool shift) {
  return materialize(MaskSampler({target, p, grid, shift, seed}), n);
}

std::vector<double> expected_mask(const MaskBatch& batch) {
  if (batch.count == 0) throw InvalidArgument("expected_mask of an empty batch");
  const std::size_t d = batch.shape.size();
  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < batch.count; ++i) {
    auto m = batch.mask(i);
    for (std::size_t e = 0; e < d; ++e) mean[e] += m[e];
  }
  for (double& v : mean) v /= static_cast<double>(batch.count);
  return mean;
}

}  // namespace freqrise

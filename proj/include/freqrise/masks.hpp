#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "freqrise/transforms.hpp"

namespace freqrise {

// Coarse grid on which Bernoulli values are drawn before interpolation:
// one entry for 1-D targets, two (rows x cols) for time-frequency targets.
struct GridSpec {
  std::vector<std::size_t> dims;

  bool operator==(const GridSpec&) const = default;
};

std::string to_string(const GridSpec& g);  // "200" or "25x25"
GridSpec parse_grid(std::string_view text);

// Throws InvalidGrid unless the grid has the target's dimensionality and each
// dimension lies in [2, target dimension].
void validate_grid(const GridSpec& grid, const DomainShape& target);

// Align-corners linear (1-D) / bilinear (2-D) upsampling: grid node j sits at
// target coordinate j * (D - 1) / (g - 1). With `offset` (in grid cells,
// per dimension, in [0, 1)) the target is read from a grid with one extra
// node, shifted by the offset.
void upsample_grid(std::span<const double> grid_values, const GridSpec& grid, const DomainShape& target,
                   std::span<double> out, std::span<const double> offset = {});

struct MaskSpec {
  DomainShape shape;
  double p = 0.5;
  std::optional<GridSpec> grid;
  bool shift = false;
  std::uint64_t seed = 0;
};

// Mask i is a pure function of (spec, i); masks can be produced in any order
// and on any thread.
class MaskSampler {
 public:
  explicit MaskSampler(MaskSpec spec);

  const MaskSpec& spec() const noexcept { return spec_; }
  std::size_t mask_size() const noexcept { return spec_.shape.size(); }

  void generate(std::uint64_t index, std::span<double> out) const;

 private:
  MaskSpec spec_;
};

struct MaskBatch {
  DomainShape shape;
  std::size_t count = 0;
  std::vector<double> values;  // count x shape.size(), row-major
  std::uint64_t seed = 0;
  double bernoulli_p = 0.5;
  std::optional<GridSpec> grid;

  std::span<const double> mask(std::size_t i) const {
    return std::span(values).subspan(i * shape.size(), shape.size());
  }
};

MaskBatch sample_binary_masks(const DomainShape& shape, double p, std::size_t n, std::uint64_t seed);
MaskBatch sample_grid_masks(const GridSpec& grid, const DomainShape& target, double p, std::size_t n,
                            std::uint64_t seed, bool shift = false);

// Elementwise arithmetic mean of the batch.
std::vector<double> expected_mask(const MaskBatch& batch);

}  // namespace freqrise

#pragma once

#include <cstddef>
#include <memory>
#include <numeric>
#include <span>
#include <vector>

#include "netepi/errors.hpp"

namespace netepi {

/// Shape of one node population: its degree support, number of infected
/// types (e.g. untreated/treated) and disease stages per type.
struct GroupShape {
  int k_min = 1;
  int k_max = 1;
  int types = 1;
  int stages = 1;

  std::size_t degrees() const noexcept { return static_cast<std::size_t>(k_max - k_min + 1); }
  std::size_t blocks() const noexcept { return static_cast<std::size_t>(2 + types * stages); }
  friend bool operator==(const GroupShape&, const GroupShape&) = default;
};

/// Flat layout of a state vector. Per group the blocks are
///   s[K] | rho[type 0, stage 0][K] | ... | rho[type T-1, stage S-1][K] | removed[K]
class StateLayout {
 public:
  explicit StateLayout(std::vector<GroupShape> groups) : groups_(std::move(groups)) {
    if (groups_.empty()) throw ParameterError("state layout needs at least one group");
    std::size_t off = 0;
    for (const auto& g : groups_) {
      if (g.k_min < 1 || g.k_max < g.k_min || g.types < 1 || g.stages < 1) {
        throw ParameterError("invalid group shape");
      }
      offsets_.push_back(off);
      off += g.degrees() * g.blocks();
    }
    size_ = off;
  }

  std::size_t groups() const noexcept { return groups_.size(); }
  const GroupShape& group(std::size_t g) const { return groups_.at(g); }
  std::size_t size() const noexcept { return size_; }

  std::size_t s_offset(std::size_t g) const { return offsets_.at(g); }
  std::size_t rho_offset(std::size_t g, int type, int stage) const {
    const auto& sh = groups_.at(g);
    return offsets_[g] + sh.degrees() * static_cast<std::size_t>(1 + type * sh.stages + stage);
  }
  std::size_t removed_offset(std::size_t g) const {
    const auto& sh = groups_.at(g);
    return offsets_[g] + sh.degrees() * (sh.blocks() - 1);
  }

  friend bool operator==(const StateLayout& a, const StateLayout& b) { return a.groups_ == b.groups_; }

 private:
  std::vector<GroupShape> groups_;
  std::vector<std::size_t> offsets_;
  std::size_t size_ = 0;
};

/// Degree-stratified compartment fractions: susceptible s_k, infected rho_k
/// (per type and stage) and removed per degree, for one or two populations.
/// The aggregate removed fraction r is the sum of the per-degree removed block.
class StratifiedState {
 public:
  StratifiedState() = default;
  explicit StratifiedState(std::shared_ptr<const StateLayout> layout)
      : layout_(std::move(layout)), values_(layout_->size(), 0.0) {}

  const StateLayout& layout() const noexcept { return *layout_; }
  const std::shared_ptr<const StateLayout>& layout_ptr() const noexcept { return layout_; }
  const GroupShape& shape(std::size_t g = 0) const { return layout_->group(g); }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  std::span<double> s(std::size_t g = 0) { return block(layout_->s_offset(g), g); }
  std::span<const double> s(std::size_t g = 0) const { return block(layout_->s_offset(g), g); }
  std::span<double> rho(std::size_t g, int type = 0, int stage = 0) {
    return block(layout_->rho_offset(g, type, stage), g);
  }
  std::span<const double> rho(std::size_t g, int type = 0, int stage = 0) const {
    return block(layout_->rho_offset(g, type, stage), g);
  }
  std::span<double> removed(std::size_t g = 0) { return block(layout_->removed_offset(g), g); }
  std::span<const double> removed(std::size_t g = 0) const { return block(layout_->removed_offset(g), g); }

  /// Infected fraction at degree k summed over stages, for one type or all (type < 0).
  double infected_at(std::size_t g, int k, int type = -1) const {
    const auto& sh = shape(g);
    const auto i = static_cast<std::size_t>(k - sh.k_min);
    double v = 0.0;
    for (int t = 0; t < sh.types; ++t) {
      if (type >= 0 && t != type) continue;
      for (int st = 0; st < sh.stages; ++st) v += rho(g, t, st)[i];
    }
    return v;
  }

  double total_susceptible() const {
    double v = 0.0;
    for (std::size_t g = 0; g < layout_->groups(); ++g) v += sum(s(g));
    return v;
  }
  double total_infected() const {
    double v = 0.0;
    for (std::size_t g = 0; g < layout_->groups(); ++g) {
      const auto& sh = shape(g);
      for (int t = 0; t < sh.types; ++t)
        for (int st = 0; st < sh.stages; ++st) v += sum(rho(g, t, st));
    }
    return v;
  }
  double r() const {
    double v = 0.0;
    for (std::size_t g = 0; g < layout_->groups(); ++g) v += sum(removed(g));
    return v;
  }
  double total() const { return total_susceptible() + total_infected() + r(); }

  friend bool operator==(const StratifiedState& a, const StratifiedState& b) {
    return *a.layout_ == *b.layout_ && a.values_ == b.values_;
  }

 private:
  static double sum(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0); }
  std::span<double> block(std::size_t off, std::size_t g) {
    return std::span<double>(values_).subspan(off, layout_->group(g).degrees());
  }
  std::span<const double> block(std::size_t off, std::size_t g) const {
    return std::span<const double>(values_).subspan(off, layout_->group(g).degrees());
  }

  std::shared_ptr<const StateLayout> layout_;
  std::vector<double> values_;
};

}  // namespace netepi

#include "tfqkd/channel.hpp"

#include <cmath>
#include <stdexcept>

namespace tfqkd::channel {

double transmittance(const FiberSpec& f) {
  if (!(f.length_km >= 0.0) || !(f.alpha_db_per_km >= 0.0)) {
    throw std::invalid_argument("FiberSpec fields must be >= 0");
  }
  return std::pow(10.0, -f.alpha_db_per_km * f.length_km / 10.0);
}

PhaseDriftProcess::PhaseDriftProcess(double drift_std_rad_per_sqrt_s,
                                     std::uint64_t seed, double grid_dt_s)
    : drift_std_(drift_std_rad_per_sqrt_s),
      grid_dt_(grid_dt_s),
      seed_(seed),
      rng_(seed) {
  if (!(drift_std_ >= 0.0)) {
    throw std::invalid_argument("drift_std must be >= 0");
  }
  if (!(grid_dt_ > 0.0)) {
    throw std::invalid_argument("grid_dt must be > 0");
  }
  path_.push_back(0.0);
}

void PhaseDriftProcess::set_schedule(std::vector<Disturbance> schedule) {
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (schedule[i].end_s < schedule[i].start_s) {
      throw std::invalid_argument("disturbance interval reversed");
    }
    if (i > 0 && schedule[i].start_s < schedule[i - 1].end_s) {
      throw std::invalid_argument(
          "disturbance schedule must be time-ordered and non-overlapping");
    }
  }
  schedule_ = std::move(schedule);
}

void PhaseDriftProcess::extend_to(std::size_t index) const {
  const double step = drift_std_ * std::sqrt(grid_dt_);
  while (path_.size() <= index) {
    path_.push_back(path_.back() + step * rng_.normal());
  }
}

void PhaseDriftProcess::pre_sample(double t_max_s) {
  extend_to(static_cast<std::size_t>(std::floor(t_max_s / grid_dt_)) + 1);
}

double PhaseDriftProcess::drift_phase_at(double t_s) const {
  if (t_s <= 0.0 || drift_std_ == 0.0) return 0.0;
  const auto index = static_cast<std::size_t>(std::floor(t_s / grid_dt_));
  extend_to(index);
  return path_[index];
}

double PhaseDriftProcess::disturbance_at(double t_s) const {
  double sum = 0.0;
  for (const auto& d : schedule_) {
    if (t_s >= d.start_s && t_s < d.end_s) sum += d.phase_rad;
  }
  return sum;
}

double sagnac_residual_phase(const PhaseDriftProcess& p, double loop_delay_s,
                             double t_s) {
  if (!(loop_delay_s >= 0.0)) {
    throw std::invalid_argument("loop_delay_s must be >= 0");
  }
  double residual = p.disturbance_at(t_s);
  if (loop_delay_s > 0.0) {
    residual += p.drift_phase_at(t_s) - p.drift_phase_at(t_s - loop_delay_s);
  }
  return residual;
}

bool BackscatterParams::valid() const {
  return repetition_rate_hz > 0.0 && mean_photons_out > 0.0 && beta >= 0.0 &&
         gate_on_s > 0.0 && eta_det >= 0.0 && eta_det <= 1.0;
}

double backscatter_click_probability(const BackscatterParams& bp,
                                     const FiberSpec& f, bool* clamped) {
  if (!bp.valid()) {
    throw std::invalid_argument("invalid BackscatterParams");
  }
  const double eta = transmittance(f);
  const double p = 2.0 * (1.0 - eta) * bp.repetition_rate_hz *
                   bp.mean_photons_out * bp.beta * bp.gate_on_s * bp.eta_det;
  if (clamped) *clamped = p > 1.0;
  return p > 1.0 ? 1.0 : (p < 0.0 ? 0.0 : p);
}

}  // namespace tfqkd::channel

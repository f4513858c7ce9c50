#include "pqpan/link_model.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <string>
#include <utility>

#include "pqpan/errors.hpp"

namespace pqpan {

namespace {

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

constexpr std::size_t kSduOverhead = kAttHeaderBytes + kL2capHeaderBytes;

}  // namespace

std::string_view to_string(Direction dir) {
  return dir == Direction::CentralToPeripheral ? "central->peripheral"
                                               : "peripheral->central";
}

Direction reverse(Direction dir) {
  return dir == Direction::CentralToPeripheral ? Direction::PeripheralToCentral
                                               : Direction::CentralToPeripheral;
}

void LinkConfig::validate() const {
  if (att_mtu < kMinAttMtu) {
    throw InvalidConfig("att_mtu must be >= 23, got " + std::to_string(att_mtu));
  }
  if (ll_pdu < kMinLlPdu || ll_pdu > kMaxLlPdu) {
    throw InvalidConfig("ll_pdu must be within 27..251, got " +
                        std::to_string(ll_pdu));
  }
  if (!(phy_rate_bps > 0.0)) throw InvalidConfig("phy_rate must be positive");
  if (!(ifs_s >= 0.0)) throw InvalidConfig("ifs must be non-negative");
  if (ifs_slots != 1 && ifs_slots != 2) {
    throw InvalidConfig("ifs_slots must be 1 or 2, got " +
                        std::to_string(ifs_slots));
  }
}

std::vector<LinkConfig> LinkConfig::measurement_grid() {
  std::vector<LinkConfig> grid;
  for (auto [att, ll] : {std::pair{65, 27}, {65, 69}, {104, 27}, {104, 108},
                         {204, 27}, {204, 208}, {404, 27}, {404, 251}}) {
    LinkConfig cfg;
    cfg.att_mtu = att;
    cfg.ll_pdu = ll;
    grid.push_back(cfg);
  }
  return grid;
}

std::size_t FragmentationPlan::ack_count() const {
  std::size_t n = 0;
  for (const auto& f : frames) n += f.is_ack ? 1 : 0;
  return n;
}

FrameCounts count_frames(std::size_t artifact_size, const LinkConfig& cfg) {
  cfg.validate();
  if (artifact_size == 0) return {};
  const std::size_t cap = cfg.att_value_capacity();
  const std::size_t ll = static_cast<std::size_t>(cfg.ll_pdu);
  const std::size_t full = artifact_size / cap;
  const std::size_t last = artifact_size % cap;

  FrameCounts counts;
  counts.att_pdus = full + (last > 0 ? 1 : 0);
  counts.ll_data_pdus = full * ceil_div(cap + kSduOverhead, ll);
  if (last > 0) counts.ll_data_pdus += ceil_div(last + kSduOverhead, ll);
  return counts;
}

FragmentationPlan plan_transfer(std::size_t artifact_size, const LinkConfig& cfg,
                                Direction data_direction) {
  cfg.validate();
  if (artifact_size == 0) throw InvalidConfig("artifact size must be >= 1");

  const std::size_t cap = cfg.att_value_capacity();
  const std::size_t ll = static_cast<std::size_t>(cfg.ll_pdu);

  FragmentationPlan plan;
  for (std::size_t remaining = artifact_size; remaining > 0;) {
    const std::size_t value = std::min(cap, remaining);
    remaining -= value;
    plan.att_value_sizes.push_back(value);

    for (std::size_t sdu = value + kSduOverhead; sdu > 0;) {
      const std::size_t chunk = std::min(ll, sdu);
      sdu -= chunk;
      plan.frames.push_back({data_direction, chunk, kLlOverheadBytes, false});
      plan.frames.push_back({reverse(data_direction), 0, kLlOverheadBytes, true});
      ++plan.ll_data_pdu_count;
    }
  }
  plan.att_pdu_count = plan.att_value_sizes.size();
  return plan;
}

double frame_airtime_s(const LinkFrame& frame, const LinkConfig& cfg) {
  return 8.0 * static_cast<double>(frame.on_air_bytes()) / cfg.phy_rate_bps;
}

TimeBudget airtime(const FragmentationPlan& plan, const LinkConfig& cfg) {
  cfg.validate();
  const OnAirBytes bytes = bytes_on_air(plan);
  TimeBudget budget;
  budget.t_tx_s = 8.0 * static_cast<double>(bytes.tx) / cfg.phy_rate_bps;
  budget.t_rx_s = 8.0 * static_cast<double>(bytes.rx) / cfg.phy_rate_bps;
  budget.t_ifs_s = static_cast<double>(cfg.ifs_slots) *
                   static_cast<double>(plan.ll_data_pdu_count) * cfg.ifs_s;
  return budget;
}

OnAirBytes bytes_on_air(const FragmentationPlan& plan) {
  OnAirBytes out;
  for (const auto& f : plan.frames) {
    if (f.is_ack) {
      out.rx += f.on_air_bytes();
    } else {
      out.tx += f.on_air_bytes();
    }
  }
  return out;
}

std::string plan_to_json(const FragmentationPlan& plan, const LinkConfig& cfg) {
  nlohmann::json frames = nlohmann::json::array();
  for (const auto& f : plan.frames) {
    frames.push_back({{"dir", to_string(f.direction)},
                      {"payload_B", f.payload_bytes},
                      {"overhead_B", f.overhead_bytes},
                      {"is_ack", f.is_ack}});
  }
  nlohmann::json doc = {
      {"att_mtu", cfg.att_mtu},
      {"ll_pdu", cfg.ll_pdu},
      {"att_pdu_count", plan.att_pdu_count},
      {"ll_data_pdu_count", plan.ll_data_pdu_count},
      {"att_value_sizes", plan.att_value_sizes},
      {"frames", std::move(frames)},
  };
  return doc.dump(2);
}

}  // namespace pqpan
